//! Punctuation normalization and removal of non-text characters.
//!
//! The mapping table (version 1):
//!
//! | input | output |
//! |---|---|
//! | U+2018 U+2019 U+201A U+201B U+2032 (single quotes, prime) | `'` |
//! | U+201C U+201D U+201E U+201F U+00AB U+00BB U+2033 (double quotes, guillemets) | `"` |
//! | U+2010–U+2015 U+2212 (hyphens, dashes, minus) | `-` |
//! | U+2026 (ellipsis) | `.` |
//! | U+FF01–U+FF5E (full-width ASCII) | ASCII |
//! | U+060C U+061B U+061F (Arabic comma, semicolon, question mark) | `,` `;` `?` |
//! | U+00A0, U+2000–U+200A, U+202F, U+205F, U+3000, tab, CR, LF | space |
//! | other control characters, zero-width and bidi format characters, U+00AD, U+FEFF, U+FFFD, private use | removed |
//!
//! Runs of spaces collapse to one and the result is trimmed. For Arabic the
//! harakat U+064B–U+0652, the superscript alef U+0670 and the tatweel U+0640
//! are removed as well.
//!
//! Every rule maps one character to at most one character, so the output is
//! never longer (in code points) than the input.

pub const TABLE_VERSION: u32 = 1;

/// Language codes treated as Arabic.
pub fn is_arabic(language: &str) -> bool {
    matches!(language, "ar" | "ara" | "arb")
}

fn is_arabic_mark(c: char) -> bool {
    matches!(c, '\u{064B}'..='\u{0652}' | '\u{0670}' | '\u{0640}')
}

fn map_char(c: char) -> Option<char> {
    let out = match c {
        '\u{2018}' | '\u{2019}' | '\u{201A}' | '\u{201B}' | '\u{2032}' => '\'',
        '\u{201C}' | '\u{201D}' | '\u{201E}' | '\u{201F}' | '\u{00AB}' | '\u{00BB}' | '\u{2033}' => '"',
        '\u{2010}'..='\u{2015}' | '\u{2212}' => '-',
        '\u{2026}' => '.',
        '\u{FF01}'..='\u{FF5E}' => char::from_u32(c as u32 - 0xFEE0).unwrap_or(c),
        '\u{060C}' => ',',
        '\u{061B}' => ';',
        '\u{061F}' => '?',
        '\u{00A0}' | '\u{2000}'..='\u{200A}' | '\u{202F}' | '\u{205F}' | '\u{3000}' => ' ',
        '\t' | '\n' | '\r' => ' ',
        '\u{200B}'..='\u{200F}'
        | '\u{202A}'..='\u{202E}'
        | '\u{2060}'..='\u{2064}'
        | '\u{2066}'..='\u{2069}'
        | '\u{00AD}'
        | '\u{FEFF}'
        | '\u{FFFD}'
        | '\u{E000}'..='\u{F8FF}' => return None,
        c if c.is_control() => return None,
        c => c,
    };
    Some(out)
}

/// Normalizes one line of text for `language`. Total and idempotent.
pub fn normalize(text: &str, language: &str) -> String {
    let arabic = is_arabic(language);
    let mut out = String::with_capacity(text.len());
    let mut pending_space = false;
    for c in text.chars() {
        if arabic && is_arabic_mark(c) {
            continue;
        }
        let Some(m) = map_char(c) else { continue };
        if m == ' ' {
            pending_space = !out.is_empty();
            continue;
        }
        if pending_space {
            out.push(' ');
            pending_space = false;
        }
        out.push(m);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quotes_and_dashes() {
        assert_eq!(normalize("\u{201C}quoted\u{201D}", "eng"), "\"quoted\"");
        assert_eq!(normalize("it\u{2019}s 1990\u{2013}91", "eng"), "it's 1990-91");
        assert_eq!(normalize("wait\u{2026}", "eng"), "wait.");
    }

    #[test]
    fn arabic_diacritics_only_for_arabic() {
        assert_eq!(normalize("كَتَبَ", "ara"), "كتب");
        assert_eq!(normalize("كَتَبَ", "eng"), "كَتَبَ");
        assert_eq!(normalize("سؤال؟", "ara"), "سؤال?");
    }

    #[test]
    fn controls_and_spacing() {
        assert_eq!(normalize("  a\u{0007}b\u{200B}\t\u{3000}c  ", "eng"), "ab c");
        assert_eq!(normalize("\u{FF21}\u{FF42}\u{FF11}", "cmn"), "Ab1");
        assert_eq!(normalize("", "eng"), "");
    }
}
