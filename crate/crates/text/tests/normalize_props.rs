use polyglot_text::normalize;
use proptest::prelude::*;

fn tricky_char() -> impl Strategy<Value = char> {
    prop_oneof![
        any::<char>(),
        prop::sample::select(vec![
            '\u{201C}', '\u{201D}', '\u{2019}', '\u{2014}', '\u{2026}', '\u{00A0}', '\u{200B}',
            '\u{064E}', '\u{0670}', '\u{0640}', '\u{060C}', '\u{FF21}', '\t', '\n', ' ', 'a', 'ك',
            '\u{0007}', '\u{FEFF}',
        ]),
    ]
}

proptest! {
    #[test]
    fn idempotent_and_never_longer(
        chars in proptest::collection::vec(tricky_char(), 0..60),
        lang in prop::sample::select(vec!["eng", "ara", "cmn"]),
    ) {
        let text: String = chars.into_iter().collect();
        let once = normalize(&text, lang);
        prop_assert_eq!(normalize(&once, lang), once.clone());
        prop_assert!(once.chars().count() <= text.chars().count());
        prop_assert!(!once.starts_with(' ') && !once.ends_with(' ') && !once.contains("  "));
        prop_assert!(!once.chars().any(|c| c.is_control()));
        if lang == "ara" {
            let has_mark = once.chars().any(|c| ('\u{064B}'..='\u{0652}').contains(&c) || c == '\u{0670}');
            prop_assert!(!has_mark);
        }
    }
}
