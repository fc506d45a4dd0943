//! Character n-grams of `<word>` hashed into a fixed number of buckets.

/// 32-bit FNV-1a over UTF-8 bytes, as used by fastText.
pub fn fnv1a(s: &str) -> u32 {
    let mut h: u32 = 2166136261;
    for &b in s.as_bytes() {
        h ^= b as u32;
        h = h.wrapping_mul(16777619);
    }
    h
}

/// The n-grams (by code point, `min_n..=max_n`) of the word wrapped in
/// `<` and `>`. The wrapped word itself is not included.
pub fn char_ngrams(word: &str, min_n: usize, max_n: usize) -> Vec<String> {
    let chars: Vec<char> = std::iter::once('<')
        .chain(word.chars())
        .chain(std::iter::once('>'))
        .collect();
    let mut out = Vec::new();
    if min_n == 0 || max_n < min_n {
        return out;
    }
    for n in min_n..=max_n {
        if n > chars.len() {
            break;
        }
        for start in 0..=chars.len() - n {
            if n == chars.len() {
                continue;
            }
            out.push(chars[start..start + n].iter().collect());
        }
    }
    out
}

pub fn bucket_ids(word: &str, min_n: usize, max_n: usize, buckets: usize) -> Vec<usize> {
    if buckets == 0 {
        return Vec::new();
    }
    char_ngrams(word, min_n, max_n)
        .iter()
        .map(|g| fnv1a(g) as usize % buckets)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ngrams_of_short_word() {
        assert_eq!(char_ngrams("ab", 3, 3), vec!["<ab", "ab>"]);
        let g = char_ngrams("ab", 2, 4);
        assert_eq!(g, vec!["<a", "ab", "b>", "<ab", "ab>"]);
        assert!(char_ngrams("ab", 0, 0).is_empty());
    }

    #[test]
    fn fnv_reference_values() {
        assert_eq!(fnv1a(""), 0x811c9dc5);
        assert_eq!(fnv1a("a"), 0xe40c292c);
    }
}
