//! Deterministic synthetic corpora and task sets for smoke tests and
//! desk-scale runs. Nothing here resembles real language beyond having a
//! consistent structure a model can learn.

use std::collections::HashSet;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::sentence::{AnnotatedSentence, Span};
use crate::stream::TokenStream;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Script {
    Latin,
    Arabic,
}

impl Script {
    pub fn for_language(language: &str) -> Script {
        if crate::normalize::is_arabic(language) {
            Script::Arabic
        } else {
            Script::Latin
        }
    }

    fn letters(self) -> (Vec<char>, Vec<char>) {
        match self {
            Script::Latin => ("bdfgklmnprstvz".chars().collect(), "aeiou".chars().collect()),
            Script::Arabic => (
                ('\u{0628}'..='\u{063A}').chain('\u{0641}'..='\u{0646}').collect(),
                vec!['\u{0627}', '\u{0648}', '\u{064A}'],
            ),
        }
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `count` distinct pseudo-words of two or three syllables.
pub fn words(script: Script, count: usize, seed: u64) -> Vec<String> {
    let (cons, vowels) = script.letters();
    let mut r = rng(seed);
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let syllables = r.random_range(2..=3);
        let w: String = (0..syllables)
            .flat_map(|_| [*cons.choose(&mut r).unwrap(), *vowels.choose(&mut r).unwrap()])
            .collect();
        if seen.insert(w.clone()) {
            out.push(w);
        }
    }
    out
}

/// `sentences` sentences, each a copy of one of `templates` fixed word
/// sequences of `length` distinct words (no word shared between
/// templates), chosen uniformly at random.
pub fn template_corpus(
    language: &str,
    script: Script,
    templates: usize,
    length: usize,
    sentences: usize,
    seed: u64,
) -> TokenStream {
    let vocab = words(script, templates * length, seed);
    let mut r = rng(seed.wrapping_add(17));
    let mut s = TokenStream::new(format!("template:{}", language));
    for _ in 0..sentences {
        let k = r.random_range(0..templates);
        s.push(vocab[k * length..(k + 1) * length].to_vec(), language)
            .expect("templates are non-empty");
    }
    s
}

/// About 2k tokens: 100 Latin-script `eng` and 100 Arabic-script `ara`
/// sentences of ten words each.
pub fn bilingual_corpus(seed: u64) -> (TokenStream, TokenStream) {
    (
        template_corpus("eng", Script::Latin, 4, 10, 100, seed),
        template_corpus("ara", Script::Arabic, 4, 10, 100, seed.wrapping_add(1)),
    )
}

/// Per-category word lists for one language.
#[derive(Clone, Debug)]
pub struct Lexicon {
    pub det: Vec<String>,
    pub adj: Vec<String>,
    pub noun: Vec<String>,
    pub verb: Vec<String>,
    pub adp: Vec<String>,
    pub pron: Vec<String>,
    pub person: Vec<String>,
    pub place: Vec<String>,
    pub org: Vec<String>,
}

impl Lexicon {
    /// The fixed lexicon of `language`.
    pub fn for_language(language: &str) -> Self {
        let seed = language.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3));
        Self::new(Script::for_language(language), seed)
    }

    pub fn new(script: Script, seed: u64) -> Self {
        let all = words(script, 66, seed);
        let take = |a: usize, b: usize| all[a..b].to_vec();
        Lexicon {
            det: take(0, 3),
            adj: take(3, 11),
            noun: take(11, 27),
            verb: take(27, 37),
            adp: take(37, 41),
            pron: take(41, 44),
            person: take(44, 52),
            place: take(52, 59),
            org: take(59, 66),
        }
    }
}

struct Builder {
    tokens: Vec<String>,
    pos: Vec<String>,
    heads: Vec<usize>,
    rels: Vec<String>,
}

impl Builder {
    fn push(&mut self, word: &str, pos: &str, rel: &str) -> usize {
        self.tokens.push(word.to_string());
        self.pos.push(pos.to_string());
        self.heads.push(0);
        self.rels.push(rel.to_string());
        self.tokens.len()
    }

    fn attach(&mut self, dep: usize, head: usize) {
        self.heads[dep - 1] = head;
    }

    /// Noun phrase; returns `(first token, head noun)`, 1-based.
    fn noun_phrase(&mut self, lex: &Lexicon, r: &mut ChaCha8Rng, rel: &str, adj_after: bool) -> (usize, usize) {
        let start = self.tokens.len() + 1;
        let mut deps = Vec::new();
        if r.random_bool(0.3) {
            deps.push(self.push(lex.pron.choose(r).unwrap(), "PRON", "nmod:poss"));
        } else if r.random_bool(0.7) {
            deps.push(self.push(lex.det.choose(r).unwrap(), "DET", "det"));
        }
        let adjs = r.random_range(0..=2);
        if !adj_after {
            for _ in 0..adjs {
                deps.push(self.push(lex.adj.choose(r).unwrap(), "ADJ", "amod"));
            }
        }
        let noun = self.push(lex.noun.choose(r).unwrap(), "NOUN", rel);
        if adj_after {
            for _ in 0..adjs {
                deps.push(self.push(lex.adj.choose(r).unwrap(), "ADJ", "amod"));
            }
        }
        for d in deps {
            self.attach(d, noun);
        }
        (start, noun)
    }
}

/// A treebank sentence with its SRL frame for the main verb.
fn clause(language: &str, lex: &Lexicon, r: &mut ChaCha8Rng) -> AnnotatedSentence {
    let adj_after = Script::for_language(language) == Script::Arabic;
    let mut b = Builder {
        tokens: Vec::new(),
        pos: Vec::new(),
        heads: Vec::new(),
        rels: Vec::new(),
    };
    let mut roles = Vec::new();
    let (s0, subj) = b.noun_phrase(lex, r, "nsubj", adj_after);
    roles.push(Span::new("ARG0", s0 - 1, b.tokens.len() - 1));
    let verb = b.push(lex.verb.choose(r).unwrap(), "VERB", "root");
    roles.push(Span::new("V", verb - 1, verb - 1));
    b.attach(subj, verb);
    let mut obj = None;
    if r.random_bool(0.7) {
        let (o0, o) = b.noun_phrase(lex, r, "obj", adj_after);
        b.attach(o, verb);
        roles.push(Span::new("ARG1", o0 - 1, b.tokens.len() - 1));
        obj = Some(o);
    }
    if r.random_bool(0.5) {
        let case = b.push(lex.adp.choose(r).unwrap(), "ADP", "case");
        let rel = if obj.is_some() { "nmod" } else { "obl" };
        let (_, n) = b.noun_phrase(lex, r, rel, adj_after);
        b.attach(case, n);
        b.attach(n, obj.unwrap_or(verb));
        if obj.is_none() {
            roles.push(Span::new("ARGM-LOC", case - 1, b.tokens.len() - 1));
        } else if let Some(last) = roles.last_mut() {
            last.end = b.tokens.len() - 1;
        }
    }
    let mut s = AnnotatedSentence::new(b.tokens, language);
    s.pos = Some(b.pos);
    s.heads = Some(b.heads);
    s.deprels = Some(b.rels);
    s.predicate = Some(verb - 1);
    s.roles = Some(roles);
    s
}

/// `count` distinct annotated clauses over the language's lexicon (trees, POS, SRL frames).
pub fn treebank(language: &str, count: usize, seed: u64) -> Vec<AnnotatedSentence> {
    let lex = Lexicon::for_language(language);
    let mut r = rng(seed.wrapping_add(101));
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let s = clause(language, &lex, &mut r);
        if seen.insert(s.tokens.clone()) {
            out.push(s);
        }
    }
    out
}

/// Sentences with person, place and organisation mentions.
pub fn ner_set(language: &str, count: usize, seed: u64) -> Vec<AnnotatedSentence> {
    let lex = Lexicon::for_language(language);
    let mut r = rng(seed.wrapping_add(202));
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let mut tokens: Vec<String> = Vec::new();
        let mut spans = Vec::new();
        let mut mention = |tokens: &mut Vec<String>, r: &mut ChaCha8Rng, kind: &str, list: &[String], max: usize| {
            let n = r.random_range(1..=max);
            let start = tokens.len();
            for _ in 0..n {
                tokens.push(list.choose(r).unwrap().clone());
            }
            spans.push(Span::new(kind, start, tokens.len() - 1));
        };
        if r.random_bool(0.5) {
            tokens.push(lex.det.choose(&mut r).unwrap().clone());
        }
        mention(&mut tokens, &mut r, "PER", &lex.person, 2);
        tokens.push(lex.verb.choose(&mut r).unwrap().clone());
        if r.random_bool(0.6) {
            tokens.push(lex.det.choose(&mut r).unwrap().clone());
            tokens.push(lex.noun.choose(&mut r).unwrap().clone());
        }
        if r.random_bool(0.7) {
            tokens.push(lex.adp.choose(&mut r).unwrap().clone());
            if r.random_bool(0.5) {
                mention(&mut tokens, &mut r, "LOC", &lex.place, 2);
            } else {
                mention(&mut tokens, &mut r, "ORG", &lex.org, 3);
            }
        }
        if seen.insert(tokens.clone()) {
            let mut s = AnnotatedSentence::new(tokens, language);
            s.entities = Some(spans);
            out.push(s);
        }
    }
    out
}

/// Plain clauses and entity sentences over the language's lexicon, for
/// LM and embedding training on the task vocabulary. Sentences listed in
/// `exclude` are left out.
pub fn lexicon_corpus(language: &str, count: usize, seed: u64, exclude: &[&[String]]) -> TokenStream {
    let banned: HashSet<&[String]> = exclude.iter().copied().collect();
    let mut s = TokenStream::new(format!("lexicon:{}", language));
    let clauses = treebank(language, count - count / 4, seed);
    let entities = ner_set(language, count / 4, seed);
    for sent in clauses.into_iter().chain(entities) {
        if !banned.contains(sent.tokens.as_slice()) {
            s.push(sent.tokens, language).expect("non-empty");
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_sets_validate() {
        for lang in ["eng", "ara"] {
            for s in treebank(lang, 60, 3) {
                s.validate().unwrap();
                let heads = s.heads.as_ref().unwrap();
                assert_eq!(heads.iter().filter(|&&h| h == 0).count(), 1);
            }
            for s in ner_set(lang, 30, 3) {
                s.validate().unwrap();
            }
        }
        let (a, b) = bilingual_corpus(1);
        assert_eq!(a.token_count() + b.token_count(), 2000);
    }
}
