//! Task data on disk, prediction files and the test-overlap guard.

use std::collections::HashSet;
use std::path::Path;

use polyglot_text::columnar::{read_columnar_file, write_columnar_file};
use polyglot_text::conllu::{read_conllu_file, write_conllu_file};
use polyglot_text::{normalize, AnnotatedSentence, Schema, TokenStream};

use crate::config::Task;
use crate::error::{HarnessError, Result};

/// File extension of a task's data files.
pub fn extension(task: Task) -> &'static str {
    match task {
        Task::Ud => "conllu",
        Task::Srl | Task::Ner => "tsv",
    }
}

fn schema(task: Task) -> Option<Schema> {
    match task {
        Task::Ud => None,
        Task::Srl => Some(Schema::srl()),
        Task::Ner => Some(Schema::ner()),
    }
}

pub fn load_task_set(task: Task, path: &Path, language: &str) -> Result<Vec<AnnotatedSentence>> {
    if !path.exists() {
        return Err(HarnessError::MissingArtifact(path.to_path_buf()));
    }
    let sentences = match schema(task) {
        None => read_conllu_file(path, language)?,
        Some(s) => read_columnar_file(path, &s, language)?,
    };
    if sentences.is_empty() {
        return Err(HarnessError::Data(format!("{} holds no sentences", path.display())));
    }
    Ok(sentences)
}

pub fn write_task_set(task: Task, path: &Path, sentences: &[AnnotatedSentence]) -> Result<()> {
    match schema(task) {
        None => write_conllu_file(path, sentences)?,
        Some(s) => write_columnar_file(path, &s, sentences)?,
    }
    Ok(())
}

/// One sentence per line, tokens separated by spaces.
pub fn write_plain(path: &Path, sentences: &[Vec<String>]) -> Result<()> {
    let mut text = String::new();
    for s in sentences {
        text.push_str(&s.join(" "));
        text.push('\n');
    }
    std::fs::write(path, text)?;
    Ok(())
}

fn sentence_key(tokens: &[String], language: &str) -> String {
    normalize(&tokens.join(" "), language)
}

/// Test sentences whose normalized text also occurs in one of `corpora`,
/// in test order and without repeats.
pub fn overlapping(test: &[AnnotatedSentence], corpora: &[TokenStream]) -> Vec<String> {
    let seen: HashSet<String> = corpora
        .iter()
        .flat_map(|c| c.iter().map(|(toks, lang)| sentence_key(toks, lang)))
        .collect();
    let mut reported = HashSet::new();
    test.iter()
        .map(|s| sentence_key(&s.tokens, &s.language))
        .filter(|k| seen.contains(k) && reported.insert(k.clone()))
        .collect()
}

/// Fails with every offending sentence when a test sentence occurs in the
/// LM or embedding training text.
pub fn check_overlap(test: &[AnnotatedSentence], corpora: &[TokenStream]) -> Result<()> {
    let bad = overlapping(test, corpora);
    if bad.is_empty() {
        Ok(())
    } else {
        Err(HarnessError::Overlap(bad))
    }
}

/// Splits `items` into consecutive train, dev and test parts of the given sizes.
pub fn split<T: Clone>(items: &[T], dev: usize, test: usize) -> (Vec<T>, Vec<T>, Vec<T>) {
    let n = items.len();
    assert!(dev + test < n, "split leaves no training data");
    let train_end = n - dev - test;
    (
        items[..train_end].to_vec(),
        items[train_end..train_end + dev].to_vec(),
        items[train_end + dev..].to_vec(),
    )
}
