//! Tab-separated token-per-line tagging data, blank line between sentences.
//!
//! The [`Schema`] names each column. BIO columns become spans. The
//! predicate marker column is `-`, `_` or `0` for ordinary tokens; any other
//! value marks the (single) predicate of the sentence.

use std::io::{BufRead, Write};
use std::path::Path;

use crate::bio::{bio_to_spans, spans_to_bio};
use crate::error::{parse_err, Result, TextError};
use crate::sentence::AnnotatedSentence;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Column {
    Token,
    EntityTag,
    PredicateMarker,
    RoleTag,
    Ignore,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Schema {
    pub columns: Vec<Column>,
}

impl Schema {
    pub fn new(columns: Vec<Column>) -> Self {
        Schema { columns }
    }

    /// `token, entity`.
    pub fn ner() -> Self {
        Schema::new(vec![Column::Token, Column::EntityTag])
    }

    /// `token, predicate marker, role`.
    pub fn srl() -> Self {
        Schema::new(vec![Column::Token, Column::PredicateMarker, Column::RoleTag])
    }

    fn position(&self, c: Column) -> Option<usize> {
        self.columns.iter().position(|&x| x == c)
    }
}

fn is_marker(v: &str) -> bool {
    !matches!(v, "-" | "_" | "0")
}

fn finish(
    schema: &Schema,
    rows: Vec<(usize, Vec<String>)>,
    language: &str,
) -> Result<AnnotatedSentence> {
    let first = rows[0].0;
    let col = |c: Column| -> Option<Vec<&str>> {
        schema
            .position(c)
            .map(|i| rows.iter().map(|(_, r)| r[i].as_str()).collect())
    };
    let tokens = col(Column::Token).ok_or_else(|| parse_err(first, "schema has no token column"))?;
    let mut s = AnnotatedSentence::new(tokens.iter().map(|t| t.to_string()).collect(), language);
    let spans = |tags: Vec<&str>| {
        bio_to_spans(&tags).map_err(|e| match e {
            TextError::InvalidBio { position, tag } => parse_err(
                rows[position].0,
                format!("invalid BIO tag {:?} at token {}", tag, position),
            ),
            e => e,
        })
    };
    if let Some(tags) = col(Column::EntityTag) {
        s.entities = Some(spans(tags)?);
    }
    if let Some(marks) = col(Column::PredicateMarker) {
        let preds: Vec<usize> = (0..marks.len()).filter(|&i| is_marker(marks[i])).collect();
        if preds.len() > 1 {
            return Err(parse_err(rows[preds[1]].0, "more than one predicate marker"));
        }
        s.predicate = preds.first().copied();
    }
    if let Some(tags) = col(Column::RoleTag) {
        s.roles = Some(spans(tags)?);
    }
    Ok(s)
}

pub fn read_columnar<R: BufRead>(reader: R, schema: &Schema, language: &str) -> Result<Vec<AnnotatedSentence>> {
    let mut out = Vec::new();
    let mut rows: Vec<(usize, Vec<String>)> = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            if !rows.is_empty() {
                out.push(finish(schema, std::mem::take(&mut rows), language)?);
            }
            continue;
        }
        let cols: Vec<String> = line.split('\t').map(String::from).collect();
        if cols.len() != schema.columns.len() {
            return Err(parse_err(
                i + 1,
                format!("expected {} columns, found {}", schema.columns.len(), cols.len()),
            ));
        }
        rows.push((i + 1, cols));
    }
    if !rows.is_empty() {
        out.push(finish(schema, rows, language)?);
    }
    Ok(out)
}

pub fn read_columnar_file(path: &Path, schema: &Schema, language: &str) -> Result<Vec<AnnotatedSentence>> {
    read_columnar(std::io::BufReader::new(std::fs::File::open(path)?), schema, language)
}

pub fn write_columnar<W: Write>(mut w: W, schema: &Schema, sentences: &[AnnotatedSentence]) -> Result<()> {
    for s in sentences {
        let n = s.len();
        let entities = s.entities.as_ref().map(|e| spans_to_bio(e, n)).transpose()?;
        let roles = s.roles.as_ref().map(|r| spans_to_bio(r, n)).transpose()?;
        for i in 0..n {
            let fields: Vec<String> = schema
                .columns
                .iter()
                .map(|c| match c {
                    Column::Token => s.tokens[i].clone(),
                    Column::EntityTag => entities.as_ref().map_or("O".into(), |e| e[i].clone()),
                    Column::RoleTag => roles.as_ref().map_or("O".into(), |r| r[i].clone()),
                    Column::PredicateMarker => {
                        if s.predicate == Some(i) { "1".into() } else { "-".into() }
                    }
                    Column::Ignore => "_".into(),
                })
                .collect();
            writeln!(w, "{}", fields.join("\t"))?;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn write_columnar_file(path: &Path, schema: &Schema, sentences: &[AnnotatedSentence]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_columnar(&mut f, schema, sentences)?;
    f.flush()?;
    Ok(())
}
