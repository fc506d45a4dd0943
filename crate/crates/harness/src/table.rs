//! Result tables: one row per (target, representation, task languages),
//! one column per task's headline metric.

use std::collections::BTreeMap;

use crate::config::{Representation, Task};
use crate::error::{HarnessError, Result};
use crate::experiment::{MetricsReport, Summary};

pub const MISSING: &str = "--";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Markdown,
}

impl TableFormat {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "csv" => Some(TableFormat::Csv),
            "markdown" | "md" => Some(TableFormat::Markdown),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TableRow {
    pub target: String,
    pub representation: String,
    pub languages: String,
    /// Headline summary per task, in [`Task::ALL`] order.
    pub cells: Vec<Option<Summary>>,
}

pub fn header() -> Vec<String> {
    let mut h = vec!["Target".to_string(), "Representation".into(), "Task lang.".into()];
    h.extend(Task::ALL.iter().map(|t| t.column_title().to_string()));
    h
}

/// `85.24 ±0.13`, or the mean alone after a single run.
pub fn format_cell(cell: Option<Summary>) -> String {
    match cell {
        None => MISSING.into(),
        Some(Summary { mean, std: None }) => format!("{:.2}", mean),
        Some(Summary { mean, std: Some(s) }) => format!("{:.2} ±{:.2}", mean, s),
    }
}

pub fn parse_cell(text: &str) -> Result<Option<Summary>> {
    let text = text.trim();
    if text == MISSING {
        return Ok(None);
    }
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| HarnessError::Data(format!("bad table cell {:?}", text)));
    Ok(Some(match text.split_once('±') {
        Some((m, s)) => Summary { mean: num(m)?, std: Some(num(s)?) },
        None => Summary { mean: num(text)?, std: None },
    }))
}

fn rep_rank(r: Representation) -> usize {
    Representation::ALL.iter().position(|&x| x == r).unwrap_or(usize::MAX)
}

/// Rows in display order: by target, then representation, monolingual
/// task training before polyglot. A later report for an already filled
/// cell is ignored.
pub fn table_rows(reports: &[MetricsReport]) -> Vec<TableRow> {
    let mut rows: BTreeMap<(String, usize, usize, String), TableRow> = BTreeMap::new();
    for r in reports {
        let key = (r.target.clone(), rep_rank(r.representation), r.languages.len(), r.languages_label.clone());
        let row = rows.entry(key).or_insert_with(|| TableRow {
            target: r.target.clone(),
            representation: r.representation.label(&r.target),
            languages: r.languages_label.clone(),
            cells: vec![None; Task::ALL.len()],
        });
        let col = Task::ALL.iter().position(|&t| t == r.task).expect("known task");
        if row.cells[col].is_some() {
            log::warn!("duplicate {} result for {} {}; keeping the first", r.task.name(), row.representation, row.languages);
        } else {
            row.cells[col] = r.headline();
        }
    }
    rows.into_values().collect()
}

fn cells_of(row: &TableRow) -> Vec<String> {
    let mut v = vec![row.target.clone(), row.representation.clone(), row.languages.clone()];
    v.extend(row.cells.iter().map(|&c| format_cell(c)));
    v
}

pub fn emit_table(reports: &[MetricsReport], format: TableFormat) -> String {
    let rows = table_rows(reports);
    match format {
        TableFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(header()).expect("in-memory write");
            for r in &rows {
                w.write_record(cells_of(r)).expect("in-memory write");
            }
            String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells")
        }
        TableFormat::Markdown => {
            let line = |cells: Vec<String>| format!("| {} |\n", cells.join(" | "));
            let mut out = line(header());
            let mut rule = vec!["---".to_string(); 3];
            rule.extend(Task::ALL.iter().map(|_| "---:".to_string()));
            out.push_str(&line(rule));
            for r in &rows {
                out.push_str(&line(cells_of(r)));
            }
            out
        }
    }
}

/// Reads a table written by [`emit_table`] in CSV form.
pub fn parse_csv_table(text: &str) -> Result<Vec<TableRow>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let head: Vec<String> = r.headers().map_err(csv_err)?.iter().map(String::from).collect();
    if head != header() {
        return Err(HarnessError::Data(format!("unexpected table header {:?}", head)));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        rows.push(TableRow {
            target: rec[0].to_string(),
            representation: rec[1].to_string(),
            languages: rec[2].to_string(),
            cells: (3..rec.len()).map(|i| parse_cell(&rec[i])).collect::<Result<_>>()?,
        });
    }
    Ok(rows)
}

fn csv_err(e: csv::Error) -> HarnessError {
    HarnessError::Data(format!("csv: {}", e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cells() {
        assert_eq!(format_cell(Some(Summary { mean: 85.2449, std: Some(0.1301) })), "85.24 ±0.13");
        assert_eq!(format_cell(Some(Summary { mean: 74.845, std: None })), "74.84");
        assert_eq!(format_cell(None), "--");
        assert_eq!(parse_cell("85.24 ±0.13").unwrap(), Some(Summary { mean: 85.24, std: Some(0.13) }));
        assert_eq!(parse_cell("--").unwrap(), None);
        assert!(parse_cell("n/a").is_err());
    }
}
