use std::collections::BTreeMap;

use proptest::prelude::*;

use polyglot_harness::table::{format_cell, header, parse_cell};
use polyglot_harness::{emit_table, parse_csv_table, MetricsReport, Preset, Representation, Summary, TableFormat, Task};

fn report(task: Task, rep: Representation, poly: bool, mean: f64, std: Option<f64>) -> MetricsReport {
    let languages: Vec<String> = if poly { vec!["ara".into(), "eng".into()] } else { vec!["ara".into()] };
    MetricsReport {
        name: format!("{}-{}", task.name(), rep.name()),
        task,
        representation: rep,
        target: "ara".into(),
        languages_label: languages.join("+"),
        languages,
        preset: Preset::Desk,
        fingerprint: "0".repeat(64),
        runs: vec![],
        summary: BTreeMap::from([(task.headline().to_string(), Summary { mean, std })]),
        lm_perplexity: None,
        wall_clock_secs: 1.0,
    }
}

#[test]
fn single_ud_report_cell_style() {
    let r = report(Task::Ud, Representation::RositaWord, true, 85.24, Some(0.13));
    let csv = emit_table(&[r.clone()], TableFormat::Csv);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], "Target,Representation,Task lang.,UD LAS,SRL F1,NER F1");
    assert_eq!(lines[1], "ara,RositaWord,ara+eng,85.24 ±0.13,--,--");
    let md = emit_table(&[r], TableFormat::Markdown);
    assert!(md.contains("| ara | RositaWord | ara+eng | 85.24 ±0.13 | -- | -- |"), "{}", md);
}

#[test]
fn rows_follow_the_comparison_layout() {
    use Representation::*;
    let rows = [
        (RositaWord, true),
        (StaticPoly, true),
        (RositaChar, false),
        (StaticMono, false),
        (RositaWord, false),
        (MonoChar, false),
        (RositaChar, true),
    ];
    let mut reports = Vec::new();
    for (i, &(rep, poly)) in rows.iter().enumerate() {
        for task in Task::ALL {
            reports.push(report(task, rep, poly, 50.0 + i as f64, if task == Task::Ud { Some(0.5) } else { None }));
        }
    }
    let parsed = parse_csv_table(&emit_table(&reports, TableFormat::Csv)).unwrap();
    let labels: Vec<(String, String)> = parsed.iter().map(|r| (r.representation.clone(), r.languages.clone())).collect();
    let want = [
        ("fastT (ara)", "ara"),
        ("fastT (ara+eng)", "ara+eng"),
        ("MonoChar", "ara"),
        ("RositaChar", "ara"),
        ("RositaChar", "ara+eng"),
        ("RositaWord", "ara"),
        ("RositaWord", "ara+eng"),
    ];
    assert_eq!(labels, want.map(|(a, b)| (a.to_string(), b.to_string())));
    assert!(parsed.iter().all(|r| r.cells.iter().all(|c| c.is_some())));
    assert!(parsed.iter().all(|r| r.cells[0].unwrap().std == Some(0.5) && r.cells[1].unwrap().std.is_none()));
}

#[test]
fn csv_and_markdown_carry_the_same_numbers() {
    let reports = vec![
        report(Task::Ud, Representation::MonoChar, false, 71.234, Some(1.0)),
        report(Task::Ner, Representation::MonoChar, false, 64.5, None),
        report(Task::Srl, Representation::StaticMono, false, 12.0, None),
    ];
    let csv_cells: Vec<String> = emit_table(&reports, TableFormat::Csv)
        .lines()
        .skip(1)
        .flat_map(|l| l.split(',').map(String::from).collect::<Vec<_>>())
        .collect();
    let md_cells: Vec<String> = emit_table(&reports, TableFormat::Markdown)
        .lines()
        .skip(2)
        .flat_map(|l| l.trim_matches('|').split('|').map(|c| c.trim().to_string()).collect::<Vec<_>>())
        .collect();
    assert_eq!(csv_cells, md_cells);
}

#[test]
fn empty_report_set_gives_header_only() {
    let csv = emit_table(&[], TableFormat::Csv);
    assert_eq!(csv.lines().count(), 1);
    assert!(parse_csv_table(&csv).unwrap().is_empty());
    assert_eq!(header().len(), 6);
}

#[test]
fn malformed_csv_is_rejected() {
    assert!(parse_csv_table("a,b\n1,2\n").is_err());
    let bad = "Target,Representation,Task lang.,UD LAS,SRL F1,NER F1\nara,MonoChar,ara,x,--,--\n";
    assert!(parse_csv_table(bad).is_err());
}

proptest! {
    #[test]
    fn csv_round_trip_recovers_report_values(
        means in proptest::collection::vec(0.0f64..100.0, 3),
        stds in proptest::collection::vec(proptest::option::of(0.0f64..10.0), 3),
    ) {
        let reports: Vec<MetricsReport> = Task::ALL
            .iter()
            .zip(means.iter().zip(&stds))
            .map(|(&t, (&m, &s))| report(t, Representation::RositaChar, true, m, s))
            .collect();
        let rows = parse_csv_table(&emit_table(&reports, TableFormat::Csv)).unwrap();
        prop_assert_eq!(rows.len(), 1);
        for (cell, r) in rows[0].cells.iter().zip(&reports) {
            let want = r.headline().unwrap();
            let got = cell.unwrap();
            prop_assert!((got.mean - want.mean).abs() <= 0.005 + 1e-9);
            prop_assert_eq!(got.std.is_some(), want.std.is_some());
            if let (Some(a), Some(b)) = (got.std, want.std) {
                prop_assert!((a - b).abs() <= 0.005 + 1e-9);
            }
            // The rendered text is a fixed point of parse then format.
            prop_assert_eq!(format_cell(parse_cell(&format_cell(Some(want))).unwrap()), format_cell(Some(want)));
        }
    }
}
