//! CoNLL-U reading and writing.
//!
//! Kept per word line: FORM, UPOS, HEAD, DEPREL. Multiword token ranges
//! (`1-2`), empty nodes (`3.1`) and comment lines are skipped. A column that
//! is `_` on every line of a sentence becomes an absent layer.

use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{parse_err, Result};
use crate::sentence::AnnotatedSentence;

#[derive(Default)]
struct Pending {
    first_line: usize,
    forms: Vec<String>,
    upos: Vec<String>,
    heads: Vec<Option<usize>>,
    deprels: Vec<String>,
}

impl Pending {
    fn finish(self, language: &str) -> Result<AnnotatedSentence> {
        let line = self.first_line;
        let mut s = AnnotatedSentence::new(self.forms, language);
        if self.upos.iter().any(|p| p != "_") {
            s.pos = Some(self.upos);
        }
        let given = self.heads.iter().filter(|h| h.is_some()).count();
        if given == s.len() {
            s.heads = Some(self.heads.into_iter().flatten().collect());
            s.deprels = Some(self.deprels);
        } else if given > 0 {
            return Err(parse_err(line, "some tokens lack a head"));
        }
        s.validate().map_err(|e| parse_err(line, e.to_string()))?;
        Ok(s)
    }
}

pub fn read_conllu<R: BufRead>(reader: R, language: &str) -> Result<Vec<AnnotatedSentence>> {
    let mut out = Vec::new();
    let mut cur: Option<Pending> = None;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            if let Some(p) = cur.take() {
                out.push(p.finish(language)?);
            }
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(parse_err(lineno, format!("expected 10 columns, found {}", cols.len())));
        }
        if cols[0].contains('-') || cols[0].contains('.') {
            continue;
        }
        let p = cur.get_or_insert_with(|| Pending {
            first_line: lineno,
            ..Default::default()
        });
        let id: usize = cols[0]
            .parse()
            .map_err(|_| parse_err(lineno, format!("bad token id {:?}", cols[0])))?;
        if id != p.forms.len() + 1 {
            return Err(parse_err(lineno, format!("token id {} out of sequence", id)));
        }
        let head = match cols[6] {
            "_" => None,
            h => Some(
                h.parse::<usize>()
                    .map_err(|_| parse_err(lineno, format!("bad head {:?}", h)))?,
            ),
        };
        p.forms.push(cols[1].to_string());
        p.upos.push(cols[3].to_string());
        p.heads.push(head);
        p.deprels.push(cols[7].to_string());
    }
    if let Some(p) = cur.take() {
        out.push(p.finish(language)?);
    }
    Ok(out)
}

pub fn read_conllu_file(path: &Path, language: &str) -> Result<Vec<AnnotatedSentence>> {
    read_conllu(std::io::BufReader::new(std::fs::File::open(path)?), language)
}

pub fn write_conllu<W: Write>(mut w: W, sentences: &[AnnotatedSentence]) -> Result<()> {
    for s in sentences {
        for (i, form) in s.tokens.iter().enumerate() {
            let pos = s.pos.as_ref().map_or("_", |p| p[i].as_str());
            let head = s.heads.as_ref().map_or("_".to_string(), |h| h[i].to_string());
            let rel = s.deprels.as_ref().map_or("_", |r| r[i].as_str());
            writeln!(w, "{}\t{}\t_\t{}\t_\t_\t{}\t{}\t_\t_", i + 1, form, pos, head, rel)?;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn write_conllu_file(path: &Path, sentences: &[AnnotatedSentence]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_conllu(&mut f, sentences)?;
    f.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::TextError;

    const TWO: &str = "# text = a b\n1\tDogs\tdog\tNOUN\t_\t_\t2\tnsubj\t_\t_\n2\tbark\tbark\tVERB\t_\t_\t0\troot\t_\t_\n\n";

    #[test]
    fn reads_tree() {
        let s = read_conllu(TWO.as_bytes(), "eng").unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].heads, Some(vec![2, 0]));
        assert_eq!(s[0].pos.as_deref(), Some(&["NOUN".to_string(), "VERB".to_string()][..]));
    }

    #[test]
    fn skips_multiword_ranges() {
        let text = "1-2\tdel\t_\t_\t_\t_\t_\t_\t_\t_\n1\tde\t_\tADP\t_\t_\t2\tcase\t_\t_\n2\tel\t_\tDET\t_\t_\t0\troot\t_\t_\n";
        let s = read_conllu(text.as_bytes(), "spa").unwrap();
        assert_eq!(s[0].tokens, vec!["de", "el"]);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let text = "1\ta\t_\tX\t_\t_\t0\troot\t_\t_\n2\tb\t_\tX\t_\t_\tzz\tdep\t_\t_\n";
        match read_conllu(text.as_bytes(), "eng") {
            Err(TextError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{:?}", other),
        }
        match read_conllu("1\ta\tb\n".as_bytes(), "eng") {
            Err(TextError::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("{:?}", other),
        }
    }

    #[test]
    fn keeps_relation_subtypes() {
        let text = TWO.replace("nsubj", "nsubj:pass");
        let s = read_conllu(text.as_bytes(), "eng").unwrap();
        assert_eq!(s[0].deprels.as_ref().unwrap()[0], "nsubj:pass");
    }
}
