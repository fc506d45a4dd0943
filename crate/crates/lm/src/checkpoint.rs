//! Checkpoint directories: `params.bin` (tensor checkpoint format),
//! `config.json`, `vocab.txt`, `chars.txt` and, for rosita_word,
//! `words.txt` listing the word-table rows after the unknown row.

use std::io::{BufRead, Write};
use std::path::Path;

use polyglot_core::checkpoint::{load_into, save_params};
use polyglot_text::Vocabulary;

use crate::chars::CharVocab;
use crate::config::LmConfig;
use crate::error::Result;
use crate::model::{LmModel, WordIndex};

pub fn save(model: &LmModel<f32>, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    save_params(&model.store, dir.join("params.bin"))?;
    std::fs::write(
        dir.join("config.json"),
        serde_json::to_string_pretty(&model.config)?,
    )?;
    model.vocab.save(&dir.join("vocab.txt"))?;
    model.chars.save(&dir.join("chars.txt"))?;
    if let Some(ix) = &model.word_index {
        let mut w = std::io::BufWriter::new(std::fs::File::create(dir.join("words.txt"))?);
        for word in &ix.words {
            writeln!(w, "{}", word)?;
        }
        w.flush()?;
    }
    Ok(())
}

pub fn load(dir: &Path) -> Result<LmModel<f32>> {
    let config: LmConfig =
        serde_json::from_str(&std::fs::read_to_string(dir.join("config.json"))?)?;
    let vocab = Vocabulary::load(&dir.join("vocab.txt"))?;
    let chars = CharVocab::load(&dir.join("chars.txt"))?;
    let words_path = dir.join("words.txt");
    let index = if words_path.exists() {
        let r = std::io::BufReader::new(std::fs::File::open(words_path)?);
        Some(WordIndex::new(
            r.lines().collect::<std::io::Result<Vec<String>>>()?,
        ))
    } else {
        None
    };
    let mut model = LmModel::assemble(config, vocab, chars, index, None)?;
    load_into(&mut model.store, dir.join("params.bin"))?;
    Ok(model)
}
