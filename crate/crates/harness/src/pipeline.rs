//! The artifact-producing steps before task training: word vectors,
//! alignment, LM training and representation dumps.

use std::path::Path;

use polyglot_embed::{procrustes_align, train_sgns, AlignmentMap, EmbeddingMatrix, SgnsConfig};
use polyglot_lm::{checkpoint, stack, LmConfig, LmModel, TrainReport, WordVectors};
use polyglot_text::TokenStream;

use crate::error::{HarnessError, Result};

pub fn train_embeddings(corpus: &TokenStream, config: &SgnsConfig) -> Result<EmbeddingMatrix> {
    Ok(train_sgns(corpus, config)?.matrix())
}

/// Maps `source` onto `target` with the dictionary. Returns the map, the
/// mapped source vectors and the target vectors preprocessed the same way,
/// so that the two outputs share one space.
pub fn align_spaces(
    source: &EmbeddingMatrix,
    target: &EmbeddingMatrix,
    dictionary: &[(String, String)],
    source_language: &str,
    target_language: &str,
) -> Result<(AlignmentMap, EmbeddingMatrix, EmbeddingMatrix)> {
    let mut map = procrustes_align(source, target, dictionary)?;
    map.source_language = source_language.to_string();
    map.target_language = target_language.to_string();
    let mapped = map.align_matrix(source);
    Ok((map, mapped, target.preprocessed()))
}

/// Trains an LM on one corpus (mono_char) or two (polyglot variants) and
/// saves the checkpoint to `out`. `vectors` feed the word table of
/// rosita_word and are ignored otherwise.
pub fn train_lm_checkpoint(
    config: LmConfig,
    corpora: &[TokenStream],
    vectors: &[EmbeddingMatrix],
    out: &Path,
) -> Result<TrainReport> {
    let refs: Vec<&TokenStream> = corpora.iter().collect();
    let words = if config.variant == polyglot_lm::Variant::RositaWord {
        if vectors.is_empty() {
            return Err(HarnessError::Config("rosita_word needs aligned word vectors".into()));
        }
        let ms: Vec<&EmbeddingMatrix> = vectors.iter().collect();
        Some(WordVectors::from_matrices(&ms)?)
    } else {
        None
    };
    let mut model = LmModel::build(config, &refs, words.as_ref())?;
    let report = polyglot_lm::train_lm(&mut model, &refs)?;
    checkpoint::save(&model, out)?;
    Ok(report)
}

/// Extracts layer stacks for `sentences` with the checkpoint in `lm_dir`
/// and writes `<stem>.bin` and `<stem>.idx`.
pub fn extract_to_files(lm_dir: &Path, sentences: &[Vec<String>], stem: &Path) -> Result<usize> {
    let lm = checkpoint::load(lm_dir)?;
    let refs: Vec<&[String]> = sentences.iter().map(|s| s.as_slice()).collect();
    let stacks = lm.extract(&refs)?;
    stack::dump(&stem.with_extension("bin"), &stem.with_extension("idx"), &refs, &stacks)?;
    Ok(stacks.len())
}
