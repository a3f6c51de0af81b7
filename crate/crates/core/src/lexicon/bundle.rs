//! Recognizer bundles: a directory holding the config snapshot, the
//! lexicon, and per-stream codebook and character model files.
//!
//! Layout:
//!
//! ```text
//! bundle/
//!   config              key = value snapshot
//!   lexicon.tsv         word TAB space-separated character labels
//!   sw/codebook.mshmm
//!   sw/chars/<label>.mshmm
//!   vh2d/codebook.mshmm
//!   vh2d/chars/<label>.mshmm
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::features::SW_DIMS;
use crate::hmm::{load_model_file, save_model_file, DiscreteHmm, ModelFile};

use super::{Lexicon, Recognizer};

const STREAM_DIRS: [&str; 2] = ["sw", "vh2d"];

/// Write a recognizer bundle. Output is deterministic: the same recognizer
/// always produces byte-identical files.
pub fn save_bundle(rec: &Recognizer, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("config"), rec.config.to_text())?;
    fs::write(dir.join("lexicon.tsv"), rec.lexicon.to_tsv())?;
    for (k, stream_dir) in STREAM_DIRS.iter().enumerate() {
        let base = dir.join(stream_dir);
        fs::create_dir_all(base.join("chars"))?;
        let cb_file = ModelFile { codebook: Some(rec.codebooks[k].clone()), ..Default::default() };
        fs::write(base.join("codebook.mshmm"), save_model_file(&cb_file))?;
        for (label, model) in &rec.char_models[k] {
            let mf = ModelFile { hmm: Some(model.clone()), ..Default::default() };
            fs::write(base.join("chars").join(format!("{label}.mshmm")), save_model_file(&mf))?;
        }
    }
    Ok(())
}

/// Load a recognizer bundle written by [`save_bundle`].
pub fn load_bundle(dir: &Path) -> Result<Recognizer> {
    let config = Config::parse(&fs::read_to_string(dir.join("config"))?)?;
    let lexicon = Lexicon::parse_tsv(&fs::read_to_string(dir.join("lexicon.tsv"))?)?;
    let alphabet = lexicon.alphabet();

    let mut codebooks = Vec::with_capacity(2);
    let mut char_models: [BTreeMap<String, DiscreteHmm>; 2] = [BTreeMap::new(), BTreeMap::new()];
    for (k, stream_dir) in STREAM_DIRS.iter().enumerate() {
        let base = dir.join(stream_dir);
        let cb_text = fs::read_to_string(base.join("codebook.mshmm"))?;
        let codebook = load_model_file(&cb_text)?
            .codebook
            .ok_or_else(|| Error::ModelFormat(format!("{stream_dir}: missing codebook section")))?;

        let expect_dim =
            if k == 0 { SW_DIMS } else { config.feature_params().vh2d_dims() };
        if codebook.dim != expect_dim {
            return Err(Error::ModelFormat(format!(
                "{stream_dir}: codebook dimension {} does not match the configured feature \
                 dimension {expect_dim}",
                codebook.dim
            )));
        }

        for label in &alphabet {
            let path = base.join("chars").join(format!("{label}.mshmm"));
            let text = fs::read_to_string(&path)?;
            let hmm = load_model_file(&text)?
                .hmm
                .ok_or_else(|| Error::ModelFormat(format!("{}: missing hmm section", path.display())))?;
            if hmm.n_symbols != codebook.len() {
                return Err(Error::ModelFormat(format!(
                    "{}: model over {} symbols but codebook has {}",
                    path.display(),
                    hmm.n_symbols,
                    codebook.len()
                )));
            }
            char_models[k].insert(label.clone(), hmm);
        }
        codebooks.push(codebook);
    }

    let [cb_sw, cb_vh]: [crate::hmm::Codebook; 2] = codebooks.try_into().expect("two streams");
    let rec = Recognizer { config, lexicon, codebooks: [cb_sw, cb_vh], char_models };
    rec.config.validate()?;
    Ok(rec)
}
