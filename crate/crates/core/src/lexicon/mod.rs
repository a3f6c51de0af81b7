//! Closed-vocabulary recognition: the character-model registry, word models
//! by concatenation, end-to-end training and ranked recognition.

mod bundle;
mod train;

pub use bundle::{load_bundle, save_bundle};
pub use train::{train, DEFAULT_EXIT};

use std::collections::{BTreeMap, BTreeSet};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::features::{extract_streams, StreamId};
use crate::hmm::{concat, quantize, viterbi, Codebook, DiscreteHmm, WordModel};
use crate::multistream::{rank_words, Candidate, StreamWeights};
use crate::preprocess::median3x3;
use crate::raster::BinaryImage;

/// Word label to spelling (character labels in reading order, index 0 being
/// the rightmost, first-read character).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicon {
    entries: BTreeMap<String, Vec<String>>,
}

impl Lexicon {
    pub fn new(entries: BTreeMap<String, Vec<String>>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::invalid("lexicon must not be empty"));
        }
        for (word, spelling) in &entries {
            if word.is_empty() || spelling.is_empty() {
                return Err(Error::invalid(format!("word `{word}` has an empty spelling")));
            }
            // Labels become bundle file names; keep them flat tokens.
            if spelling
                .iter()
                .any(|c| c.is_empty() || c.contains(|ch: char| ch.is_whitespace() || ch == '/' || ch == '\\'))
            {
                return Err(Error::invalid(format!("word `{word}` has a malformed label")));
            }
        }
        Ok(Lexicon { entries })
    }

    pub fn spelling(&self, word: &str) -> Option<&[String]> {
        self.entries.get(word).map(|v| v.as_slice())
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Every character label used by some spelling, sorted.
    pub fn alphabet(&self) -> BTreeSet<String> {
        self.entries.values().flatten().cloned().collect()
    }

    /// Parse `word TAB label label ...` lines.
    pub fn parse_tsv(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim_end();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (word, rest) = line.split_once('\t').ok_or_else(|| {
                Error::invalid(format!("lexicon line {}: expected word TAB spelling", lineno + 1))
            })?;
            let spelling: Vec<String> = rest.split_whitespace().map(str::to_string).collect();
            if entries.insert(word.to_string(), spelling).is_some() {
                return Err(Error::invalid(format!("duplicate lexicon word `{word}`")));
            }
        }
        Lexicon::new(entries)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (word, spelling) in &self.entries {
            out.push_str(word);
            out.push('\t');
            out.push_str(&spelling.join(" "));
            out.push('\n');
        }
        out
    }
}

/// One labeled word image.
#[derive(Debug, Clone)]
pub struct Sample {
    pub label: String,
    pub image: BinaryImage,
}

/// Ranked candidates for one word image, best first.
#[derive(Debug, Clone, PartialEq)]
pub struct RecognitionResult {
    pub ranking: Vec<Candidate>,
}

impl RecognitionResult {
    pub fn top(&self) -> &Candidate {
        &self.ranking[0]
    }
}

/// A trained two-stream recognizer: per-stream codebooks and tied character
/// models, fusion weights, and the configuration snapshot it was built with.
#[derive(Debug, Clone)]
pub struct Recognizer {
    pub config: Config,
    pub lexicon: Lexicon,
    pub codebooks: [Codebook; 2],
    pub char_models: [BTreeMap<String, DiscreteHmm>; 2],
}

pub(crate) fn stream_index(stream: StreamId) -> usize {
    match stream {
        StreamId::Sw => 0,
        StreamId::Vh2d => 1,
    }
}

impl Recognizer {
    pub fn weights(&self) -> StreamWeights {
        StreamWeights::new(self.config.weight_sw, self.config.weight_vh2d)
            .expect("config weights were validated at construction")
    }

    /// Concatenate the character models of `word`'s spelling for one stream.
    pub fn build_word_model(&self, word: &str, stream: StreamId) -> Result<WordModel> {
        let spelling =
            self.lexicon.spelling(word).ok_or_else(|| Error::UnknownWord(word.to_string()))?;
        let models = &self.char_models[stream_index(stream)];
        let mut refs = Vec::with_capacity(spelling.len());
        for label in spelling {
            refs.push(
                models.get(label).ok_or_else(|| Error::UnknownCharacter(label.clone()))?,
            );
        }
        concat(&refs, spelling)
    }

    /// Denoise (when configured), extract both streams and quantize them.
    pub fn quantized_streams(&self, image: &BinaryImage) -> Result<[Vec<usize>; 2]> {
        if image.is_blank() {
            return Err(Error::invalid("blank image"));
        }
        let cleaned;
        let image = if self.config.denoise {
            cleaned = median3x3(image);
            &cleaned
        } else {
            image
        };
        let (sw, vh) = extract_streams(image, &self.config.feature_params())?;
        let q = |seq: &[Vec<f64>], cb: &Codebook| -> Result<Vec<usize>> {
            seq.iter().map(|v| quantize(v, cb)).collect()
        };
        Ok([q(&sw.vectors, &self.codebooks[0])?, q(&vh.vectors, &self.codebooks[1])?])
    }

    /// Per-word per-stream Viterbi scores for one image, in lexicon order.
    pub fn score_table(&self, image: &BinaryImage) -> Result<Vec<(String, [f64; 2])>> {
        let obs = self.quantized_streams(image)?;
        self.score_quantized(&obs)
    }

    pub(crate) fn score_quantized(&self, obs: &[Vec<usize>; 2]) -> Result<Vec<(String, [f64; 2])>> {
        let words: Vec<&str> = self.lexicon.words().collect();
        let mut table = Vec::with_capacity(words.len());
        for word in words {
            let mut scores = [0.0f64; 2];
            for (k, stream) in [StreamId::Sw, StreamId::Vh2d].into_iter().enumerate() {
                let wm = self.build_word_model(word, stream)?;
                let (lp, _) = viterbi(&wm.hmm, &obs[k])?;
                scores[k] = lp;
            }
            table.push((word.to_string(), scores));
        }
        Ok(table)
    }

    /// Score every lexicon word on both streams and fuse with the configured
    /// weights. The ranking carries the per-stream breakdown.
    pub fn recognize(&self, image: &BinaryImage) -> Result<RecognitionResult> {
        let table = self.score_table(image)?;
        Ok(RecognitionResult { ranking: rank_words(&table, &self.weights()) })
    }
}
