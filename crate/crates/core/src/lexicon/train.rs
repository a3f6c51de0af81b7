//! End-to-end training: codebook construction, uniform-segmentation
//! bootstrap, and embedded Baum-Welch with character parameters tied across
//! the whole corpus.

use std::collections::{BTreeMap, BTreeSet};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::features::extract_streams;
use crate::hmm::{concat, kmeans, quantize, Codebook, DiscreteHmm};
use crate::preprocess::median3x3;
use super::{Lexicon, Recognizer, Sample};

/// Leave probability reserved on the last state of a fresh character model.
/// Re-estimated from bridge statistics where a character is observed in
/// non-final position; otherwise it stays put.
pub const DEFAULT_EXIT: f64 = 0.3;

/// Train a two-stream recognizer. All randomness (codebook initialization)
/// derives from `seed`; the same corpus, config and seed reproduce the same
/// recognizer bit for bit.
pub fn train(samples: &[Sample], lexicon: &Lexicon, config: &Config, seed: u64) -> Result<Recognizer> {
    let (rec, _) = train_traced(samples, lexicon, config, seed)?;
    Ok(rec)
}

/// Like [`train`], also returning the per-iteration corpus log-likelihood of
/// each stream's embedded trainer.
pub(crate) fn train_traced(
    samples: &[Sample],
    lexicon: &Lexicon,
    config: &Config,
    seed: u64,
) -> Result<(Recognizer, [Vec<f64>; 2])> {
    config.validate()?;
    if samples.is_empty() {
        return Err(Error::invalid("empty corpus"));
    }
    for sample in samples {
        if lexicon.spelling(&sample.label).is_none() {
            return Err(Error::UnknownWord(sample.label.clone()));
        }
    }

    let prepared = prepare(samples, config, seed)?;
    let alphabet = lexicon.alphabet();

    let mut char_models: [BTreeMap<String, DiscreteHmm>; 2] = [BTreeMap::new(), BTreeMap::new()];
    let mut traces: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    for k in 0..2 {
        let mut models = bootstrap_models(&prepared.obs[k], samples, lexicon, config, &alphabet)?;
        let trace = embedded_em(&mut models, &prepared.obs[k], samples, lexicon, config)?;
        char_models[k] = models;
        traces[k] = trace;
    }

    let rec = Recognizer {
        config: config.clone(),
        lexicon: lexicon.clone(),
        codebooks: prepared.codebooks,
        char_models,
    };
    Ok((rec, traces))
}

pub(crate) struct Prepared {
    pub codebooks: [Codebook; 2],
    /// Quantized observation sequences per stream, indexed like `samples`.
    pub obs: [Vec<Vec<usize>>; 2],
}

/// Denoise, extract both streams, build one codebook per stream and quantize
/// every sample. Stream k's codebook is seeded with `seed + k`.
pub(crate) fn prepare(samples: &[Sample], config: &Config, seed: u64) -> Result<Prepared> {
    let params = config.feature_params();
    let mut stream_vectors: [Vec<Vec<Vec<f64>>>; 2] = [Vec::new(), Vec::new()];
    for sample in samples {
        if sample.image.is_blank() {
            return Err(Error::invalid(format!("blank sample for word `{}`", sample.label)));
        }
        let cleaned;
        let image = if config.denoise {
            cleaned = median3x3(&sample.image);
            &cleaned
        } else {
            &sample.image
        };
        let (sw, vh) = extract_streams(image, &params)?;
        stream_vectors[0].push(sw.vectors);
        stream_vectors[1].push(vh.vectors);
    }

    let mut codebooks = Vec::with_capacity(2);
    let mut obs: [Vec<Vec<usize>>; 2] = [Vec::new(), Vec::new()];
    for (k, sequences) in stream_vectors.iter().enumerate() {
        let all: Vec<Vec<f64>> = sequences.iter().flatten().cloned().collect();
        let cb = kmeans(&all, config.codebook_size, seed.wrapping_add(k as u64), config.kmeans_iters)?;
        for seq in sequences {
            let symbols: Vec<usize> =
                seq.iter().map(|v| quantize(v, &cb)).collect::<Result<_>>()?;
            obs[k].push(symbols);
        }
        codebooks.push(cb);
    }
    let [cb_sw, cb_vh]: [Codebook; 2] = codebooks.try_into().expect("two streams");
    Ok(Prepared { codebooks: [cb_sw, cb_vh], obs })
}

/// Fresh character models with emissions seeded by uniform segmentation:
/// each sample's frames are split evenly over its spelling, and each
/// character's share evenly over that character's states.
pub(crate) fn bootstrap_models(
    obs: &[Vec<usize>],
    samples: &[Sample],
    lexicon: &Lexicon,
    config: &Config,
    alphabet: &BTreeSet<String>,
) -> Result<BTreeMap<String, DiscreteHmm>> {
    let s_per = config.states_per_char;
    let n_sym = config.codebook_size;

    let mut models = BTreeMap::new();
    for label in alphabet {
        models.insert(label.clone(), DiscreteHmm::left_right_uniform(s_per, n_sym, DEFAULT_EXIT)?);
    }

    let mut hist: BTreeMap<&str, Vec<f64>> =
        alphabet.iter().map(|l| (l.as_str(), vec![0.0; s_per * n_sym])).collect();
    for (sample, symbols) in samples.iter().zip(obs) {
        let spelling = lexicon.spelling(&sample.label).expect("corpus checked against lexicon");
        let t_len = symbols.len();
        let n_chars = spelling.len();
        for (j, label) in spelling.iter().enumerate() {
            let block = &symbols[j * t_len / n_chars..(j + 1) * t_len / n_chars];
            let counts = hist.get_mut(label.as_str()).expect("alphabet covers spellings");
            for state in 0..s_per {
                for &sym in &block[state * block.len() / s_per..(state + 1) * block.len() / s_per] {
                    counts[state * n_sym + sym] += 1.0;
                }
            }
        }
    }

    for (label, counts) in hist {
        let model = models.get_mut(label).unwrap();
        let mut b = vec![0.0; s_per * n_sym];
        for state in 0..s_per {
            let row = crate::hmm::mstep_row(
                &model.b[state * n_sym..(state + 1) * n_sym],
                &counts[state * n_sym..(state + 1) * n_sym],
                1.0,
                config.prob_floor,
            );
            b[state * n_sym..(state + 1) * n_sym].copy_from_slice(&row);
        }
        let updated = DiscreteHmm::new(model.pi.clone(), model.a.clone(), model.exit, b)?;
        *model = updated;
    }
    Ok(models)
}

/// Per-character-label expectation accumulators.
struct LabelAcc {
    a: Vec<f64>,
    b: Vec<f64>,
    /// Expected bridge crossings out of the last state.
    leave: f64,
}

/// Embedded Baum-Welch: each iteration re-builds every corpus word model
/// from the current character models, accumulates statistics per character
/// label across the whole corpus, then re-estimates each label once.
/// Returns the corpus log-likelihood seen at the start of each iteration.
pub(crate) fn embedded_em(
    models: &mut BTreeMap<String, DiscreteHmm>,
    obs: &[Vec<usize>],
    samples: &[Sample],
    lexicon: &Lexicon,
    config: &Config,
) -> Result<Vec<f64>> {
    let s_per = config.states_per_char;
    let n_sym = config.codebook_size;
    let floor = config.prob_floor;
    let corpus_words: BTreeSet<&str> = samples.iter().map(|s| s.label.as_str()).collect();

    let mut trace = Vec::with_capacity(config.em_iters);
    for _ in 0..config.em_iters {
        let mut word_models = BTreeMap::new();
        for word in &corpus_words {
            let spelling = lexicon.spelling(word).unwrap();
            let refs: Vec<&DiscreteHmm> = spelling.iter().map(|c| &models[c]).collect();
            word_models.insert(*word, concat(&refs, spelling)?);
        }

        let mut accs: BTreeMap<String, LabelAcc> = models
            .keys()
            .map(|l| {
                (
                    l.clone(),
                    LabelAcc { a: vec![0.0; s_per * s_per], b: vec![0.0; s_per * n_sym], leave: 0.0 },
                )
            })
            .collect();

        let mut total_ll = 0.0;
        for (sample, symbols) in samples.iter().zip(obs) {
            let wm = &word_models[sample.label.as_str()];
            let total = wm.hmm.n_states;
            let stats = crate::hmm::accumulate_estep(&wm.hmm, symbols)?;
            total_ll += stats.loglik;

            for (j, label) in wm.labels.iter().enumerate() {
                let (g0, g1) = wm.block_range(j);
                let acc = accs.get_mut(label).unwrap();
                for i in 0..s_per {
                    for jj in i..s_per.min(i + 3) {
                        acc.a[i * s_per + jj] += stats.a_num[(g0 + i) * total + g0 + jj];
                    }
                    for sym in 0..n_sym {
                        acc.b[i * n_sym + sym] += stats.b_num[(g0 + i) * n_sym + sym];
                    }
                }
                if j + 1 < wm.labels.len() {
                    accs.get_mut(label).unwrap().leave += stats.a_num[(g1 - 1) * total + g1];
                }
            }
        }
        trace.push(total_ll);

        for (label, acc) in &accs {
            let model = models.get_mut(label).unwrap();
            let mut a = vec![0.0; s_per * s_per];
            for i in 0..s_per.saturating_sub(1) {
                let row = crate::hmm::mstep_row(
                    &model.a[i * s_per..(i + 1) * s_per],
                    &acc.a[i * s_per..(i + 1) * s_per],
                    1.0,
                    floor,
                );
                a[i * s_per..(i + 1) * s_per].copy_from_slice(&row);
            }
            // Last row: the self-loop and the leave mass form one stochastic
            // pair. Without bridge evidence (the label never occurs before
            // another character) the exit stays as it was.
            let last = s_per - 1;
            let self_stat = acc.a[last * s_per + last];
            let mut exit = model.exit;
            if acc.leave > 0.0 && self_stat + acc.leave > 0.0 {
                let total = self_stat + acc.leave;
                let p_self = (self_stat / total).max(floor);
                let p_leave = (acc.leave / total).max(floor);
                exit = p_leave / (p_self + p_leave);
            }
            a[last * s_per + last] = 1.0 - exit;

            let mut b = vec![0.0; s_per * n_sym];
            for i in 0..s_per {
                let row = crate::hmm::mstep_row(
                    &model.b[i * n_sym..(i + 1) * n_sym],
                    &acc.b[i * n_sym..(i + 1) * n_sym],
                    1.0,
                    floor,
                );
                b[i * n_sym..(i + 1) * n_sym].copy_from_slice(&row);
            }
            *model = DiscreteHmm::new(model.pi.clone(), a, exit, b)?;
        }
    }
    Ok(trace)
}
