//! Combining the two per-stream recognizers: weighted log-likelihood score
//! fusion, candidate ranking, and the composite parallel model that decodes
//! both streams jointly with anchor synchronization.

use crate::error::{Error, Result};
use crate::hmm::WordModel;

/// Per-stream reliability weights; non-negative, summing to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamWeights {
    w: [f64; 2],
}

impl StreamWeights {
    pub fn new(w1: f64, w2: f64) -> Result<Self> {
        if w1 < 0.0 || w2 < 0.0 {
            return Err(Error::invalid("stream weights must be non-negative"));
        }
        if (w1 + w2 - 1.0).abs() > 1e-12 {
            return Err(Error::invalid("stream weights must sum to 1"));
        }
        Ok(StreamWeights { w: [w1, w2] })
    }

    #[inline]
    pub fn get(&self, k: usize) -> f64 {
        self.w[k]
    }
}

/// `w * log_p` with the convention that a zero weight contributes nothing,
/// even to an impossible (negative-infinity) score.
#[inline]
fn weighted(w: f64, log_p: f64) -> f64 {
    if w == 0.0 {
        0.0
    } else {
        w * log_p
    }
}

/// Weighted sum of per-stream log-likelihoods. Negative infinity propagates
/// through any positively weighted stream.
pub fn fuse_loglik(stream_logliks: [f64; 2], weights: &StreamWeights) -> f64 {
    weighted(weights.get(0), stream_logliks[0]) + weighted(weights.get(1), stream_logliks[1])
}

/// One ranked recognition candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub word: String,
    pub fused: f64,
    pub per_stream: [f64; 2],
}

/// Rank candidate words by fused score, descending; ties fall back to
/// lexicographic word order.
pub fn rank_words(word_scores: &[(String, [f64; 2])], weights: &StreamWeights) -> Vec<Candidate> {
    let mut out: Vec<Candidate> = word_scores
        .iter()
        .map(|(word, scores)| Candidate {
            word: word.clone(),
            fused: fuse_loglik(*scores, weights),
            per_stream: *scores,
        })
        .collect();
    out.sort_by(|x, y| y.fused.total_cmp(&x.fused).then_with(|| x.word.cmp(&y.word)));
    out
}

/// How the two chains of a composite model are synchronized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnchorPolicy {
    /// Chains share only the start and the end of the word.
    Word,
    /// Chains must cross every character anchor at the same frame.
    Character,
}

/// Product model over two word models with the same character segmentation.
/// Transition and emission weights are the fused (weighted) log scores; the
/// state space is the full product under [`AnchorPolicy::Word`] and the
/// blockwise product under [`AnchorPolicy::Character`].
#[derive(Debug, Clone)]
pub struct CompositeHmm {
    pub model_a: WordModel,
    pub model_b: WordModel,
    pub weights: StreamWeights,
    pub anchor_policy: AnchorPolicy,
    block_a: Vec<usize>,
    block_b: Vec<usize>,
}

/// Build the composite of two word models. The models must spell the same
/// label sequence.
pub fn build_composite(
    wm_a: &WordModel,
    wm_b: &WordModel,
    weights: StreamWeights,
    anchor_policy: AnchorPolicy,
) -> Result<CompositeHmm> {
    if wm_a.labels != wm_b.labels {
        return Err(Error::invalid("word models spell different label sequences"));
    }
    Ok(CompositeHmm {
        block_a: wm_a.block_of_state(),
        block_b: wm_b.block_of_state(),
        model_a: wm_a.clone(),
        model_b: wm_b.clone(),
        weights,
        anchor_policy,
    })
}

impl CompositeHmm {
    #[inline]
    fn pair_valid(&self, sa: usize, sb: usize) -> bool {
        match self.anchor_policy {
            AnchorPolicy::Word => true,
            AnchorPolicy::Character => self.block_a[sa] == self.block_b[sb],
        }
    }

    /// Number of valid product states.
    pub fn product_states(&self) -> usize {
        let na = self.model_a.hmm.n_states;
        let nb = self.model_b.hmm.n_states;
        (0..na).map(|sa| (0..nb).filter(|&sb| self.pair_valid(sa, sb)).count()).sum()
    }
}

/// Joint Viterbi over the product space: maximizes the fused additive score
/// over pair paths. Ties prefer the lexicographically smaller (sA, sB)
/// predecessor and final pair.
pub fn viterbi_composite(
    comp: &CompositeHmm,
    obs_a: &[usize],
    obs_b: &[usize],
) -> Result<(f64, Vec<(usize, usize)>)> {
    if obs_a.len() != obs_b.len() {
        return Err(Error::invalid("stream observation lengths differ"));
    }
    if obs_a.is_empty() {
        return Err(Error::invalid("empty observation sequence"));
    }
    let ha = &comp.model_a.hmm;
    let hb = &comp.model_b.hmm;
    if obs_a.iter().any(|&o| o >= ha.n_symbols) || obs_b.iter().any(|&o| o >= hb.n_symbols) {
        return Err(Error::invalid("symbol out of range"));
    }
    let (w1, w2) = (comp.weights.get(0), comp.weights.get(1));
    let na = ha.n_states;
    let nb = hb.n_states;
    let t_len = obs_a.len();
    let idx = |sa: usize, sb: usize| sa * nb + sb;

    let emit = |sa: usize, sb: usize, t: usize| {
        weighted(w1, ha.b(sa, obs_a[t]).ln()) + weighted(w2, hb.b(sb, obs_b[t]).ln())
    };

    let mut delta = vec![f64::NEG_INFINITY; t_len * na * nb];
    let mut back = vec![(0usize, 0usize); t_len * na * nb];

    for sa in 0..na {
        for sb in 0..nb {
            if !comp.pair_valid(sa, sb) {
                continue;
            }
            delta[idx(sa, sb)] = weighted(w1, ha.pi[sa].ln())
                + weighted(w2, hb.pi[sb].ln())
                + emit(sa, sb, 0);
        }
    }

    for t in 1..t_len {
        for ja in 0..na {
            for jb in 0..nb {
                if !comp.pair_valid(ja, jb) {
                    continue;
                }
                let mut best = f64::NEG_INFINITY;
                let mut best_pred = (0usize, 0usize);
                // Banded chains: only predecessors within two states back.
                for ia in ja.saturating_sub(2)..=ja {
                    for ib in jb.saturating_sub(2)..=jb {
                        if !comp.pair_valid(ia, ib) {
                            continue;
                        }
                        let prev = delta[(t - 1) * na * nb + idx(ia, ib)];
                        let cand = prev
                            + weighted(w1, ha.a(ia, ja).ln())
                            + weighted(w2, hb.a(ib, jb).ln());
                        if cand > best {
                            best = cand;
                            best_pred = (ia, ib);
                        }
                    }
                }
                delta[t * na * nb + idx(ja, jb)] = best + emit(ja, jb, t);
                back[t * na * nb + idx(ja, jb)] = best_pred;
            }
        }
    }

    let mut end = (0usize, 0usize);
    let mut end_score = f64::NEG_INFINITY;
    let mut have = false;
    for sa in 0..na {
        for sb in 0..nb {
            if !comp.pair_valid(sa, sb) {
                continue;
            }
            let v = delta[(t_len - 1) * na * nb + idx(sa, sb)];
            if !have || v > end_score {
                end_score = v;
                end = (sa, sb);
                have = true;
            }
        }
    }

    let mut path = vec![(0usize, 0usize); t_len];
    path[t_len - 1] = end;
    for t in (0..t_len - 1).rev() {
        let (sa, sb) = path[t + 1];
        path[t] = back[(t + 1) * na * nb + idx(sa, sb)];
    }
    Ok((end_score, path))
}
