//! Discrete-observation left-right hidden Markov models: likelihood
//! evaluation, Viterbi decoding, Baum-Welch training and model
//! concatenation.
//!
//! Transition rows are banded: state `i` may only reach `i`, `i+1` and
//! `i+2`. Every model additionally reserves an `exit` probability on its
//! last state; standalone that mass routes to an implicit absorbing end,
//! and [`concat()`] consumes it as the bridge into the following model.
//! Row stochasticity is therefore understood inclusive of `exit` on the
//! final row.

mod io;
mod vq;

pub use io::{load_model_file, save_model_file, ModelFile};
pub use vq::{distortion, kmeans, quantize, Codebook};

use crate::error::{Error, Result};

const STOCH_TOL: f64 = 1e-12;

/// A discrete-emission left-right HMM with flat row-major matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteHmm {
    pub n_states: usize,
    pub n_symbols: usize,
    /// Initial distribution, concentrated on state 0.
    pub pi: Vec<f64>,
    /// Transition matrix, `n_states * n_states`, banded left-right.
    pub a: Vec<f64>,
    /// Probability of leaving the model from its last state.
    pub exit: f64,
    /// Emission matrix, `n_states * n_symbols`.
    pub b: Vec<f64>,
}

/// A word model: one HMM built by concatenating character models, plus the
/// state offsets where each character block starts.
#[derive(Debug, Clone, PartialEq)]
pub struct WordModel {
    pub hmm: DiscreteHmm,
    /// Strictly increasing block start offsets; `anchors[0] == 0`.
    pub anchors: Vec<usize>,
    /// Character label of each block.
    pub labels: Vec<String>,
}

/// Knobs for [`baum_welch`].
#[derive(Debug, Clone, Copy)]
pub struct BaumWelchOpts {
    pub max_iter: usize,
    /// Stop when the total log-likelihood improves by less than this.
    pub tol: f64,
    /// Floor applied to free emissions and transitions after each M-step.
    pub floor: f64,
}

impl Default for BaumWelchOpts {
    fn default() -> Self {
        BaumWelchOpts { max_iter: 10, tol: 1e-6, floor: 1e-6 }
    }
}

impl DiscreteHmm {
    /// Validate and build a model. Rows must be stochastic (the last row
    /// inclusive of `exit`), transitions banded, and the initial
    /// distribution concentrated on state 0.
    pub fn new(pi: Vec<f64>, a: Vec<f64>, exit: f64, b: Vec<f64>) -> Result<Self> {
        let s = pi.len();
        if s == 0 {
            return Err(Error::invalid("model needs at least one state"));
        }
        if a.len() != s * s {
            return Err(Error::invalid("transition matrix shape mismatch"));
        }
        if b.len() % s != 0 || b.is_empty() {
            return Err(Error::invalid("emission matrix shape mismatch"));
        }
        let k = b.len() / s;
        if !(0.0..=1.0).contains(&exit) {
            return Err(Error::invalid("exit mass must be in [0, 1]"));
        }
        if (pi[0] - 1.0).abs() > STOCH_TOL || pi[1..].iter().any(|&p| p != 0.0) {
            return Err(Error::invalid("pi must be concentrated on state 0"));
        }
        for i in 0..s {
            let mut sum = 0.0;
            for j in 0..s {
                let v = a[i * s + j];
                if v < 0.0 {
                    return Err(Error::invalid("negative transition probability"));
                }
                if v != 0.0 && (j < i || j > i + 2) {
                    return Err(Error::invalid(format!(
                        "transition {i}->{j} breaks the left-right band"
                    )));
                }
                sum += v;
            }
            let target = if i == s - 1 { 1.0 - exit } else { 1.0 };
            if (sum - target).abs() > STOCH_TOL {
                return Err(Error::invalid(format!("transition row {i} sums to {sum}")));
            }
        }
        for i in 0..s {
            let row = &b[i * k..(i + 1) * k];
            if row.iter().any(|&p| p < 0.0) {
                return Err(Error::invalid("negative emission probability"));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > STOCH_TOL {
                return Err(Error::invalid(format!("emission row {i} sums to {sum}")));
            }
        }
        Ok(DiscreteHmm { n_states: s, n_symbols: k, pi, a, exit, b })
    }

    /// Fresh left-right character model: self/advance/skip transitions with a
    /// fixed split, uniform emissions, and the given exit mass reserved on
    /// the last state.
    pub fn left_right_uniform(n_states: usize, n_symbols: usize, exit: f64) -> Result<Self> {
        if n_states == 0 || n_symbols == 0 {
            return Err(Error::invalid("states and symbols must be positive"));
        }
        let s = n_states;
        let mut a = vec![0.0; s * s];
        for i in 0..s {
            if i + 2 < s {
                a[i * s + i] = 0.5;
                a[i * s + i + 1] = 0.35;
                a[i * s + i + 2] = 0.15;
            } else if i + 1 < s {
                a[i * s + i] = 0.6;
                a[i * s + i + 1] = 0.4;
            } else {
                a[i * s + i] = 1.0 - exit;
            }
        }
        let mut pi = vec![0.0; s];
        pi[0] = 1.0;
        let b = vec![1.0 / n_symbols as f64; s * n_symbols];
        DiscreteHmm::new(pi, a, exit, b)
    }

    #[inline]
    pub fn a(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n_states + j]
    }

    #[inline]
    pub fn b(&self, i: usize, k: usize) -> f64 {
        self.b[i * self.n_symbols + k]
    }

    fn check_obs(&self, obs: &[usize]) -> Result<()> {
        if obs.is_empty() {
            return Err(Error::invalid("empty observation sequence"));
        }
        if let Some(&bad) = obs.iter().find(|&&o| o >= self.n_symbols) {
            return Err(Error::invalid(format!(
                "symbol {bad} out of range (codebook size {})",
                self.n_symbols
            )));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Likelihood and decoding
// ---------------------------------------------------------------------------

/// Scaled forward pass: normalized alphas plus the per-step scale factors.
/// A scale of zero means the prefix is impossible; the log-likelihood is
/// then negative infinity.
fn forward_scaled(model: &DiscreteHmm, obs: &[usize]) -> (Vec<f64>, Vec<f64>) {
    let s = model.n_states;
    let t_len = obs.len();
    let mut alpha = vec![0.0; t_len * s];
    let mut scales = vec![0.0; t_len];

    for i in 0..s {
        alpha[i] = model.pi[i] * model.b(i, obs[0]);
    }
    scales[0] = alpha[..s].iter().sum();
    if scales[0] > 0.0 {
        for i in 0..s {
            alpha[i] /= scales[0];
        }
    }
    for t in 1..t_len {
        let (prev, cur) = alpha.split_at_mut(t * s);
        let prev = &prev[(t - 1) * s..];
        let cur = &mut cur[..s];
        for j in 0..s {
            let mut acc = 0.0;
            // Banded: only i in {j-2, j-1, j} can reach j.
            for i in j.saturating_sub(2)..=j {
                acc += prev[i] * model.a(i, j);
            }
            cur[j] = acc * model.b(j, obs[t]);
        }
        scales[t] = cur.iter().sum();
        if scales[t] > 0.0 {
            for v in cur.iter_mut() {
                *v /= scales[t];
            }
        }
    }
    (alpha, scales)
}

/// Natural-log likelihood of `obs` under `model` via the scaled forward
/// algorithm. Returns negative infinity for impossible sequences.
pub fn loglik_forward(model: &DiscreteHmm, obs: &[usize]) -> Result<f64> {
    model.check_obs(obs)?;
    let (_, scales) = forward_scaled(model, obs);
    let mut ll = 0.0;
    for &c in &scales {
        if c == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        ll += c.ln();
    }
    Ok(ll)
}

/// Most probable state path and its log probability. Ties at each step go
/// to the smaller predecessor state, and to the smaller final state, which
/// makes the result the reverse-lexicographically smallest optimal path.
pub fn viterbi(model: &DiscreteHmm, obs: &[usize]) -> Result<(f64, Vec<usize>)> {
    model.check_obs(obs)?;
    let s = model.n_states;
    let t_len = obs.len();

    let log_a: Vec<f64> = model.a.iter().map(|&p| p.ln()).collect();
    let log_b: Vec<f64> = model.b.iter().map(|&p| p.ln()).collect();

    let mut delta = vec![f64::NEG_INFINITY; t_len * s];
    let mut back = vec![0usize; t_len * s];

    for i in 0..s {
        delta[i] = model.pi[i].ln() + log_b[i * model.n_symbols + obs[0]];
    }
    for t in 1..t_len {
        for j in 0..s {
            let mut best = f64::NEG_INFINITY;
            let mut best_i = 0usize;
            for i in 0..s {
                let cand = delta[(t - 1) * s + i] + log_a[i * s + j];
                if cand > best {
                    best = cand;
                    best_i = i;
                }
            }
            delta[t * s + j] = best + log_b[j * model.n_symbols + obs[t]];
            back[t * s + j] = best_i;
        }
    }

    let mut end = 0usize;
    for j in 1..s {
        if delta[(t_len - 1) * s + j] > delta[(t_len - 1) * s + end] {
            end = j;
        }
    }
    let logprob = delta[(t_len - 1) * s + end];

    let mut path = vec![0usize; t_len];
    path[t_len - 1] = end;
    for t in (0..t_len - 1).rev() {
        path[t] = back[(t + 1) * s + path[t + 1]];
    }
    Ok((logprob, path))
}

// ---------------------------------------------------------------------------
// Baum-Welch
// ---------------------------------------------------------------------------

/// Per-sequence expectation statistics.
pub(crate) struct EStats {
    pub loglik: f64,
    /// State occupancy at t = 0.
    pub gamma0: Vec<f64>,
    /// Expected transition counts, `S x S`.
    pub a_num: Vec<f64>,
    /// Expected emission counts, `S x K`.
    pub b_num: Vec<f64>,
}

/// One E-step over a single sequence with Rabiner-style scaling.
pub(crate) fn accumulate_estep(model: &DiscreteHmm, obs: &[usize]) -> Result<EStats> {
    model.check_obs(obs)?;
    let s = model.n_states;
    let k = model.n_symbols;
    let t_len = obs.len();

    let (alpha, scales) = forward_scaled(model, obs);
    if scales.iter().any(|&c| c == 0.0) {
        return Err(Error::invalid("training sequence impossible under current model"));
    }
    let loglik: f64 = scales.iter().map(|&c| c.ln()).sum();

    // Backward, scaled by the forward factors so alpha * beta = gamma.
    let mut beta = vec![0.0; t_len * s];
    for i in 0..s {
        beta[(t_len - 1) * s + i] = 1.0;
    }
    for t in (0..t_len - 1).rev() {
        let ot1 = obs[t + 1];
        for i in 0..s {
            let mut acc = 0.0;
            for j in i..(i + 3).min(s) {
                acc += model.a(i, j) * model.b(j, ot1) * beta[(t + 1) * s + j];
            }
            beta[t * s + i] = acc / scales[t + 1];
        }
    }

    let mut gamma0 = vec![0.0; s];
    for i in 0..s {
        gamma0[i] = alpha[i] * beta[i];
    }
    let g0: f64 = gamma0.iter().sum();
    for v in gamma0.iter_mut() {
        *v /= g0;
    }

    let mut a_num = vec![0.0; s * s];
    let mut b_num = vec![0.0; s * k];
    for t in 0..t_len {
        for i in 0..s {
            let g = alpha[t * s + i] * beta[t * s + i];
            b_num[i * k + obs[t]] += g;
        }
        if t + 1 < t_len {
            let ot1 = obs[t + 1];
            for i in 0..s {
                for j in i..(i + 3).min(s) {
                    let x = alpha[t * s + i] * model.a(i, j) * model.b(j, ot1)
                        * beta[(t + 1) * s + j]
                        / scales[t + 1];
                    a_num[i * s + j] += x;
                }
            }
        }
    }
    Ok(EStats { loglik, gamma0, a_num, b_num })
}

/// M-step for one stochastic row: statistics are normalized over the free
/// entries (those nonzero in `current`), floored, and renormalized to
/// `target_mass`. A row with no evidence keeps its current values; zero
/// entries stay zero.
pub(crate) fn mstep_row(current: &[f64], stats: &[f64], target_mass: f64, floor: f64) -> Vec<f64> {
    let free: Vec<usize> = (0..current.len()).filter(|&j| current[j] != 0.0).collect();
    let denom: f64 = free.iter().map(|&j| stats[j]).sum();
    if denom <= 0.0 || free.is_empty() {
        return current.to_vec();
    }
    let mut row = vec![0.0; current.len()];
    let mut mass = 0.0;
    for &j in &free {
        row[j] = (stats[j] / denom).max(floor);
        mass += row[j];
    }
    for &j in &free {
        row[j] *= target_mass / mass;
    }
    row
}

/// Multi-sequence Baum-Welch re-estimation. Structural zeros and the
/// left-right band are preserved, free parameters are floored and
/// renormalized after each M-step, and the exit mass is left untouched.
pub fn baum_welch(
    model: &DiscreteHmm,
    sequences: &[Vec<usize>],
    opts: &BaumWelchOpts,
) -> Result<DiscreteHmm> {
    if sequences.is_empty() {
        return Err(Error::invalid("empty training set"));
    }
    let s = model.n_states;
    let k = model.n_symbols;
    let mut current = model.clone();
    let mut prev_ll = f64::NEG_INFINITY;

    for _ in 0..opts.max_iter {
        let mut total_ll = 0.0;
        let mut pi_acc = vec![0.0; s];
        let mut a_num = vec![0.0; s * s];
        let mut b_num = vec![0.0; s * k];
        for obs in sequences {
            let stats = accumulate_estep(&current, obs)?;
            total_ll += stats.loglik;
            for i in 0..s {
                pi_acc[i] += stats.gamma0[i];
            }
            for (acc, v) in a_num.iter_mut().zip(&stats.a_num) {
                *acc += v;
            }
            for (acc, v) in b_num.iter_mut().zip(&stats.b_num) {
                *acc += v;
            }
        }

        let pi_sum: f64 = pi_acc.iter().sum();
        let mut pi = pi_acc;
        for v in pi.iter_mut() {
            *v /= pi_sum;
        }
        let mut a = vec![0.0; s * s];
        for i in 0..s {
            let target = if i == s - 1 { 1.0 - current.exit } else { 1.0 };
            let row = mstep_row(
                &current.a[i * s..(i + 1) * s],
                &a_num[i * s..(i + 1) * s],
                target,
                opts.floor,
            );
            a[i * s..(i + 1) * s].copy_from_slice(&row);
        }
        let mut b = vec![0.0; s * k];
        for i in 0..s {
            let row =
                mstep_row(&current.b[i * k..(i + 1) * k], &b_num[i * k..(i + 1) * k], 1.0, opts.floor);
            b[i * k..(i + 1) * k].copy_from_slice(&row);
        }
        current = DiscreteHmm { n_states: s, n_symbols: k, pi, a, exit: current.exit, b };

        if total_ll - prev_ll < opts.tol && prev_ll != f64::NEG_INFINITY {
            break;
        }
        prev_ll = total_ll;
    }
    Ok(current)
}

// ---------------------------------------------------------------------------
// Concatenation
// ---------------------------------------------------------------------------

/// Concatenate character models into a word model. Blocks sit on the
/// diagonal and each model's exit mass becomes the single bridge from its
/// last state to the next block's first state; the final block keeps its
/// exit mass.
pub fn concat(models: &[&DiscreteHmm], labels: &[String]) -> Result<WordModel> {
    if models.is_empty() {
        return Err(Error::invalid("concat needs at least one model"));
    }
    if models.len() != labels.len() {
        return Err(Error::invalid("one label per model required"));
    }
    let k = models[0].n_symbols;
    if models.iter().any(|m| m.n_symbols != k) {
        return Err(Error::invalid("codebook size mismatch between character models"));
    }

    let total: usize = models.iter().map(|m| m.n_states).sum();
    let mut anchors = Vec::with_capacity(models.len());
    let mut a = vec![0.0; total * total];
    let mut b = vec![0.0; total * k];
    let mut pi = vec![0.0; total];
    pi[0] = 1.0;

    let mut offset = 0;
    for (idx, m) in models.iter().enumerate() {
        anchors.push(offset);
        let s = m.n_states;
        for i in 0..s {
            for j in 0..s {
                a[(offset + i) * total + offset + j] = m.a(i, j);
            }
            for sym in 0..k {
                b[(offset + i) * k + sym] = m.b(i, sym);
            }
        }
        if idx + 1 < models.len() {
            a[(offset + s - 1) * total + offset + s] = m.exit;
        }
        offset += s;
    }

    let hmm = DiscreteHmm::new(pi, a, models.last().unwrap().exit, b)?;
    Ok(WordModel { hmm, anchors, labels: labels.to_vec() })
}

impl WordModel {
    /// Block index of each global state.
    pub fn block_of_state(&self) -> Vec<usize> {
        let mut map = vec![0usize; self.hmm.n_states];
        for (block, window) in self.anchors.windows(2).enumerate() {
            for g in window[0]..window[1] {
                map[g] = block;
            }
        }
        let last = self.anchors.len() - 1;
        for g in self.anchors[last]..self.hmm.n_states {
            map[g] = last;
        }
        map
    }

    /// Extent `[start, end)` of block `j` in global state indices.
    pub fn block_range(&self, j: usize) -> (usize, usize) {
        let start = self.anchors[j];
        let end = if j + 1 < self.anchors.len() { self.anchors[j + 1] } else { self.hmm.n_states };
        (start, end)
    }
}

#[cfg(test)]
mod tests;
