//! Vector quantization: seeded k-means codebooks and nearest-centroid
//! symbol assignment.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// A VQ codebook; symbol `s` is centroid `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    pub dim: usize,
    pub centroids: Vec<Vec<f64>>,
}

impl Codebook {
    pub fn len(&self) -> usize {
        self.centroids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centroids.is_empty()
    }
}

#[inline]
fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(v: &[f64], centroids: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = sq_dist(v, &centroids[0]);
    for (c, centroid) in centroids.iter().enumerate().skip(1) {
        let d = sq_dist(v, centroid);
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    best
}

/// Lloyd's algorithm from a seeded initialization: the distinct input
/// vectors are shuffled and the first `k` become the starting centroids.
/// Empty clusters re-seed at the point farthest from its centroid. Stops
/// when assignments no longer change or after `max_iter` rounds.
pub fn kmeans(vectors: &[Vec<f64>], k: usize, seed: u64, max_iter: usize) -> Result<Codebook> {
    if k == 0 || max_iter == 0 {
        return Err(Error::invalid("k and max_iter must be positive"));
    }
    let Some(first) = vectors.first() else {
        return Err(Error::invalid("no vectors to quantize"));
    };
    let dim = first.len();
    if vectors.iter().any(|v| v.len() != dim) {
        return Err(Error::invalid("inconsistent vector dimensions"));
    }

    // Distinct vectors in first-occurrence order, compared bit-exactly.
    let mut seen: HashSet<Vec<u64>> = HashSet::new();
    let mut distinct: Vec<&Vec<f64>> = Vec::new();
    for v in vectors {
        let key: Vec<u64> = v.iter().map(|x| x.to_bits()).collect();
        if seen.insert(key) {
            distinct.push(v);
        }
    }
    if distinct.len() < k {
        return Err(Error::invalid(format!(
            "need at least {k} distinct vectors, found {}",
            distinct.len()
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    distinct.shuffle(&mut rng);
    let mut centroids: Vec<Vec<f64>> = distinct[..k].iter().map(|v| (*v).clone()).collect();

    let n = vectors.len();
    let mut assign = vec![usize::MAX; n];
    for _ in 0..max_iter {
        let mut new_assign: Vec<usize> = vectors.iter().map(|v| nearest(v, &centroids)).collect();

        // Revive empty clusters at the globally farthest point.
        let mut counts = vec![0usize; k];
        for &c in &new_assign {
            counts[c] += 1;
        }
        let mut taken = vec![false; n];
        for c in 0..k {
            if counts[c] > 0 {
                continue;
            }
            let mut far = None;
            let mut far_d = -1.0;
            for (i, v) in vectors.iter().enumerate() {
                if taken[i] {
                    continue;
                }
                let d = sq_dist(v, &centroids[new_assign[i]]);
                if d > far_d {
                    far_d = d;
                    far = Some(i);
                }
            }
            let i = far.expect("point set cannot be empty here");
            counts[new_assign[i]] -= 1;
            centroids[c] = vectors[i].clone();
            new_assign[i] = c;
            counts[c] = 1;
            taken[i] = true;
        }

        if new_assign == assign {
            break;
        }
        assign = new_assign;

        let mut sums = vec![vec![0.0; dim]; k];
        for (v, &c) in vectors.iter().zip(&assign) {
            for (s, x) in sums[c].iter_mut().zip(v) {
                *s += x;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                for s in sums[c].iter_mut() {
                    *s /= counts[c] as f64;
                }
                centroids[c] = std::mem::take(&mut sums[c]);
            }
        }
    }

    debug_assert!(
        {
            let mut keys: Vec<Vec<u64>> = centroids
                .iter()
                .map(|c| c.iter().map(|x| x.to_bits()).collect())
                .collect();
            keys.sort();
            keys.windows(2).all(|w| w[0] != w[1])
        },
        "codebook centroids must be pairwise distinct"
    );
    Ok(Codebook { dim, centroids })
}

/// Index of the nearest centroid by squared Euclidean distance; ties go to
/// the lowest index.
pub fn quantize(v: &[f64], codebook: &Codebook) -> Result<usize> {
    if v.len() != codebook.dim {
        return Err(Error::invalid(format!(
            "vector dimension {} does not match codebook dimension {}",
            v.len(),
            codebook.dim
        )));
    }
    Ok(nearest(v, &codebook.centroids))
}

/// Total squared distance of every vector to its nearest centroid.
pub fn distortion(vectors: &[Vec<f64>], codebook: &Codebook) -> f64 {
    vectors.iter().map(|v| sq_dist(v, &codebook.centroids[nearest(v, &codebook.centroids)])).sum()
}
