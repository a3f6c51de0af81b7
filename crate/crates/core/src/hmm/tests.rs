use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;

// ---------------------------------------------------------------------------
// Builders and oracles
// ---------------------------------------------------------------------------

/// Random left-right model with the band's free entries drawn positive and
/// rows renormalized; pi stays concentrated on state 0.
pub(crate) fn random_left_right(
    rng: &mut ChaCha8Rng,
    n_states: usize,
    n_symbols: usize,
) -> DiscreteHmm {
    let s = n_states;
    let exit = if rng.gen_bool(0.5) { 0.0 } else { rng.gen_range(0.05..0.5) };
    let mut a = vec![0.0; s * s];
    for i in 0..s {
        let targets: Vec<usize> = (i..s.min(i + 3)).collect();
        let weights: Vec<f64> = targets.iter().map(|_| rng.gen_range(0.05..1.0)).collect();
        let mass: f64 = weights.iter().sum();
        let target_mass = if i == s - 1 { 1.0 - exit } else { 1.0 };
        for (j, w) in targets.iter().zip(&weights) {
            a[i * s + j] = w / mass * target_mass;
        }
    }
    let mut b = vec![0.0; s * n_symbols];
    for i in 0..s {
        let weights: Vec<f64> = (0..n_symbols).map(|_| rng.gen_range(0.05..1.0)).collect();
        let mass: f64 = weights.iter().sum();
        for k in 0..n_symbols {
            b[i * n_symbols + k] = weights[k] / mass;
        }
    }
    let mut pi = vec![0.0; s];
    pi[0] = 1.0;
    DiscreteHmm::new(pi, a, exit, b).unwrap()
}

/// Sum over every state path, in probability space. Independent of the
/// scaled forward implementation.
pub(crate) fn enumerate_loglik(model: &DiscreteHmm, obs: &[usize]) -> f64 {
    let s = model.n_states;
    let mut total = 0.0;
    let mut path = vec![0usize; obs.len()];
    enumerate_paths(s, obs.len(), 0, &mut path, &mut |path| {
        let mut p = model.pi[path[0]] * model.b(path[0], obs[0]);
        for t in 1..obs.len() {
            p *= model.a(path[t - 1], path[t]) * model.b(path[t], obs[t]);
        }
        total += p;
    });
    total.ln()
}

/// Best path by exhaustive search, mirroring the decoder's arithmetic
/// (log-space, left-to-right accumulation) and its tie-break: among equal
/// scores the reverse-lexicographically smallest path wins.
pub(crate) fn enumerate_viterbi(model: &DiscreteHmm, obs: &[usize]) -> (f64, Vec<usize>) {
    let s = model.n_states;
    let mut best_score = f64::NEG_INFINITY;
    let mut best_path: Option<Vec<usize>> = None;
    let mut path = vec![0usize; obs.len()];
    enumerate_paths(s, obs.len(), 0, &mut path, &mut |path| {
        let mut score = model.pi[path[0]].ln() + model.b(path[0], obs[0]).ln();
        for t in 1..obs.len() {
            score += model.a(path[t - 1], path[t]).ln();
            score += model.b(path[t], obs[t]).ln();
        }
        let better = match &best_path {
            None => true,
            Some(cur) => {
                score > best_score
                    || (score == best_score
                        && path.iter().rev().lt(cur.iter().rev()))
            }
        };
        if better {
            best_score = score;
            best_path = Some(path.to_vec());
        }
    });
    (best_score, best_path.unwrap())
}

fn enumerate_paths(
    s: usize,
    t_len: usize,
    depth: usize,
    path: &mut Vec<usize>,
    visit: &mut impl FnMut(&[usize]),
) {
    if depth == t_len {
        visit(path);
        return;
    }
    for state in 0..s {
        path[depth] = state;
        enumerate_paths(s, t_len, depth + 1, path, visit);
    }
}

fn check_invariants(m: &DiscreteHmm) {
    let s = m.n_states;
    assert!((m.pi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert_eq!(m.pi[0], 1.0);
    for i in 0..s {
        let sum: f64 = (0..s).map(|j| m.a(i, j)).sum();
        let target = if i == s - 1 { 1.0 - m.exit } else { 1.0 };
        assert!((sum - target).abs() < 1e-12, "row {i} sums to {sum}");
        for j in 0..s {
            if j < i || j > i + 2 {
                assert_eq!(m.a(i, j), 0.0, "band violation at ({i}, {j})");
            }
        }
        let bsum: f64 = (0..m.n_symbols).map(|k| m.b(i, k)).sum();
        assert!((bsum - 1.0).abs() < 1e-12);
    }
}

// ---------------------------------------------------------------------------
// kmeans / quantize
// ---------------------------------------------------------------------------

#[test]
fn kmeans_k1_is_the_mean() {
    let vectors = vec![vec![1.0, 2.0], vec![3.0, 6.0], vec![5.0, 1.0]];
    let cb = kmeans(&vectors, 1, 0, 10).unwrap();
    assert_eq!(cb.centroids[0], vec![3.0, 3.0]);
}

#[test]
fn kmeans_k_equals_distinct_count_has_zero_distortion() {
    let vectors = vec![vec![0.0], vec![1.0], vec![4.0], vec![9.0], vec![1.0]];
    let cb = kmeans(&vectors, 4, 3, 20).unwrap();
    assert_eq!(distortion(&vectors, &cb), 0.0);
}

#[test]
fn kmeans_recovers_two_separated_blobs() {
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    let mut vectors = Vec::new();
    let mut sums = [[0.0f64; 2]; 2];
    for blob in 0..2 {
        let center = if blob == 0 { [-4.0, -4.0] } else { [4.0, 4.0] };
        for _ in 0..60 {
            let v = vec![
                center[0] + rng.gen_range(-0.5..0.5),
                center[1] + rng.gen_range(-0.5..0.5),
            ];
            sums[blob][0] += v[0];
            sums[blob][1] += v[1];
            vectors.push(v);
        }
    }
    let means = [
        [sums[0][0] / 60.0, sums[0][1] / 60.0],
        [sums[1][0] / 60.0, sums[1][1] / 60.0],
    ];
    let cb = kmeans(&vectors, 2, 7, 50).unwrap();
    for mean in means {
        let hit = cb
            .centroids
            .iter()
            .any(|c| (c[0] - mean[0]).hypot(c[1] - mean[1]) < 0.1);
        assert!(hit, "no centroid near blob mean {mean:?}: {:?}", cb.centroids);
    }
}

#[test]
fn kmeans_needs_k_distinct_vectors() {
    let vectors = vec![vec![1.0], vec![1.0], vec![2.0]];
    assert!(kmeans(&vectors, 3, 0, 5).is_err());
    assert!(kmeans(&vectors, 2, 0, 5).is_ok());
}

#[test]
fn kmeans_distortion_never_increases_with_budget() {
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    let vectors: Vec<Vec<f64>> =
        (0..80).map(|_| vec![rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0)]).collect();
    let mut prev = f64::INFINITY;
    for iters in 1..10 {
        let cb = kmeans(&vectors, 5, 9, iters).unwrap();
        let d = distortion(&vectors, &cb);
        assert!(d <= prev + 1e-9, "distortion rose from {prev} to {d} at budget {iters}");
        prev = d;
    }
}

#[test]
fn kmeans_centroids_are_pairwise_distinct() {
    let mut rng = ChaCha8Rng::seed_from_u64(53);
    let vectors: Vec<Vec<f64>> = (0..200)
        .map(|_| (0..6).map(|_| rng.gen_range(0.0..1.0)).collect())
        .collect();
    for k in [2usize, 8, 32] {
        let cb = kmeans(&vectors, k, 4, 25).unwrap();
        for i in 0..cb.len() {
            for j in i + 1..cb.len() {
                assert_ne!(cb.centroids[i], cb.centroids[j], "k={k}: centroids {i} and {j} collide");
            }
        }
    }
}

#[test]
fn quantize_exact_and_tie_cases() {
    let cb = Codebook {
        dim: 1,
        centroids: vec![vec![0.0], vec![2.0], vec![5.0], vec![9.0], vec![4.0]],
    };
    assert_eq!(quantize(&[9.0], &cb).unwrap(), 3);
    // 3.0 is equidistant from centroids 1 (2.0) and 4 (4.0): lowest wins.
    assert_eq!(quantize(&[3.0], &cb).unwrap(), 1);
    assert!(quantize(&[1.0, 2.0], &cb).is_err());
}

#[test]
fn quantize_matches_brute_force_table() {
    let mut rng = ChaCha8Rng::seed_from_u64(52);
    let cb = Codebook {
        dim: 3,
        centroids: (0..6).map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect(),
    };
    for _ in 0..100 {
        let v: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let dists: Vec<f64> = cb
            .centroids
            .iter()
            .map(|c| c.iter().zip(&v).map(|(a, b)| (a - b) * (a - b)).sum())
            .collect();
        let mut best = 0;
        for (i, &d) in dists.iter().enumerate() {
            if d < dists[best] {
                best = i;
            }
        }
        assert_eq!(quantize(&v, &cb).unwrap(), best);
    }
}

// ---------------------------------------------------------------------------
// forward / viterbi
// ---------------------------------------------------------------------------

#[test]
fn forward_degenerate_single_state() {
    let m = DiscreteHmm::new(vec![1.0], vec![1.0], 0.0, vec![1.0, 0.0]).unwrap();
    assert_eq!(loglik_forward(&m, &[0]).unwrap(), 0.0);
}

#[test]
fn forward_matches_enumeration_on_two_states() {
    let mut rng = ChaCha8Rng::seed_from_u64(60);
    let m = random_left_right(&mut rng, 2, 3);
    let obs = vec![2, 0, 1];
    let ll = loglik_forward(&m, &obs).unwrap();
    assert!((ll - enumerate_loglik(&m, &obs)).abs() < 1e-9);
}

#[test]
fn floored_symbol_costs_log_floor() {
    // All states emit the last symbol with exactly the floor probability and
    // rows are fully stochastic, so appending it scales the likelihood by
    // the floor.
    let floor = 1e-6;
    let s = 3;
    let k = 4;
    let mut rng = ChaCha8Rng::seed_from_u64(61);
    let mut m = random_left_right(&mut rng, s, k);
    m.exit = 0.0;
    for i in 0..s {
        let row = &mut m.a[i * s..(i + 1) * s];
        let sum: f64 = row.iter().sum();
        for v in row.iter_mut() {
            *v /= sum;
        }
        let brow = &mut m.b[i * k..(i + 1) * k];
        brow[k - 1] = floor;
        let rest: f64 = brow[..k - 1].iter().sum();
        for v in brow[..k - 1].iter_mut() {
            *v *= (1.0 - floor) / rest;
        }
    }
    let m = DiscreteHmm::new(m.pi, m.a, 0.0, m.b).unwrap();

    let obs = vec![0, 1, 2];
    let mut extended = obs.clone();
    extended.push(k - 1);
    let base = loglik_forward(&m, &obs).unwrap();
    let ext = loglik_forward(&m, &extended).unwrap();
    assert!((ext - base - floor.ln()).abs() < 1e-9, "delta = {}", ext - base);
    assert!((ext - enumerate_loglik(&m, &extended)).abs() < 1e-9);
}

#[test]
fn viterbi_single_observation() {
    let mut rng = ChaCha8Rng::seed_from_u64(62);
    let m = random_left_right(&mut rng, 3, 4);
    let (lp, path) = viterbi(&m, &[2]).unwrap();
    // With pi concentrated on state 0, the single step must start there.
    assert_eq!(path, vec![0]);
    assert!((lp - (m.pi[0].ln() + m.b(0, 2).ln())).abs() < 1e-12);
}

#[test]
fn viterbi_matches_enumeration_on_random_models() {
    let mut rng = ChaCha8Rng::seed_from_u64(63);
    for _ in 0..30 {
        let s = rng.gen_range(2..=4);
        let k = rng.gen_range(2..=4);
        let m = random_left_right(&mut rng, s, k);
        let t_len = rng.gen_range(1..=5);
        let obs: Vec<usize> = (0..t_len).map(|_| rng.gen_range(0..k)).collect();

        let (lp, path) = viterbi(&m, &obs).unwrap();
        let (lp_ref, path_ref) = enumerate_viterbi(&m, &obs);
        assert!((lp - lp_ref).abs() < 1e-9 || (lp == f64::NEG_INFINITY && lp_ref == f64::NEG_INFINITY));
        assert_eq!(path, path_ref);

        let ll = loglik_forward(&m, &obs).unwrap();
        assert!(lp <= ll + 1e-9, "viterbi {lp} exceeds forward {ll}");
    }
}

#[test]
fn viterbi_uniform_model_tie_break() {
    // Uniform emissions and a uniform first row: with two observations every
    // path [0, j] ties, so the decoder must return the reverse-lexicographic
    // minimum [0, 0]. The enumeration oracle confirms the tie-break.
    let s = 3;
    let k = 2;
    let mut a = vec![0.0; s * s];
    for i in 0..s {
        let targets: Vec<usize> = (i..s.min(i + 3)).collect();
        for &j in &targets {
            a[i * s + j] = 1.0 / targets.len() as f64;
        }
    }
    let m = DiscreteHmm::new(vec![1.0, 0.0, 0.0], a, 0.0, vec![0.5; s * k]).unwrap();

    let obs = vec![0, 1];
    let (lp, path) = viterbi(&m, &obs).unwrap();
    let (lp_ref, path_ref) = enumerate_viterbi(&m, &obs);
    assert_eq!(path, path_ref);
    assert_eq!(path, vec![0, 0]);
    assert_eq!(lp, lp_ref);
    // Closed form: one uniform transition, two uniform emissions.
    let expect = 2.0 * (1.0f64 / k as f64).ln() + (1.0f64 / 3.0).ln();
    assert!((lp - expect).abs() < 1e-9);

    // Longer sequences no longer tie everywhere; stay in lock-step with the
    // oracle anyway.
    let obs = vec![0, 1, 0, 1, 1];
    let (lp, path) = viterbi(&m, &obs).unwrap();
    let (lp_ref, path_ref) = enumerate_viterbi(&m, &obs);
    assert_eq!(path, path_ref);
    assert!((lp - lp_ref).abs() < 1e-12);
}

#[test]
fn viterbi_equals_forward_when_one_path_has_all_mass() {
    // Deterministic self-loops leave exactly one feasible path, so the best
    // path carries the entire likelihood.
    let s = 3;
    let k = 2;
    let mut a = vec![0.0; s * s];
    for i in 0..s {
        a[i * s + i] = 1.0;
    }
    let b = vec![0.7, 0.3, 0.2, 0.8, 0.5, 0.5];
    let m = DiscreteHmm::new(vec![1.0, 0.0, 0.0], a, 0.0, b).unwrap();
    let obs = vec![0, 1, 0, 0, 1];
    let (lp, path) = viterbi(&m, &obs).unwrap();
    let ll = loglik_forward(&m, &obs).unwrap();
    assert_eq!(path, vec![0; obs.len()]);
    assert!((lp - ll).abs() < 1e-12, "single-path model: viterbi {lp} vs forward {ll}");
}

#[test]
fn observation_validation() {
    let mut rng = ChaCha8Rng::seed_from_u64(64);
    let m = random_left_right(&mut rng, 2, 3);
    assert!(loglik_forward(&m, &[]).is_err());
    assert!(loglik_forward(&m, &[3]).is_err());
    assert!(viterbi(&m, &[0, 5]).is_err());
}

// ---------------------------------------------------------------------------
// baum_welch
// ---------------------------------------------------------------------------

#[test]
fn single_state_training_learns_symbol_frequencies() {
    let m = DiscreteHmm::new(vec![1.0], vec![0.7], 0.3, vec![0.25; 4]).unwrap();
    let seqs = vec![vec![0, 0, 1, 2, 0, 0, 3, 0]];
    let trained = baum_welch(&m, &seqs, &BaumWelchOpts { max_iter: 5, ..Default::default() }).unwrap();
    // gamma is identically 1 for the only state, so B is the empirical
    // histogram up to flooring.
    let expect = [5.0 / 8.0, 1.0 / 8.0, 1.0 / 8.0, 1.0 / 8.0];
    for (got, want) in trained.b.iter().zip(expect) {
        assert!((got - want).abs() < 1e-6, "got {got}, want {want}");
    }
    assert_eq!(trained.a, vec![0.7], "exit mass stays reserved");
    check_invariants(&trained);
}

#[test]
fn training_loglik_is_monotone() {
    let mut rng = ChaCha8Rng::seed_from_u64(70);
    for _ in 0..5 {
        let m = random_left_right(&mut rng, 3, 4);
        let seqs: Vec<Vec<usize>> = (0..4)
            .map(|_| (0..rng.gen_range(4..10)).map(|_| rng.gen_range(0..4)).collect())
            .collect();

        // Drive iterations one at a time and recompute the total with the
        // forward oracle.
        let mut model = m;
        let mut prev: Option<f64> = None;
        for _ in 0..8 {
            let total: f64 =
                seqs.iter().map(|o| loglik_forward(&model, o).unwrap()).sum();
            if let Some(p) = prev {
                assert!(total >= p - 1e-8, "loglik fell from {p} to {total}");
            }
            prev = Some(total);
            model = baum_welch(&model, &seqs, &BaumWelchOpts { max_iter: 1, tol: 0.0, floor: 1e-6 })
                .unwrap();
            check_invariants(&model);
        }
    }
}

#[test]
fn training_improves_heldout_fit_of_generated_data() {
    // Sample sequences from a known model, train a fresh one, and expect it
    // to beat its own starting point on held-out data.
    let mut rng = ChaCha8Rng::seed_from_u64(71);
    let truth = random_left_right(&mut rng, 3, 4);
    let sample = |rng: &mut ChaCha8Rng, t_len: usize| -> Vec<usize> {
        let mut state = 0usize;
        let mut obs = Vec::with_capacity(t_len);
        for t in 0..t_len {
            let r: f64 = rng.gen();
            let mut acc = 0.0;
            let mut sym = truth.n_symbols - 1;
            for k in 0..truth.n_symbols {
                acc += truth.b(state, k);
                if r < acc {
                    sym = k;
                    break;
                }
            }
            obs.push(sym);
            if t + 1 < t_len {
                let r: f64 = rng.gen();
                let mut acc = 0.0;
                let mut next = state;
                let row_mass: f64 = (0..truth.n_states).map(|j| truth.a(state, j)).sum();
                for j in state..truth.n_states.min(state + 3) {
                    acc += truth.a(state, j) / row_mass;
                    if r < acc {
                        next = j;
                        break;
                    }
                }
                state = next;
            }
        }
        obs
    };
    let train: Vec<Vec<usize>> = (0..30).map(|_| sample(&mut rng, 8)).collect();
    let heldout: Vec<Vec<usize>> = (0..10).map(|_| sample(&mut rng, 8)).collect();

    let init = DiscreteHmm::left_right_uniform(3, 4, 0.0).unwrap();
    let trained =
        baum_welch(&init, &train, &BaumWelchOpts { max_iter: 20, ..Default::default() }).unwrap();
    let before: f64 = heldout.iter().map(|o| loglik_forward(&init, o).unwrap()).sum();
    let after: f64 = heldout.iter().map(|o| loglik_forward(&trained, o).unwrap()).sum();
    assert!(after >= before, "held-out loglik fell from {before} to {after}");
}

#[test]
fn training_rejects_empty_input() {
    let m = DiscreteHmm::left_right_uniform(2, 2, 0.3).unwrap();
    assert!(baum_welch(&m, &[], &BaumWelchOpts::default()).is_err());
}

// ---------------------------------------------------------------------------
// concat
// ---------------------------------------------------------------------------

#[test]
fn concat_single_model_is_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(80);
    let m = random_left_right(&mut rng, 4, 3);
    let wm = concat(&[&m], &["x".to_string()]).unwrap();
    assert_eq!(wm.hmm, m);
    assert_eq!(wm.anchors, vec![0]);
    assert_eq!(wm.labels, vec!["x"]);
}

#[test]
fn concat_two_blocks_cell_by_cell() {
    let mut rng = ChaCha8Rng::seed_from_u64(81);
    let m1 = random_left_right(&mut rng, 3, 4);
    let m2 = random_left_right(&mut rng, 3, 4);
    let wm = concat(&[&m1, &m2], &["p".into(), "q".into()]).unwrap();
    let g = &wm.hmm;
    assert_eq!(g.n_states, 6);
    assert_eq!(wm.anchors, vec![0, 3]);

    // Oracle: build the expected matrix explicitly.
    let mut expect = vec![0.0; 36];
    for i in 0..3 {
        for j in 0..3 {
            expect[i * 6 + j] = m1.a(i, j);
            expect[(3 + i) * 6 + 3 + j] = m2.a(i, j);
        }
    }
    expect[2 * 6 + 3] = m1.exit;
    assert_eq!(g.a, expect);
    assert_eq!(g.exit, m2.exit);

    for i in 0..6 {
        let sum: f64 = (0..6).map(|j| g.a(i, j)).sum::<f64>()
            + if i == 5 { g.exit } else { 0.0 };
        assert!((sum - 1.0).abs() < 1e-12, "row {i} sums to {sum}");
    }
    for i in 0..3 {
        for k in 0..4 {
            assert_eq!(g.b(i, k), m1.b(i, k));
            assert_eq!(g.b(3 + i, k), m2.b(i, k));
        }
    }
}

#[test]
fn concat_rejects_codebook_mismatch() {
    let m1 = DiscreteHmm::left_right_uniform(2, 3, 0.3).unwrap();
    let m2 = DiscreteHmm::left_right_uniform(2, 4, 0.3).unwrap();
    assert!(concat(&[&m1, &m2], &["a".into(), "b".into()]).is_err());
}

#[test]
fn block_maps_cover_all_states() {
    let m = DiscreteHmm::left_right_uniform(4, 3, 0.3).unwrap();
    let wm = concat(&[&m, &m, &m], &["a".into(), "b".into(), "a".into()]).unwrap();
    assert_eq!(wm.block_of_state(), vec![0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 2]);
    assert_eq!(wm.block_range(1), (4, 8));
}

// ---------------------------------------------------------------------------
// model files
// ---------------------------------------------------------------------------

#[test]
fn model_file_round_trip_is_byte_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(90);
    let m = random_left_right(&mut rng, 4, 5);
    let cb = Codebook {
        dim: 3,
        centroids: (0..4).map(|_| (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect(),
    };
    let mf = ModelFile {
        codebook: Some(cb),
        hmm: Some(m),
        anchors: Some(vec![0, 2]),
        labels: Some(vec!["p".into(), "q".into()]),
    };
    let text = save_model_file(&mf);
    assert!(text.starts_with("MSHMM v1\n"));
    let back = load_model_file(&text).unwrap();
    assert_eq!(back, mf);
    assert_eq!(save_model_file(&back), text);
}

#[test]
fn model_file_rejects_garbage() {
    assert!(load_model_file("not a model").is_err());
    assert!(load_model_file("MSHMM v1\nwat 3\n").is_err());
    assert!(load_model_file("MSHMM v1\ncodebook 2 2\n1.0 2.0\n").is_err());
}
