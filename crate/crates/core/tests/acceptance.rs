//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line (run with `--nocapture` to see them all).

use std::time::Instant;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use mashq_core::features::{
    extract_streams, frame_centroid, sw_features, vh2d, FeatureParams, Frame,
};
use mashq_core::harness::{run_benchmark, BENCHMARK_TEST_PER_WORD};
use mashq_core::hmm::{baum_welch, loglik_forward, viterbi, BaumWelchOpts, DiscreteHmm};
use mashq_core::lexicon::save_bundle;
use mashq_core::multistream::{
    build_composite, fuse_loglik, rank_words, viterbi_composite, AnchorPolicy, StreamWeights,
};
use mashq_core::preprocess::{deskew, estimate_skew_hough};
use mashq_core::raster::{rotate, BinaryImage};

fn verdict(criterion: &str, ok: bool) {
    println!("acceptance: {criterion} ... {}", if ok { "PASS" } else { "FAIL" });
}

// ---------------------------------------------------------------------------
// Shared generators and oracles
// ---------------------------------------------------------------------------

fn random_binary(rng: &mut ChaCha8Rng, w: usize, h: usize) -> BinaryImage {
    let bits = (0..w * h).map(|_| rng.gen_range(0..=1u8)).collect();
    BinaryImage::new(w, h, bits)
}

fn random_left_right(rng: &mut ChaCha8Rng, n_states: usize, n_symbols: usize) -> DiscreteHmm {
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

fn for_each_path(s: usize, t_len: usize, visit: &mut impl FnMut(&[usize])) {
    let mut path = vec![0usize; t_len];
    fn rec(s: usize, depth: usize, path: &mut Vec<usize>, visit: &mut impl FnMut(&[usize])) {
        if depth == path.len() {
            visit(path);
            return;
        }
        for v in 0..s {
            path[depth] = v;
            rec(s, depth + 1, path, visit);
        }
    }
    rec(s, 0, &mut path, visit);
}

/// Probability-space sum over every state path.
fn enumerate_loglik(m: &DiscreteHmm, obs: &[usize]) -> f64 {
    let mut total = 0.0;
    for_each_path(m.n_states, obs.len(), &mut |path| {
        let mut p = m.pi[path[0]] * m.b(path[0], obs[0]);
        for t in 1..obs.len() {
            p *= m.a(path[t - 1], path[t]) * m.b(path[t], obs[t]);
        }
        total += p;
    });
    total.ln()
}

/// Exhaustive best path with the decoder's arithmetic and tie-break
/// (reverse-lexicographically smallest among equal scores).
fn enumerate_viterbi(m: &DiscreteHmm, obs: &[usize]) -> (f64, Vec<usize>) {
    let mut best_score = f64::NEG_INFINITY;
    let mut best_path: Option<Vec<usize>> = None;
    for_each_path(m.n_states, obs.len(), &mut |path| {
        let mut score = m.pi[path[0]].ln() + m.b(path[0], obs[0]).ln();
        for t in 1..obs.len() {
            score += m.a(path[t - 1], path[t]).ln();
            score += m.b(path[t], obs[t]).ln();
        }
        let better = match &best_path {
            None => true,
            Some(cur) => {
                score > best_score
                    || (score == best_score && path.iter().rev().lt(cur.iter().rev()))
            }
        };
        if better {
            best_score = score;
            best_path = Some(path.to_vec());
        }
    });
    (best_score, best_path.unwrap())
}

fn model_invariants_hold(m: &DiscreteHmm) -> bool {
    let s = m.n_states;
    if (m.pi.iter().sum::<f64>() - 1.0).abs() > 1e-12 || m.pi[0] != 1.0 {
        return false;
    }
    for i in 0..s {
        let mut sum = 0.0;
        for j in 0..s {
            let v = m.a(i, j);
            if v < 0.0 || (v != 0.0 && (j < i || j > i + 2)) {
                return false;
            }
            sum += v;
        }
        let target = if i == s - 1 { 1.0 - m.exit } else { 1.0 };
        if (sum - target).abs() > 1e-12 {
            return false;
        }
        let bsum: f64 = (0..m.n_symbols).map(|k| m.b(i, k)).sum();
        if (bsum - 1.0).abs() > 1e-12 {
            return false;
        }
    }
    true
}

// ---------------------------------------------------------------------------
// Criteria
// ---------------------------------------------------------------------------

#[test]
fn criterion_1_decoder_correctness() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1001);
    let mut ok = true;
    for _ in 0..200 {
        let s = rng.gen_range(1..=5);
        let k = rng.gen_range(1..=6);
        let t_len = rng.gen_range(1..=6);
        let m = random_left_right(&mut rng, s, k);
        let obs: Vec<usize> = (0..t_len).map(|_| rng.gen_range(0..k)).collect();

        let ll = loglik_forward(&m, &obs).unwrap();
        let ll_ref = enumerate_loglik(&m, &obs);
        let (vp, path) = viterbi(&m, &obs).unwrap();
        let (vp_ref, path_ref) = enumerate_viterbi(&m, &obs);

        ok &= (ll - ll_ref).abs() < 1e-9;
        ok &= (vp - vp_ref).abs() < 1e-9;
        ok &= path == path_ref;
        ok &= vp <= ll + 1e-9;
    }
    let elapsed = start.elapsed().as_secs_f64();
    ok &= elapsed < 10.0;
    verdict("criterion 1 (decoder matches enumeration on 200 models)", ok);
    assert!(ok, "decoder correctness failed (elapsed {elapsed:.2}s)");
}

#[test]
fn criterion_2_em_monotonicity() {
    let mut rng = ChaCha8Rng::seed_from_u64(1002);
    let mut ok = true;
    for _ in 0..20 {
        let s = rng.gen_range(2..=5);
        let k = rng.gen_range(2..=6);
        let mut model = random_left_right(&mut rng, s, k);
        let sequences: Vec<Vec<usize>> = (0..4)
            .map(|_| (0..rng.gen_range(4..10)).map(|_| rng.gen_range(0..k)).collect())
            .collect();

        let mut prev: Option<f64> = None;
        for _ in 0..8 {
            let total: f64 =
                sequences.iter().map(|o| loglik_forward(&model, o).unwrap()).sum();
            if let Some(p) = prev {
                ok &= total >= p - 1e-8;
            }
            prev = Some(total);
            model = baum_welch(
                &model,
                &sequences,
                &BaumWelchOpts { max_iter: 1, tol: 0.0, floor: 1e-6 },
            )
            .unwrap();
            ok &= model_invariants_hold(&model);
        }
    }
    verdict("criterion 2 (Baum-Welch loglik monotone, invariants preserved)", ok);
    assert!(ok);
}

#[test]
fn criterion_3_vh2d_conservation() {
    let mut rng = ChaCha8Rng::seed_from_u64(1003);
    let mut ok = true;
    for _ in 0..500 {
        let m = [4usize, 8, 16][rng.gen_range(0..3)];
        let patch = random_binary(&mut rng, m, m);
        let ink = patch.ink_count() as u32;
        let p = vh2d(&patch).unwrap();
        ok &= p.v.iter().sum::<u32>() == ink;
        ok &= p.h.iter().sum::<u32>() == ink;
        ok &= p.d1.iter().sum::<u32>() == ink;
        ok &= p.d2.iter().sum::<u32>() == ink;

        // Quadruple-loop oracle straight from the constraint equations.
        for mm in 1..=2 * m - 1 {
            let mut d1 = 0u32;
            let mut d2 = 0u32;
            for l in 1..=m {
                for k in 1..=m {
                    if l + mm == k + m {
                        d1 += patch.get(k - 1, l - 1) as u32;
                    }
                    if k + l == mm + 1 {
                        d2 += patch.get(k - 1, l - 1) as u32;
                    }
                }
            }
            ok &= p.d1[mm - 1] == d1 && p.d2[mm - 1] == d2;
        }
        for c in 0..m {
            ok &= p.v[c] == (0..m).map(|r| patch.get(c, r) as u32).sum::<u32>();
            ok &= p.h[c] == (0..m).map(|x| patch.get(x, c) as u32).sum::<u32>();
        }
    }
    verdict("criterion 3 (VH2D conservation and oracle agreement, 500 patches)", ok);
    assert!(ok);
}

#[test]
fn criterion_4_feature_invariants() {
    let mut rng = ChaCha8Rng::seed_from_u64(1004);
    let mut ok = true;
    let mut prev = None;
    for _ in 0..500 {
        let h = rng.gen_range(8..=24);
        let patch = random_binary(&mut rng, 8, h);
        let frame = Frame { x_right: 8, patch };
        let v = sw_features(&frame, prev, 8).f;

        ok &= v[0] + v[1] == 1.0;
        let mean = v[4..12].iter().sum::<f64>() / 8.0;
        ok &= mean == v[0];
        for (i, &x) in v.iter().enumerate() {
            if i == 3 {
                ok &= (-1.0..=1.0).contains(&x);
            } else {
                ok &= (0.0..=1.0).contains(&x);
            }
        }
        prev = frame_centroid(&frame);
    }
    verdict("criterion 4 (sliding-window feature invariants, 500 frames)", ok);
    assert!(ok);
}

#[test]
fn criterion_5_skew_recovery() {
    let mut page = BinaryImage::blank(360, 240);
    for (top, bottom) in [(60, 63), (120, 123), (180, 183)] {
        for y in top..bottom {
            for x in 40..320 {
                page.set(x, y, 1);
            }
        }
    }
    let mut ok = true;
    for theta in [-18.0, -10.0, -5.0, 0.0, 5.0, 10.0, 18.0] {
        let start = Instant::now();
        let skewed = rotate(&page, theta);
        let est = estimate_skew_hough(&skewed, 20.0, 0.5).unwrap();
        let estimated_ok = (est.angle - theta).abs() <= 1.0;

        let fixed = deskew(&skewed, &est);
        let residual = estimate_skew_hough(&fixed, 20.0, 0.5).unwrap();
        let residual_ok = residual.angle.abs() <= 1.0;

        let fast_enough = start.elapsed().as_secs_f64() < 5.0;
        if !(estimated_ok && residual_ok && fast_enough) {
            println!(
                "  theta {theta}: estimate {}, residual {}, {:.2}s",
                est.angle,
                residual.angle,
                start.elapsed().as_secs_f64()
            );
            ok = false;
        }
    }
    verdict("criterion 5 (skew estimated within 1 degree and corrected)", ok);
    assert!(ok);
}

#[test]
fn criterion_6_fusion_decomposition() {
    let mut rng = ChaCha8Rng::seed_from_u64(1006);
    let mut ok = true;

    for _ in 0..100 {
        let n_chars = rng.gen_range(1..=2);
        let states = rng.gen_range(2..=4);
        let k = rng.gen_range(2..=4);
        let labels: Vec<String> = (0..n_chars).map(|i| format!("c{i}")).collect();
        let make = |rng: &mut ChaCha8Rng| {
            let models: Vec<DiscreteHmm> =
                (0..n_chars).map(|_| random_left_right(rng, states, k)).collect();
            let refs: Vec<&DiscreteHmm> = models.iter().collect();
            mashq_core::hmm::concat(&refs, &labels).unwrap()
        };
        let wa = make(&mut rng);
        let wb = make(&mut rng);
        let t_len = rng.gen_range(1..=8);
        let obs_a: Vec<usize> = (0..t_len).map(|_| rng.gen_range(0..k)).collect();
        let obs_b: Vec<usize> = (0..t_len).map(|_| rng.gen_range(0..k)).collect();
        let w1 = rng.gen_range(0.0..=1.0);
        let weights = StreamWeights::new(w1, 1.0 - w1).unwrap();

        let word = build_composite(&wa, &wb, weights, AnchorPolicy::Word).unwrap();
        let (fused, _) = viterbi_composite(&word, &obs_a, &obs_b).unwrap();
        let (va, _) = viterbi(&wa.hmm, &obs_a).unwrap();
        let (vb, _) = viterbi(&wb.hmm, &obs_b).unwrap();
        ok &= (fused - fuse_loglik([va, vb], &weights)).abs() < 1e-9;

        let char_comp = build_composite(&wa, &wb, weights, AnchorPolicy::Character).unwrap();
        let (char_fused, _) = viterbi_composite(&char_comp, &obs_a, &obs_b).unwrap();
        ok &= char_fused <= fused + 1e-9;
    }

    // Argmax invariance of score fusion under degenerate weights.
    let only_first = StreamWeights::new(1.0, 0.0).unwrap();
    for _ in 0..100 {
        let table: Vec<(String, [f64; 2])> = (0..8)
            .map(|i| {
                (format!("w{i}"), [rng.gen_range(-60.0..-1.0), rng.gen_range(-60.0..-1.0)])
            })
            .collect();
        let ranked = rank_words(&table, &only_first);
        let mut expect = table.clone();
        expect.sort_by(|x, y| y.1[0].total_cmp(&x.1[0]).then_with(|| x.0.cmp(&y.0)));
        ok &= ranked[0].word == expect[0].0;
    }
    verdict("criterion 6 (composite decomposition and argmax invariance)", ok);
    assert!(ok);
}

#[test]
fn criterion_7_end_to_end_benchmark() {
    let start = Instant::now();
    let mut ok_single = true;
    let mut ok_floor = true;
    let mut strict_wins = 0;
    for seed in 1..=10u64 {
        let run = run_benchmark(seed).unwrap();
        let sw = run.report.accuracy("stream-SW").unwrap();
        let vh = run.report.accuracy("stream-VH2D").unwrap();
        let fused = run.report.accuracy("combined").unwrap();
        println!("  seed {seed:2}: stream-SW {sw:5.1}  stream-VH2D {vh:5.1}  combined {fused:5.1}");
        ok_single &= sw >= 70.0 && vh >= 70.0;
        ok_floor &= fused >= sw.max(vh) - 2.0;
        if fused > sw && fused > vh {
            strict_wins += 1;
        }
        assert_eq!(run.report.sample_count, 20 * BENCHMARK_TEST_PER_WORD);
    }
    let elapsed = start.elapsed().as_secs_f64();
    let ok = ok_single && ok_floor && strict_wins >= 6 && elapsed < 300.0;
    verdict("criterion 7 (benchmark: singles >= 70, fusion helps, < 5 min)", ok);
    assert!(
        ok,
        "singles>=70: {ok_single}, floor: {ok_floor}, strict wins: {strict_wins}/10, {elapsed:.0}s"
    );
}

#[test]
fn criterion_8_determinism() {
    let run_a = run_benchmark(1).unwrap();
    let run_b = run_benchmark(1).unwrap();

    let ok_report = run_a.report == run_b.report
        && run_a.report.to_tsv() == run_b.report.to_tsv();

    let dir = tempfile::tempdir().unwrap();
    let path_a = dir.path().join("bundle-a");
    let path_b = dir.path().join("bundle-b");
    save_bundle(&run_a.recognizer, &path_a).unwrap();
    save_bundle(&run_b.recognizer, &path_b).unwrap();

    let mut ok_bundle = true;
    let files_a = walk(&path_a);
    let files_b = walk(&path_b);
    ok_bundle &= files_a.len() == files_b.len();
    for file in &files_a {
        let rel = file.strip_prefix(&path_a).unwrap();
        let a = std::fs::read(file).unwrap();
        let b = std::fs::read(path_b.join(rel)).unwrap_or_default();
        if a != b {
            println!("  bundle file {} differs", rel.display());
            ok_bundle = false;
        }
    }

    let ok = ok_report && ok_bundle;
    verdict("criterion 8 (same seed, byte-identical bundle and report)", ok);
    assert!(ok);
}

fn walk(dir: &std::path::Path) -> Vec<std::path::PathBuf> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        let mut entries: Vec<_> =
            std::fs::read_dir(&d).unwrap().map(|e| e.unwrap().path()).collect();
        entries.sort();
        for path in entries {
            if path.is_dir() {
                stack.push(path);
            } else {
                files.push(path);
            }
        }
    }
    files.sort();
    files
}

// Frame-synchrony spot check used by the composite decoder's contract.
#[test]
fn streams_states_frame_synchrony() {
    let mut rng = ChaCha8Rng::seed_from_u64(1009);
    let params = FeatureParams::default();
    for _ in 0..20 {
        let w = rng.gen_range(8..80);
        let mut word = random_binary(&mut rng, w, 24);
        word.set(w / 2, 12, 1);
        let (sw, vh) = extract_streams(&word, &params).unwrap();
        assert_eq!(sw.vectors.len(), vh.vectors.len());
    }
}
