//! Seeded Monte Carlo checks of estimator behaviour against known ground truth.

use ecekde::*;
use rand::Rng;
use statrs::function::gamma::ln_gamma;

fn bw(h: f64) -> Bandwidth {
    Bandwidth::new(h).unwrap()
}

fn synthetic(k: usize, n: usize, t1: f64, t2: f64, seed: u64) -> (LabeledDataset, Vec<SimplexPoint>) {
    gen_synthetic(&SyntheticSpec { k, n, t1, t2, seed: RngSeed(seed) }).unwrap()
}

/// Monte Carlo reference for K = 4, t1 = t2 = 0.6, p = 1 at 10^7 draws with seed
/// `RngSeed(0).derive(u64::MAX)`, the seed the convergence study uses.
const GROUND_TRUTH_K4_P1: f64 = 0.2335665365623969;

#[test]
fn ground_truth_reference_is_stable() {
    let big = ground_truth_ce(4, 0.6, 0.6, 1.0, 10_000_000, RngSeed(0).derive(u64::MAX)).unwrap();
    let small = ground_truth_ce(4, 0.6, 0.6, 1.0, 1_000_000, RngSeed(1)).unwrap();
    assert!((big.value - GROUND_TRUTH_K4_P1).abs() < 1e-12, "{}", big.value);
    let se = (big.std_error.powi(2) + small.std_error.powi(2)).sqrt();
    assert!((big.value - small.value).abs() < 3.0 * se, "{} vs {} (se {se})", big.value, small.value);
}

#[test]
fn synthetic_labels_follow_true_conditional() {
    let (ds, truth) = synthetic(3, 1_000_000, 0.6, 0.6, 0);
    let bins = 5;
    let mut hits = vec![0.0; bins];
    let mut q = vec![0.0; bins];
    let mut count = vec![0usize; bins];
    for (i, t) in truth.iter().enumerate() {
        let b = ((ds.row(i)[0] * bins as f64) as usize).min(bins - 1);
        hits[b] += f64::from(u8::from(ds.labels()[i] == 0));
        q[b] += t.coords()[0];
        count[b] += 1;
    }
    for b in 0..bins {
        let c = count[b] as f64;
        let dev = (hits[b] - q[b]).abs() / c;
        let mean_q = q[b] / c;
        let se = (mean_q * (1.0 - mean_q) / c).sqrt();
        assert!(dev < 2.0 * se, "bin {b}: deviation {dev} vs se {se}");
    }
}

#[test]
fn asymptotic_mse_identity_on_calibrated_data() {
    let (ds, _) = synthetic(2, 100_000, 0.6, 1.0, 3);
    let e = loo_conditionals(&ds, bw(0.01)).unwrap();
    let n = ds.len() as f64;
    let (mut var_term, mut gap) = (0.0, 0.0);
    for j in 0..ds.len() {
        let (f, y, eh) = (ds.row(j)[1], ds.labels()[j] as f64, e[[j, 1]]);
        var_term += (1.0 - eh) * eh / n;
        gap += ((f - y).powi(2) - (eh - f).powi(2)) / n;
    }
    assert!((var_term - gap).abs() < 0.05 * gap, "{var_term} vs {gap}");
}

#[test]
fn small_gradient_steps_descend() {
    for seed in 0..10 {
        let pts = sample_uniform_simplex(3, 30, RngSeed(seed)).unwrap();
        let labels = sample_labels(&pts, RngSeed(seed + 50)).unwrap();
        let rows: Vec<Vec<f64>> = pts.iter().map(|p| p.coords().iter().map(|v| 0.9 * v + 0.1 / 3.0).collect()).collect();
        let ys: Vec<usize> = labels.iter().map(|l| l.index()).collect();
        let ds = LabeledDataset::from_rows(&rows, &ys).unwrap();
        let cfg = KdeConfig::new(bw(0.3), 2.0);
        let before = ece_kde_canonical(&ds, &cfg).unwrap().value;
        let g = grad_ece_kde_canonical(&ds, &cfg).unwrap();
        for step in [1e-4, 1e-5] {
            let moved: Vec<Vec<f64>> = rows
                .iter()
                .enumerate()
                .map(|(i, r)| {
                    let mean = (0..3).map(|m| g[[i, m]]).sum::<f64>() / 3.0;
                    let mut v: Vec<f64> = r.iter().enumerate().map(|(m, x)| (x - step * (g[[i, m]] - mean)).max(1e-9)).collect();
                    let s: f64 = v.iter().sum();
                    v.iter_mut().for_each(|x| *x /= s);
                    v
                })
                .collect();
            let after = ece_kde_canonical(&LabeledDataset::from_rows(&moved, &ys).unwrap(), &cfg).unwrap().value;
            assert!(after <= before, "seed {seed} step {step}: {after} > {before}");
        }
    }
}

fn dirichlet_555(n: usize, seed: u64) -> Vec<SimplexPoint> {
    let mut rng = RngSeed(seed).rng();
    (0..n)
        .map(|_| {
            let g: Vec<f64> = (0..3).map(|_| (0..5).map(|_| -(1.0 - rng.random::<f64>()).ln()).sum()).collect();
            let s: f64 = g.iter().sum();
            SimplexPoint::new(g.into_iter().map(|v| v / s).collect()).unwrap()
        })
        .collect()
}

fn log_dirichlet_555(x: &[f64]) -> f64 {
    ln_gamma(15.0) - 3.0 * ln_gamma(5.0) + x.iter().map(|v| 4.0 * v.ln()).sum::<f64>()
}

#[test]
fn selected_bandwidth_beats_grid_endpoints() {
    let pts = dirichlet_555(2000, 11);
    let labels = vec![Label(0); pts.len()];
    let ds = LabeledDataset::new(pts.clone(), labels).unwrap();
    let grid = BandwidthGrid::default();
    let h = select_bandwidth(&ds, &grid).unwrap();
    let ll = loo_log_likelihood_grid(&ds, &grid).unwrap();
    let best = ll[grid.candidates().iter().position(|&c| c == h.get()).unwrap()];
    assert!(best >= ll[0] && best >= *ll.last().unwrap());

    // integrated squared error over uniform evaluation points, up to the simplex area
    let eval = sample_uniform_simplex(3, 4000, RngSeed(12)).unwrap();
    let ise = |h: f64| {
        let hb = bw(h);
        eval.iter()
            .map(|u| {
                let kde = pts.iter().map(|c| log_dirichlet_kernel(u, c, hb).unwrap().exp()).sum::<f64>() / pts.len() as f64;
                (kde - log_dirichlet_555(u.coords()).exp()).powi(2)
            })
            .sum::<f64>()
            / eval.len() as f64
    };
    let c = grid.candidates();
    let (mid, lo, hi) = (ise(h.get()), ise(c[0]), ise(c[c.len() - 1]));
    assert!(mid < lo && mid < hi, "h = {}: {mid} vs {lo}, {hi}", h.get());
}

#[test]
fn debiased_conditional_converges_like_one_over_n() {
    let at = [[0.3, 0.3, 0.4], [0.6, 0.2, 0.2], [0.15, 0.7, 0.15]];
    let max_diff = |n: usize| {
        let (ds, _) = synthetic(3, n, 0.6, 0.6, 21);
        at.iter()
            .map(|a| {
                let p = SimplexPoint::new(a.to_vec()).unwrap();
                let plain = cond_expectation(&p, &ds, bw(0.1), None).unwrap();
                let deb = cond_expectation_debiased(&p, &ds, bw(0.1)).unwrap();
                plain.iter().zip(&deb).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    };
    let (d3, d4) = (max_diff(1_000), max_diff(10_000));
    assert!(d4 < 10.0 * d3, "{d4} vs {d3}");
    assert!(d4 < d3, "{d4} vs {d3}");
}

#[test]
fn constant_scores_sharpness_is_unbiased_by_enumeration() {
    for n in [4usize, 8, 12] {
        for q in [0.17f64, 0.5, 0.8] {
            let mut expect = [0.0f64; 2];
            for code in 0u32..(1 << n) {
                let labels: Vec<usize> = (0..n).map(|i| ((code >> i) & 1) as usize).collect();
                let ones = labels.iter().sum::<usize>() as i32;
                let prob = q.powi(ones) * (1.0 - q).powi(n as i32 - ones);
                let ds = LabeledDataset::from_rows(&vec![vec![0.6, 0.4]; n], &labels).unwrap();
                for (slot, mode) in [SharpnessMode::Partial, SharpnessMode::SecondOrder].into_iter().enumerate() {
                    expect[slot] += prob * sharpness_at(0.17, &ds, bw(0.5), mode).unwrap();
                }
            }
            for e in expect {
                assert!((e - q * q).abs() < 1e-12, "n {n} q {q}: {expect:?}");
            }
        }
    }
}

#[test]
fn correction_vanishes_with_n() {
    let diff = |n: usize| {
        let mut rng = RngSeed(5).substream(n as u64);
        let x: Vec<f64> = (0..n).map(|_| f64::from(u8::from(rng.random::<f64>() < 0.5))).collect();
        let y: Vec<f64> = (0..n).map(|_| f64::from(u8::from(rng.random::<f64>() < 0.7))).collect();
        let r = debias_ratio_means(&x, &y).unwrap();
        (r.corrected_ratio - r.raw_ratio).abs()
    };
    let (small, large) = (diff(100), diff(100_000));
    assert!(large < 1e-2 * small, "{large} vs {small}");
}

#[test]
fn debias_study_modes_agree_with_reference_at_largest_n() {
    let r = debias_study(&[256, 16384], 1000, bw(0.5), 0.17, RngSeed(7), 10_000_000).unwrap();
    for id in ["partial", "second_order"] {
        let big = r.rows.iter().find(|x| x.n == 16384 && x.estimator == id).unwrap();
        let se = (big.std.powi(2) / 1000.0 + r.reference_std_error.powi(2)).sqrt();
        assert!((big.mean - big.reference).abs() < 3.0 * se, "{id}: {} vs {} (se {se})", big.mean, big.reference);
    }
}

#[test]
fn second_order_is_closer_to_reference_at_1024() {
    let r = debias_study(&[512, 1024], 1000, bw(0.5), 0.17, RngSeed(7), 10_000_000).unwrap();
    let bias = |id: &str| {
        let row = r.rows.iter().find(|x| x.n == 1024 && x.estimator == id).unwrap();
        (row.mean - row.reference).abs()
    };
    assert!(bias("second_order") < bias("partial"), "{} vs {}", bias("second_order"), bias("partial"));
}

#[test]
fn bias_order_separation() {
    let r = debias_study(&[32, 64, 128, 256, 512, 1024], 2000, bw(0.5), 0.17, RngSeed(7), 10_000_000).unwrap();
    let slope = |id: &str| r.slopes.iter().find(|x| x.estimator == id).map(|x| x.slope).unwrap();
    let (partial, second) = (slope("partial"), slope("second_order"));
    assert!(partial <= -0.8, "partial slope {partial}");
    assert!(second <= partial - 0.3, "second-order slope {second} vs partial {partial}");
}

#[test]
fn bootstrap_interval_covers_point_estimate() {
    let cfg = KdeConfig::new(bw(0.2), 1.0);
    let est = |d: &LabeledDataset| ece_kde_canonical(d, &cfg).map(|r| r.value);
    let mut covered = 0;
    for seed in 0..50 {
        let (ds, _) = synthetic(3, 1000, 0.6, 0.6, 100 + seed);
        let point = est(&ds).unwrap();
        let (lo, hi) = bootstrap_ci(&ds, est, 100, 0.95, RngSeed(seed)).unwrap();
        covered += usize::from(lo <= point && point <= hi);
    }
    assert!(covered >= 45, "{covered}/50");
}

#[test]
fn toplabel_kde_agrees_with_adaptive_bins() {
    let (ds, _) = synthetic(3, 3000, 0.6, 0.6, 9);
    let h = select_bandwidth(&ds, &BandwidthGrid::default()).unwrap();
    let kde = ece_kde_toplabel(&ds, &KdeConfig::new(h, 1.0)).unwrap().value;
    let bins = ece_bin_toplabel(&ds, 15, TopLabelBinning::Adaptive, 1.0).unwrap().value;
    assert!((kde - bins).abs() < 0.2 * bins, "kde {kde} vs binned {bins}");
}
