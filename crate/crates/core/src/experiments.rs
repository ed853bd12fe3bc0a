//! Synthetic data with known conditional, Monte Carlo ground truth, convergence and
//! debiasing studies, log-log slope fits and bootstrap intervals.

use std::collections::BTreeMap;

use ndarray::Array2;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bandwidth::{select_bandwidth, BandwidthGrid};
use crate::binned::ece_bin_canonical;
use crate::error::{Error, Result};
use crate::estimators::{ece_kde_canonical, sharpness_at, KdeConfig, SharpnessMode};
use crate::kernels::{log_normalizer, Bandwidth};
use crate::numeric::abs_pow;
use crate::simplex::{
    categorical, temperature_scale_into, uniform_simplex_point, LabeledDataset, RngSeed, SimplexPoint,
};

/// Samples per independently seeded Monte Carlo chunk.
const MC_CHUNK: usize = 100_000;

/// Temperature of both scalings in the sharpness debiasing study.
pub const DEBIAS_STUDY_TEMPERATURE: f64 = 0.6;

/// Parameters of the synthetic generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub k: usize,
    pub n: usize,
    pub t1: f64,
    pub t2: f64,
    pub seed: RngSeed,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::InvalidDimension(format!("K must be at least 2, got {}", self.k)));
        }
        if self.n < 2 {
            return Err(Error::TooFewPoints { needed: 2, got: self.n });
        }
        for t in [self.t1, self.t2] {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::NonPositiveTemperature(t));
            }
        }
        Ok(())
    }
}

/// Temperature scaling that leaves the input untouched at `t = 1`.
fn scale(p: &[f64], t: f64, out: &mut [f64]) -> Result<()> {
    if t == 1.0 {
        out.copy_from_slice(p);
        Ok(())
    } else {
        temperature_scale_into(p, t, out)
    }
}

/// Scratch buffers for one synthetic draw.
struct Draw {
    cuts: Vec<f64>,
    z: Vec<f64>,
    q: Vec<f64>,
    f: Vec<f64>,
}

impl Draw {
    fn new(k: usize) -> Self {
        Draw { cuts: Vec::with_capacity(k), z: vec![0.0; k], q: vec![0.0; k], f: vec![0.0; k] }
    }

    /// Fills `q` (the true conditional) and `f` (the prediction) and returns the label.
    fn sample<R: Rng>(&mut self, rng: &mut R, t1: f64, t2: f64) -> Result<usize> {
        let k = self.z.len();
        uniform_simplex_point(rng, k, &mut self.cuts, &mut self.z);
        scale(&self.z, t1, &mut self.q)?;
        let y = categorical(rng, &self.q);
        scale(&self.q, t2, &mut self.f)?;
        Ok(y)
    }
}

/// Draws a dataset: `z` uniform on the simplex, `q = T(z, t1)`, `y ~ Cat(q)`, `f = T(q, t2)`.
///
/// Returns the `(f, y)` pairs and the true conditional `E[y | f] = T(f, 1 / t2)` for each point.
pub fn gen_synthetic(spec: &SyntheticSpec) -> Result<(LabeledDataset, Vec<SimplexPoint>)> {
    spec.validate()?;
    let k = spec.k;
    let mut rng = spec.seed.rng();
    let mut draw = Draw::new(k);
    let mut flat = Vec::with_capacity(spec.n * k);
    let mut labels = Vec::with_capacity(spec.n);
    let mut truth = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        labels.push(draw.sample(&mut rng, spec.t1, spec.t2)?);
        flat.extend_from_slice(&draw.f);
        let mut c = vec![0.0; k];
        scale(&draw.f, 1.0 / spec.t2, &mut c)?;
        truth.push(SimplexPoint::from_vec_unchecked(c));
    }
    let points = Array2::from_shape_vec((spec.n, k), flat).expect("shape matches");
    Ok((LabeledDataset::from_array(points, labels, 1e-9)?, truth))
}

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
}

fn chunk_ranges(total: usize) -> Vec<(u64, usize)> {
    (0..total.div_ceil(MC_CHUNK)).map(|c| (c as u64, MC_CHUNK.min(total - c * MC_CHUNK))).collect()
}

/// Monte Carlo value of `E[|E[y | f] - f|_p^p]` under the synthetic generator.
pub fn ground_truth_ce(k: usize, t1: f64, t2: f64, p: f64, mc_samples: usize, seed: RngSeed) -> Result<McEstimate> {
    SyntheticSpec { k, n: 2, t1, t2, seed }.validate()?;
    if mc_samples < 10_000 {
        return Err(Error::InvalidConfig(format!("need at least 10^4 Monte Carlo samples, got {mc_samples}")));
    }
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::InvalidConfig(format!("p must be >= 1, got {p}")));
    }
    let parts: Vec<(f64, f64)> = chunk_ranges(mc_samples)
        .into_par_iter()
        .map(|(c, len)| -> Result<(f64, f64)> {
            let mut rng = seed.substream(c);
            let mut draw = Draw::new(k);
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..len {
                draw.sample(&mut rng, t1, t2)?;
                let v: f64 = draw.q.iter().zip(&draw.f).map(|(a, b)| abs_pow(a - b, p)).sum();
                s += v;
                s2 += v * v;
            }
            Ok((s, s2))
        })
        .collect::<Result<_>>()?;
    let (s, s2) = parts.iter().fold((0.0, 0.0), |(a, b), &(x, y)| (a + x, b + y));
    let n = mc_samples as f64;
    let mean = s / n;
    let var = (s2 / n - mean * mean).max(0.0) * n / (n - 1.0);
    Ok(McEstimate { value: mean, std_error: (var / n).sqrt() })
}

/// Bandwidth used by a kernel estimator inside a study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandwidthChoice {
    Fixed(Bandwidth),
    /// Leave-one-out selection on every dataset.
    SelectEach(BandwidthGrid),
    /// Leave-one-out selection on the first seed's dataset at each `n`, reused for the other seeds.
    SelectOnce(BandwidthGrid),
}

/// An estimator evaluated by [`convergence_study`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyEstimator {
    KdeCanonical { p: f64, bandwidth: BandwidthChoice },
    BinCanonical { p: f64, bins_per_class: usize },
}

impl StudyEstimator {
    pub fn id(&self) -> String {
        match self {
            StudyEstimator::KdeCanonical { .. } => "kde_canonical".into(),
            StudyEstimator::BinCanonical { bins_per_class, .. } => format!("bin_canonical_{bins_per_class}"),
        }
    }

    fn p(&self) -> f64 {
        match self {
            StudyEstimator::KdeCanonical { p, .. } | StudyEstimator::BinCanonical { p, .. } => *p,
        }
    }
}

/// Aggregate of one estimator at one sample size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub n: usize,
    pub estimator: String,
    pub mean: f64,
    pub std: f64,
    pub reference: f64,
    /// Mean over seeds of `|estimate - reference|`.
    pub mean_abs_error: f64,
    /// Bandwidth used, when a single one applies to every seed.
    pub bandwidth: Option<f64>,
}

/// Least-squares slope of `ln error` against `ln n` for one estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub estimator: String,
    pub slope: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub seed: u64,
    pub rows: Vec<StudyRow>,
    pub slopes: Vec<SlopeFit>,
    pub reference_std_error: f64,
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 { v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (m, var.sqrt())
}

/// Fits slopes per estimator from `(n, error)` with `error` chosen by `pick`; estimators
/// with a non-positive error anywhere are skipped.
fn fit_all(rows: &[StudyRow], pick: impl Fn(&StudyRow) -> f64) -> Vec<SlopeFit> {
    let mut by: BTreeMap<&str, Vec<(f64, f64)>> = BTreeMap::new();
    for r in rows {
        by.entry(r.estimator.as_str()).or_default().push((r.n as f64, pick(r)));
    }
    by.into_iter()
        .filter_map(|(id, pts)| {
            fit_loglog_slope(&pts).ok().map(|(slope, stderr)| SlopeFit { estimator: id.to_string(), slope, stderr })
        })
        .collect()
}

/// Mean and spread of each estimator across seeds at every sample size of the grid,
/// against the Monte Carlo ground truth computed with `reference_samples` draws.
///
/// Every spec must share `K`, `t1` and `t2`; seed `s` of a spec uses `spec.seed.derive(s)`.
pub fn convergence_study(
    grid: &[SyntheticSpec],
    estimators: &[StudyEstimator],
    seeds: usize,
    reference_samples: usize,
) -> Result<StudyResult> {
    let mut ns: Vec<usize> = grid.iter().map(|s| s.n).collect();
    ns.sort_unstable();
    ns.dedup();
    if ns.len() < 2 {
        return Err(Error::InsufficientGrid);
    }
    if seeds == 0 {
        return Err(Error::InvalidConfig("need at least one seed".into()));
    }
    let first = grid[0];
    if grid.iter().any(|s| s.k != first.k || s.t1 != first.t1 || s.t2 != first.t2) {
        return Err(Error::InvalidConfig("every spec in a study must share K, t1 and t2".into()));
    }
    let mut references: BTreeMap<u64, McEstimate> = BTreeMap::new();
    for e in estimators {
        let p = e.p();
        if let std::collections::btree_map::Entry::Vacant(slot) = references.entry(p.to_bits()) {
            slot.insert(ground_truth_ce(first.k, first.t1, first.t2, p, reference_samples, first.seed.derive(u64::MAX))?);
        }
    }
    let mut specs = grid.to_vec();
    specs.sort_by_key(|s| s.n);
    let mut rows = Vec::new();
    for spec in &specs {
        let datasets: Vec<LabeledDataset> = (0..seeds)
            .map(|s| gen_synthetic(&SyntheticSpec { seed: spec.seed.derive(s as u64), ..*spec }).map(|d| d.0))
            .collect::<Result<_>>()?;
        for e in estimators {
            let reference = references[&e.p().to_bits()].value;
            let (values, bandwidth) = run_estimator(e, &datasets)?;
            let (mean, std) = mean_std(&values);
            let mae = values.iter().map(|v| (v - reference).abs()).sum::<f64>() / values.len() as f64;
            rows.push(StudyRow { n: spec.n, estimator: e.id(), mean, std, reference, mean_abs_error: mae, bandwidth });
        }
    }
    let slopes = fit_all(&rows, |r| r.mean_abs_error);
    let reference_std_error = references.values().map(|r| r.std_error).fold(0.0, f64::max);
    Ok(StudyResult { seed: first.seed.0, rows, slopes, reference_std_error })
}

fn run_estimator(e: &StudyEstimator, datasets: &[LabeledDataset]) -> Result<(Vec<f64>, Option<f64>)> {
    match e {
        StudyEstimator::BinCanonical { p, bins_per_class } => {
            let v = datasets.iter().map(|d| ece_bin_canonical(d, *bins_per_class, *p).map(|r| r.value)).collect::<Result<_>>()?;
            Ok((v, None))
        }
        StudyEstimator::KdeCanonical { p, bandwidth } => {
            let fixed = match bandwidth {
                BandwidthChoice::Fixed(h) => Some(*h),
                BandwidthChoice::SelectOnce(grid) => Some(select_bandwidth(&datasets[0], grid)?),
                BandwidthChoice::SelectEach(_) => None,
            };
            let v = datasets
                .iter()
                .map(|d| {
                    let h = match (fixed, bandwidth) {
                        (Some(h), _) => h,
                        (None, BandwidthChoice::SelectEach(grid)) => select_bandwidth(d, grid)?,
                        _ => unreachable!("bandwidth resolved above"),
                    };
                    ece_kde_canonical(d, &KdeConfig::new(h, *p)).map(|r| r.value)
                })
                .collect::<Result<_>>()?;
            Ok((v, fixed.map(Bandwidth::get)))
        }
    }
}

/// Sharpness ratio at `location` from `samples` synthetic binary draws, streamed in chunks.
pub fn sharpness_reference(samples: usize, h: Bandwidth, location: f64, seed: RngSeed) -> Result<McEstimate> {
    if !(location > 0.0 && location < 1.0) {
        return Err(Error::BoundaryInput(location));
    }
    let t = DEBIAS_STUDY_TEMPERATURE;
    let inv_h = 1.0 / h.get();
    let lx = [(1.0 - location).ln(), location.ln()];
    let parts: Vec<([f64; 3], [f64; 3])> = chunk_ranges(samples)
        .into_par_iter()
        .map(|(c, len)| -> Result<([f64; 3], [f64; 3])> {
            let mut rng = seed.substream(c);
            let mut draw = Draw::new(2);
            let (mut all, mut pos) = ([0.0; 3], [0.0; 3]);
            for _ in 0..len {
                let y = draw.sample(&mut rng, t, t)?;
                let mut f = [draw.f[0], draw.f[1]];
                crate::simplex::clamp_interior(&mut f, crate::simplex::CLAMP_EPS);
                let w = (log_normalizer(&f, inv_h) + inv_h * (f[0] * lx[0] + f[1] * lx[1])).exp();
                let pw = [w, w * w, w * w * w];
                for m in 0..3 {
                    all[m] += pw[m];
                    if y == 1 {
                        pos[m] += pw[m];
                    }
                }
            }
            Ok((all, pos))
        })
        .collect::<Result<_>>()?;
    let (mut all, mut pos) = ([0.0; 3], [0.0; 3]);
    for (a, p) in &parts {
        for m in 0..3 {
            all[m] += a[m];
            pos[m] += p[m];
        }
    }
    let value = crate::estimators::sharpness_from_sums(all, pos, samples, SharpnessMode::Partial);
    // delta-method error of the ratio of means mu_Y^2 / mu_X^2
    let n = samples as f64;
    let (mx, my) = (all[0] / n, pos[0] / n);
    let (vx, vy, cxy) = (all[1] / n - mx * mx, pos[1] / n - my * my, pos[1] / n - mx * my);
    let r = my / mx;
    let var_r = (vy - 2.0 * r * cxy + r * r * vx) / (mx * mx * n);
    Ok(McEstimate { value, std_error: (2.0 * r).abs() * var_r.max(0.0).sqrt() })
}

/// Mean sharpness ratio at `location` over `reps` synthetic binary datasets per sample size,
/// for the partial and second-order estimators, against a partial-ratio reference drawn
/// from `reference_samples` points. Slopes fit `|mean - reference|` against `n`.
pub fn debias_study(
    ns: &[usize],
    reps: usize,
    h: Bandwidth,
    location: f64,
    seed: RngSeed,
    reference_samples: usize,
) -> Result<StudyResult> {
    if reps < 100 {
        return Err(Error::InvalidConfig(format!("need at least 100 repetitions, got {reps}")));
    }
    let mut ns = ns.to_vec();
    ns.sort_unstable();
    ns.dedup();
    if ns.len() < 2 {
        return Err(Error::InsufficientGrid);
    }
    if let Some(&bad) = ns.iter().find(|&&n| !(8..=1_000_000).contains(&n)) {
        return Err(Error::InvalidConfig(format!("sample size {bad} outside [8, 10^6]")));
    }
    let reference = sharpness_reference(reference_samples, h, location, seed.derive(u64::MAX))?;
    let t = DEBIAS_STUDY_TEMPERATURE;
    let mut rows = Vec::new();
    for &n in &ns {
        let per_rep: Vec<(f64, f64)> = (0..reps)
            .into_par_iter()
            .map(|r| -> Result<(f64, f64)> {
                let spec = SyntheticSpec { k: 2, n, t1: t, t2: t, seed: seed.derive(n as u64).derive(r as u64) };
                let (ds, _) = gen_synthetic(&spec)?;
                Ok((
                    sharpness_at(location, &ds, h, SharpnessMode::Partial)?,
                    sharpness_at(location, &ds, h, SharpnessMode::SecondOrder)?,
                ))
            })
            .collect::<Result<_>>()?;
        for (id, pick) in [("partial", 0usize), ("second_order", 1)] {
            let v: Vec<f64> = per_rep.iter().map(|&(a, b)| if pick == 0 { a } else { b }).collect();
            let (mean, std) = mean_std(&v);
            let mae = v.iter().map(|x| (x - reference.value).abs()).sum::<f64>() / v.len() as f64;
            rows.push(StudyRow {
                n,
                estimator: id.into(),
                mean,
                std,
                reference: reference.value,
                mean_abs_error: mae,
                bandwidth: Some(h.get()),
            });
        }
    }
    let slopes = fit_all(&rows, |r| (r.mean - r.reference).abs());
    Ok(StudyResult { seed: seed.0, rows, slopes, reference_std_error: reference.std_error })
}

/// Least-squares slope of `ln error` on `ln n`, with its standard error.
pub fn fit_loglog_slope(rows: &[(f64, f64)]) -> Result<(f64, f64)> {
    if rows.len() < 3 {
        return Err(Error::TooFewRows { needed: 3, got: rows.len() });
    }
    if let Some(&(_, e)) = rows.iter().find(|&&(_, e)| e.is_nan() || e <= 0.0) {
        return Err(Error::NonPositiveError(e));
    }
    let pts: Vec<(f64, f64)> = rows.iter().map(|&(n, e)| (n.ln(), e.ln())).collect();
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientGrid);
    }
    let slope = sxy / sxx;
    let ssr: f64 = pts.iter().map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2)).sum();
    Ok((slope, (ssr / (m - 2.0) / sxx).sqrt()))
}

/// Percentile interval of `estimator` over `b` row resamples drawn with replacement.
///
/// Quantiles interpolate linearly between order statistics.
pub fn bootstrap_ci<F>(ds: &LabeledDataset, estimator: F, b: usize, level: f64, seed: RngSeed) -> Result<(f64, f64)>
where
    F: Fn(&LabeledDataset) -> Result<f64> + Sync,
{
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidLevel(level));
    }
    if b < 10 {
        return Err(Error::InvalidConfig(format!("need at least 10 bootstrap resamples, got {b}")));
    }
    if ds.is_empty() {
        return Err(Error::Empty);
    }
    let n = ds.len();
    let mut values: Vec<f64> = (0..b)
        .into_par_iter()
        .map(|r| {
            let mut rng = seed.substream(r as u64);
            let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            estimator(&ds.select(&idx))
        })
        .collect::<Result<_>>()?;
    values.sort_by(f64::total_cmp);
    let alpha = (1.0 - level) / 2.0;
    Ok((quantile(&values, alpha), quantile(&values, 1.0 - alpha)))
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simplex::temperature_scale;

    fn spec(k: usize, n: usize, t1: f64, t2: f64, seed: u64) -> SyntheticSpec {
        SyntheticSpec { k, n, t1, t2, seed: RngSeed(seed) }
    }

    #[test]
    fn identity_temperature_is_calibrated() {
        let (ds, truth) = gen_synthetic(&spec(3, 200, 0.6, 1.0, 1)).unwrap();
        for (i, t) in truth.iter().enumerate() {
            assert_eq!(t.coords(), ds.row(i));
        }
    }

    #[test]
    fn truth_is_inverse_scaling() {
        let (ds, truth) = gen_synthetic(&spec(4, 300, 0.6, 0.6, 2)).unwrap();
        for (i, t) in truth.iter().enumerate() {
            let p = SimplexPoint::new(ds.row(i).to_vec()).unwrap();
            let back = temperature_scale(&p, 1.0 / 0.6).unwrap();
            for (a, b) in back.coords().iter().zip(t.coords()) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn generation_is_reproducible() {
        let a = gen_synthetic(&spec(4, 500, 0.6, 0.6, 9)).unwrap();
        let b = gen_synthetic(&spec(4, 500, 0.6, 0.6, 9)).unwrap();
        assert_eq!(a, b);
        assert!(gen_synthetic(&spec(1, 5, 0.6, 0.6, 9)).is_err());
    }

    #[test]
    fn ground_truth_zero_when_calibrated() {
        let g = ground_truth_ce(3, 0.6, 1.0, 1.0, 20_000, RngSeed(0)).unwrap();
        assert_eq!(g.value, 0.0);
        assert!(ground_truth_ce(3, 0.6, 0.6, 1.0, 100, RngSeed(0)).is_err());
    }

    #[test]
    fn slope_of_exact_power_laws() {
        for expo in [-0.5, -1.0] {
            let rows: Vec<(f64, f64)> = [250.0, 500.0, 1000.0, 4000.0].iter().map(|&n: &f64| (n, 3.0 * n.powf(expo))).collect();
            let (s, se) = fit_loglog_slope(&rows).unwrap();
            assert!((s - expo).abs() < 1e-10);
            assert!(se < 1e-10);
        }
        assert!(matches!(fit_loglog_slope(&[(1.0, 1.0), (2.0, 1.0)]), Err(Error::TooFewRows { .. })));
        assert!(matches!(fit_loglog_slope(&[(1.0, 1.0), (2.0, 0.0), (3.0, 1.0)]), Err(Error::NonPositiveError(_))));
    }

    #[test]
    fn study_grid_checks() {
        let g = [spec(2, 50, 0.6, 0.6, 0)];
        let e = [StudyEstimator::BinCanonical { p: 1.0, bins_per_class: 2 }];
        assert!(matches!(convergence_study(&g, &e, 2, 10_000), Err(Error::InsufficientGrid)));
        let h = Bandwidth::new(0.5).unwrap();
        assert!(matches!(debias_study(&[32, 64], 50, h, 0.17, RngSeed(0), 10_000), Err(Error::InvalidConfig(_))));
        assert!(matches!(debias_study(&[32], 100, h, 0.17, RngSeed(0), 10_000), Err(Error::InsufficientGrid)));
    }

    #[test]
    fn bootstrap_constant_estimator() {
        let (ds, _) = gen_synthetic(&spec(3, 50, 0.6, 0.6, 3)).unwrap();
        let (lo, hi) = bootstrap_ci(&ds, |_| Ok(0.25), 20, 0.95, RngSeed(1)).unwrap();
        assert_eq!((lo, hi), (0.25, 0.25));
        assert!(matches!(bootstrap_ci(&ds, |_| Ok(0.0), 20, 1.0, RngSeed(1)), Err(Error::InvalidLevel(_))));
        let mean_label = |d: &LabeledDataset| Ok(d.labels().iter().sum::<usize>() as f64 / d.len() as f64);
        let a = bootstrap_ci(&ds, mean_label, 50, 0.9, RngSeed(4)).unwrap();
        let b = bootstrap_ci(&ds, mean_label, 50, 0.9, RngSeed(4)).unwrap();
        assert_eq!(a, b);
        assert!(a.0 < a.1);
    }
}
