//! Histogram baselines: simplex-lattice canonical binning, equal- and adaptive-width
//! top-label binning, and Doane's bin-count rule.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{CalibrationEstimate, EstimateKind};
use crate::numeric::abs_pow;
use crate::simplex::{argmax, LabeledDataset};

/// How a binned estimate partitions its inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinKind {
    SimplexGrid,
    ToplabelEqual,
    ToplabelAdaptive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinningScheme {
    pub kind: BinKind,
    /// Subdivisions per coordinate for the simplex grid, total bins otherwise.
    pub bins: usize,
}

impl BinningScheme {
    pub fn new(kind: BinKind, bins: usize) -> Result<Self> {
        if bins == 0 {
            return Err(Error::InvalidConfig("bin count must be at least 1".into()));
        }
        Ok(BinningScheme { kind, bins })
    }
}

/// Equal-width or count-balanced bins over top-label confidence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopLabelBinning {
    Equal,
    Adaptive,
}

/// Lattice cell index, one entry per class.
pub type BinId = Vec<usize>;

/// Per-bin label means over a simplex partition.
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramEstimate {
    pub bin_of: Vec<BinId>,
    /// Mean one-hot label of each occupied bin.
    pub means: BTreeMap<BinId, Vec<f64>>,
    pub counts: BTreeMap<BinId, usize>,
}

impl HistogramEstimate {
    pub fn mean_of(&self, i: usize) -> &[f64] {
        &self.means[&self.bin_of[i]]
    }
}

fn cell(v: f64, bins: usize) -> usize {
    ((v * bins as f64).floor().max(0.0) as usize).min(bins - 1)
}

/// Assigns every point to the lattice cell `(floor(f_k B))_k`, capped at `B - 1`.
pub fn assign_simplex_bins(ds: &LabeledDataset, bins_per_class: usize) -> Result<HistogramEstimate> {
    let scheme = BinningScheme::new(BinKind::SimplexGrid, bins_per_class)?;
    let k = ds.num_classes();
    let bin_of: Vec<BinId> = (0..ds.len()).map(|i| ds.row(i).iter().map(|&v| cell(v, scheme.bins)).collect()).collect();
    let mut sums: BTreeMap<BinId, Vec<f64>> = BTreeMap::new();
    let mut counts: BTreeMap<BinId, usize> = BTreeMap::new();
    for (id, &y) in bin_of.iter().zip(ds.labels()) {
        sums.entry(id.clone()).or_insert_with(|| vec![0.0; k])[y] += 1.0;
        *counts.entry(id.clone()).or_insert(0) += 1;
    }
    let means = sums
        .into_iter()
        .map(|(id, s)| {
            let c = counts[&id] as f64;
            (id, s.into_iter().map(|v| v / c).collect())
        })
        .collect();
    Ok(HistogramEstimate { bin_of, means, counts })
}

/// `(1/n) sum_i |H(bin(i)) - f_i|_p^p` over the simplex lattice partition.
pub fn ece_bin_canonical(ds: &LabeledDataset, bins_per_class: usize, p: f64) -> Result<CalibrationEstimate> {
    check_p(p)?;
    let hist = assign_simplex_bins(ds, bins_per_class)?;
    let total: f64 = (0..ds.len())
        .map(|i| hist.mean_of(i).iter().zip(ds.row(i)).map(|(h, f)| abs_pow(h - f, p)).sum::<f64>())
        .sum();
    Ok(CalibrationEstimate::binned(total / ds.len() as f64, EstimateKind::Canonical, p, ds))
}

fn check_p(p: f64) -> Result<()> {
    if p.is_finite() && p >= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("p must be >= 1, got {p}")))
    }
}

/// Bin index per point for the top-label confidences.
fn toplabel_bins(conf: &[f64], n_bins: usize, scheme: TopLabelBinning) -> Result<Vec<usize>> {
    let n = conf.len();
    match scheme {
        TopLabelBinning::Equal => Ok(conf.iter().map(|&c| cell(c, n_bins)).collect()),
        TopLabelBinning::Adaptive => {
            if n < n_bins {
                return Err(Error::TooFewPoints { needed: n_bins, got: n });
            }
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| conf[a].total_cmp(&conf[b]));
            let (base, extra) = (n / n_bins, n % n_bins);
            let mut starts = Vec::with_capacity(n_bins);
            let mut pos = 0;
            for b in 0..n_bins {
                let mut s = pos;
                // a run of equal confidences never straddles a cut
                while s > 0 && s < n && conf[order[s]] == conf[order[s - 1]] {
                    s += 1;
                }
                starts.push(s.max(starts.last().copied().unwrap_or(0)));
                pos += base + usize::from(b < extra);
            }
            let mut bin = vec![0; n];
            let mut b = 0;
            for (rank, &i) in order.iter().enumerate() {
                while b + 1 < n_bins && rank >= starts[b + 1] {
                    b += 1;
                }
                bin[i] = b;
            }
            Ok(bin)
        }
    }
}

/// `sum_b (n_b / n) |acc_b - conf_b|^p` over bins of the top-label confidence.
pub fn ece_bin_toplabel(
    ds: &LabeledDataset,
    n_bins: usize,
    scheme: TopLabelBinning,
    p: f64,
) -> Result<CalibrationEstimate> {
    check_p(p)?;
    if n_bins == 0 {
        return Err(Error::InvalidConfig("bin count must be at least 1".into()));
    }
    if ds.is_empty() {
        return Err(Error::TooFewPoints { needed: 1, got: 0 });
    }
    let (conf, hit): (Vec<f64>, Vec<f64>) = (0..ds.len())
        .map(|i| {
            let row = ds.row(i);
            let top = argmax(row);
            (row[top], if top == ds.labels()[i] { 1.0 } else { 0.0 })
        })
        .unzip();
    let bins = toplabel_bins(&conf, n_bins, scheme)?;
    let mut acc = vec![(0.0, 0.0, 0usize); n_bins];
    for ((&b, &c), &z) in bins.iter().zip(&conf).zip(&hit) {
        acc[b].0 += c;
        acc[b].1 += z;
        acc[b].2 += 1;
    }
    let n = ds.len() as f64;
    let value = acc
        .iter()
        .filter(|a| a.2 > 0)
        .map(|&(c, z, m)| {
            let m = m as f64;
            m / n * abs_pow(z / m - c / m, p)
        })
        .sum();
    Ok(CalibrationEstimate::binned(value, EstimateKind::TopLabel, p, ds))
}

/// Doane's bin count `round(1 + log2 n + log2(1 + |g1| / sigma_g1))`, at least 1.
///
/// Zero-variance samples have skewness 0 by convention.
pub fn doane_bins(samples: &[f64]) -> Result<usize> {
    let n = samples.len();
    if n < 3 {
        return Err(Error::TooFewPoints { needed: 3, got: n });
    }
    let nf = n as f64;
    let mean = samples.iter().sum::<f64>() / nf;
    let (m2, m3) = samples.iter().fold((0.0, 0.0), |(a, b), &x| {
        let d = x - mean;
        (a + d * d, b + d * d * d)
    });
    let (m2, m3) = (m2 / nf, m3 / nf);
    let g1 = if m2 > 0.0 { m3 / m2.powf(1.5) } else { 0.0 };
    let sigma = (6.0 * (nf - 2.0) / ((nf + 1.0) * (nf + 3.0))).sqrt();
    let k = 1.0 + nf.log2() + (1.0 + g1.abs() / sigma).log2();
    Ok(((k + 0.5).floor() as usize).max(1))
}
