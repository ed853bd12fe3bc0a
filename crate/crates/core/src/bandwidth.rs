//! Leave-one-out maximum-likelihood bandwidth selection.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{log_normalizer, Bandwidth, KernelTable};
use crate::simplex::{LabeledDataset, CLAMP_EPS};

/// Strictly increasing list of candidate bandwidths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandwidthGrid(Vec<f64>);

impl BandwidthGrid {
    pub fn new(candidates: Vec<f64>) -> Result<Self> {
        if candidates.is_empty() {
            return Err(Error::InvalidGrid("no candidates".into()));
        }
        if let Some(&bad) = candidates.iter().find(|&&h| !(h.is_finite() && h > 0.0)) {
            return Err(Error::InvalidGrid(format!("candidate {bad} is not a positive finite number")));
        }
        if candidates.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidGrid("candidates must be strictly increasing".into()));
        }
        Ok(BandwidthGrid(candidates))
    }

    /// `count` values spaced evenly in log scale over `[lo, hi]`.
    pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Result<Self> {
        if count == 1 {
            return Self::new(vec![lo]);
        }
        if !(lo > 0.0 && hi > lo) {
            return Err(Error::InvalidGrid(format!("bad range [{lo}, {hi}]")));
        }
        let (a, b) = (lo.ln(), hi.ln());
        let step = (b - a) / (count - 1) as f64;
        let mut v: Vec<f64> = (0..count).map(|i| (a + step * i as f64).exp()).collect();
        v[0] = lo;
        v[count - 1] = hi;
        Self::new(v)
    }

    pub fn candidates(&self) -> &[f64] {
        &self.0
    }
}

impl Default for BandwidthGrid {
    /// 20 log-spaced values over `[1e-4, 10]`.
    fn default() -> Self {
        Self::log_spaced(1e-4, 10.0, 20).expect("valid default grid")
    }
}

/// `sum_j ln( (1/(n-1)) sum_{i != j} k(x_j; x_i) )` with the Dirichlet kernel.
pub fn loo_log_likelihood(ds: &LabeledDataset, h: Bandwidth) -> Result<f64> {
    let n = ds.len();
    if n < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: n });
    }
    let ds = ds.clamped(CLAMP_EPS);
    let table = KernelTable::for_dataset(&ds, h)?;
    let ln_m = ((n - 1) as f64).ln();
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map_init(
            || vec![0.0; n],
            |buf, j| {
                table.row(j, buf);
                buf[j] = f64::NEG_INFINITY;
                lse(buf) - ln_m
            },
        )
        .collect();
    Ok(rows.iter().sum())
}

fn lse(v: &[f64]) -> f64 {
    let max = v.iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x));
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + v.iter().map(|&x| (x - max).exp()).sum::<f64>().ln()
}

/// Leave-one-out log-likelihood for every grid candidate.
///
/// The cross terms `sum_k x_ik ln x_jk` do not depend on `h`, so each row is built
/// once and reused for all candidates.
pub fn loo_log_likelihood_grid(ds: &LabeledDataset, grid: &BandwidthGrid) -> Result<Vec<f64>> {
    let n = ds.len();
    if n < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: n });
    }
    let k = ds.num_classes();
    if k < 2 {
        return Ok(vec![0.0; grid.candidates().len()]);
    }
    let ds = ds.clamped(CLAMP_EPS);
    let flat = ds.points().as_slice().expect("standard layout");
    let hs = grid.candidates();
    let norms: Vec<Vec<f64>> = hs.iter().map(|&h| flat.chunks_exact(k).map(|c| log_normalizer(c, 1.0 / h)).collect()).collect();
    let log_x: Vec<f64> = flat.iter().map(|v| v.ln()).collect();
    let ln_m = ((n - 1) as f64).ln();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map_init(
            || (vec![0.0; n], vec![0.0; n]),
            |(cross, buf), j| {
                let lx = &log_x[j * k..(j + 1) * k];
                for (c, xi) in cross.iter_mut().zip(flat.chunks_exact(k)) {
                    *c = xi.iter().zip(lx).map(|(a, b)| a * b).sum();
                }
                hs.iter()
                    .zip(&norms)
                    .map(|(&h, norm)| {
                        let inv_h = 1.0 / h;
                        for ((b, &c), &ln) in buf.iter_mut().zip(cross.iter()).zip(norm) {
                            *b = ln + c * inv_h;
                        }
                        buf[j] = f64::NEG_INFINITY;
                        lse(buf) - ln_m
                    })
                    .collect()
            },
        )
        .collect();
    Ok((0..hs.len()).map(|c| rows.iter().map(|r| r[c]).sum()).collect())
}

/// Candidate with the largest leave-one-out log-likelihood; ties go to the smaller bandwidth.
pub fn select_bandwidth(ds: &LabeledDataset, grid: &BandwidthGrid) -> Result<Bandwidth> {
    let scores = loo_log_likelihood_grid(ds, grid)?;
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    Bandwidth::new(grid.candidates()[best])
}
