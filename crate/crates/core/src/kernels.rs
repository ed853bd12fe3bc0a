//! Beta and Dirichlet smoothing kernels on the simplex, evaluated in log space.
//!
//! A kernel centered at `c` with bandwidth `h` is the Dirichlet density with
//! concentration `alpha = c / h + 1`, evaluated at `x`:
//!
//! ```text
//! ln k(x; c) = lnG(sum_k alpha_k) - sum_k lnG(alpha_k) + sum_k (alpha_k - 1) ln x_k
//! ```
//!
//! The Beta kernel is the two-class case with `c = (c, 1 - c)`. The kernel is
//! not symmetric in its arguments.

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::ln_gamma;
use crate::simplex::{LabeledDataset, SimplexPoint};

/// Kernel bandwidth `h > 0`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Bandwidth(f64);

impl Bandwidth {
    pub fn new(h: f64) -> Result<Self> {
        if h > 0.0 && h.is_finite() {
            Ok(Self(h))
        } else {
            Err(Error::InvalidBandwidth(h))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl std::fmt::Display for Bandwidth {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

fn check_open_unit(v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::BoundaryInput(v))
    }
}

fn check_interior(coords: &[f64]) -> Result<()> {
    if coords.len() < 2 {
        return Ok(());
    }
    coords.iter().try_for_each(|&c| check_open_unit(c))
}

/// `lnG(sum alpha) - sum lnG(alpha)` for `alpha = center / h + 1`.
pub(crate) fn log_normalizer(center: &[f64], inv_h: f64) -> f64 {
    let mut total = 0.0;
    let mut parts = 0.0;
    for &c in center {
        let a = c * inv_h + 1.0;
        total += a;
        parts += ln_gamma(a);
    }
    ln_gamma(total) - parts
}

/// Log density at `x` of the Beta kernel centered at `center`.
///
/// Both arguments must lie strictly inside `(0, 1)`; callers clamp beforehand.
pub fn log_beta_kernel(x: f64, center: f64, h: Bandwidth) -> Result<f64> {
    check_open_unit(x)?;
    check_open_unit(center)?;
    let inv_h = 1.0 / h.get();
    let c = [center, 1.0 - center];
    Ok(log_normalizer(&c, inv_h) + c[0] * inv_h * x.ln() + c[1] * inv_h * (1.0 - x).ln())
}

/// Log density at `x` of the Dirichlet kernel centered at `center`.
pub fn log_dirichlet_kernel(x: &SimplexPoint, center: &SimplexPoint, h: Bandwidth) -> Result<f64> {
    if x.dim() != center.dim() {
        return Err(Error::DimensionMismatch { expected: center.dim(), got: x.dim() });
    }
    check_interior(x.coords())?;
    check_interior(center.coords())?;
    Ok(log_dirichlet_raw(x.coords(), center.coords(), h.get()))
}

/// Unchecked evaluation on raw coordinate slices.
pub(crate) fn log_dirichlet_raw(x: &[f64], center: &[f64], h: f64) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let inv_h = 1.0 / h;
    let cross: f64 = x.iter().zip(center).map(|(&xk, &ck)| ck * inv_h * xk.ln()).sum();
    log_normalizer(center, inv_h) + cross
}

/// Precomputed per-point quantities for evaluating every `ln k(x_j; x_i)` in a
/// point set with `O(K)` work per pair.
#[derive(Debug, Clone)]
pub struct KernelTable {
    k: usize,
    n: usize,
    h: f64,
    scaled: Vec<f64>,
    log_norm: Vec<f64>,
    log_points: Vec<f64>,
}

impl KernelTable {
    /// Builds the table for `n` points stored row-major in `flat` (`n * k` values).
    ///
    /// Every coordinate must lie in `(0, 1)` when `k >= 2`.
    pub fn new(flat: &[f64], k: usize, h: Bandwidth) -> Result<Self> {
        if k == 0 || flat.len() % k != 0 {
            return Err(Error::InvalidDimension(format!("{} values do not form rows of {k}", flat.len())));
        }
        if k >= 2 {
            flat.iter().try_for_each(|&c| check_open_unit(c))?;
        }
        let n = flat.len() / k;
        let inv_h = 1.0 / h.get();
        let (scaled, log_points) = if k >= 2 {
            (flat.iter().map(|&c| c * inv_h).collect(), flat.iter().map(|&c| c.ln()).collect())
        } else {
            (vec![0.0; n], vec![0.0; n])
        };
        let log_norm = if k >= 2 {
            flat.chunks_exact(k).map(|c| log_normalizer(c, inv_h)).collect()
        } else {
            vec![0.0; n]
        };
        Ok(Self { k, n, h: h.get(), scaled, log_norm, log_points })
    }

    pub fn for_dataset(ds: &LabeledDataset, h: Bandwidth) -> Result<Self> {
        Self::new(ds.points().as_slice().expect("standard layout"), ds.num_classes(), h)
    }

    /// Two-column representation `(v, 1 - v)` for Beta kernels over scalars in `(0, 1)`.
    pub fn for_scalars(values: &[f64], h: Bandwidth) -> Result<Self> {
        values.iter().try_for_each(|&v| check_open_unit(v))?;
        let flat: Vec<f64> = values.iter().flat_map(|&v| [v, 1.0 - v]).collect();
        Self::new(&flat, 2, h)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.k
    }

    pub fn bandwidth(&self) -> f64 {
        self.h
    }

    /// `ln k(x_j; x_i)`.
    #[inline]
    pub fn log_kernel(&self, j: usize, i: usize) -> f64 {
        let k = self.k;
        let lx = &self.log_points[j * k..(j + 1) * k];
        let c = &self.scaled[i * k..(i + 1) * k];
        self.log_norm[i] + dot(c, lx)
    }

    /// Fills `out[i] = ln k(x_j; x_i)` for every center `i`.
    pub fn row(&self, j: usize, out: &mut [f64]) {
        let k = self.k;
        self.row_at(&self.log_points[j * k..(j + 1) * k], out);
    }

    /// Fills `out[i] = ln k(x; x_i)` where `log_x` holds `ln x_k`.
    pub fn row_at(&self, log_x: &[f64], out: &mut [f64]) {
        let k = self.k;
        debug_assert_eq!(log_x.len(), k);
        debug_assert_eq!(out.len(), self.n);
        match k {
            2 => {
                let (a, b) = (log_x[0], log_x[1]);
                for ((o, c), &ln) in out.iter_mut().zip(self.scaled.chunks_exact(2)).zip(&self.log_norm) {
                    *o = ln + c[0] * a + c[1] * b;
                }
            }
            _ => {
                for ((o, c), &ln) in out.iter_mut().zip(self.scaled.chunks_exact(k)).zip(&self.log_norm) {
                    *o = ln + dot(c, log_x);
                }
            }
        }
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Table of `values[j][i] = ln k(x_j; x_i)` over a dataset.
#[derive(Debug, Clone)]
pub struct LogKernelMatrix {
    values: Array2<f64>,
    diagonal_excluded: bool,
}

impl LogKernelMatrix {
    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn diagonal_excluded(&self) -> bool {
        self.diagonal_excluded
    }

    /// Entry `(j, i)`, or `None` when it is a masked diagonal entry.
    pub fn get(&self, j: usize, i: usize) -> Option<f64> {
        if self.diagonal_excluded && i == j {
            None
        } else {
            Some(self.values[[j, i]])
        }
    }

    /// Usable entries of row `j`.
    pub fn row_entries(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let skip = self.diagonal_excluded;
        self.values.row(j).into_iter().copied().enumerate().filter(move |&(i, _)| !(skip && i == j))
    }

    /// `ln sum_i k(x_j; x_i)` over usable entries.
    pub fn row_log_sum(&self, j: usize) -> Result<f64> {
        let entries: Vec<f64> = self.row_entries(j).map(|(_, v)| v).collect();
        if entries.is_empty() {
            return Err(Error::TooFewPoints { needed: 2, got: self.values.nrows() });
        }
        Ok(crate::numeric::log_sum_exp(&entries))
    }
}

/// Builds the full `n x n` log-kernel matrix; rows are computed in parallel.
pub fn log_kernel_matrix(ds: &LabeledDataset, h: Bandwidth, exclude_diagonal: bool) -> Result<LogKernelMatrix> {
    let table = KernelTable::for_dataset(ds, h)?;
    let n = table.len();
    let mut values = Array2::<f64>::zeros((n, n));
    values
        .as_slice_mut()
        .expect("standard layout")
        .par_chunks_mut(n.max(1))
        .enumerate()
        .for_each(|(j, row)| {
            table.row(j, row);
            if exclude_diagonal {
                row[j] = f64::NEG_INFINITY;
            }
        });
    Ok(LogKernelMatrix { values, diagonal_excluded: exclude_diagonal })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bw(h: f64) -> Bandwidth {
        Bandwidth::new(h).unwrap()
    }

    fn sp(v: &[f64]) -> SimplexPoint {
        SimplexPoint::new(v.to_vec()).unwrap()
    }

    #[test]
    fn bandwidth_rejects_bad_values() {
        assert!(Bandwidth::new(0.0).is_err());
        assert!(Bandwidth::new(-1.0).is_err());
        assert!(Bandwidth::new(f64::INFINITY).is_err());
        assert!(Bandwidth::new(f64::NAN).is_err());
    }

    #[test]
    fn beta_kernel_closed_forms() {
        // h -> inf gives Beta(1, 1)
        let v = log_beta_kernel(0.5, 0.5, bw(1e12)).unwrap();
        assert!(v.abs() < 1e-10);
        // Beta(2, 2) at 0.5 is 6 * 0.25
        let v = log_beta_kernel(0.5, 0.5, bw(0.5)).unwrap();
        assert!((v - 1.5f64.ln()).abs() < 1e-13);
    }

    #[test]
    fn beta_kernel_matches_high_precision_reference() {
        // mpmath, 50 digits: Beta(1.34, 2.66) log density at 0.17
        let expected = 0.590_725_502_349_923_9;
        let v = log_beta_kernel(0.17, 0.17, bw(0.5)).unwrap();
        assert!((v - expected).abs() < 1e-13, "{v}");
    }

    #[test]
    fn dirichlet_matches_high_precision_reference() {
        // mpmath, 50 digits: Dirichlet(1.5, 1.5, 1.5, 1.5) log density at the barycenter
        let expected = 2.498_031_971_083_245_6;
        let c = sp(&[0.25; 4]);
        let v = log_dirichlet_kernel(&c, &c, bw(0.5)).unwrap();
        assert!((v - expected).abs() < 1e-13, "{v}");
    }

    #[test]
    fn boundary_inputs_are_rejected() {
        assert!(matches!(log_beta_kernel(0.0, 0.5, bw(0.1)), Err(Error::BoundaryInput(_))));
        assert!(matches!(log_beta_kernel(0.5, 1.0, bw(0.1)), Err(Error::BoundaryInput(_))));
        let x = sp(&[1.0, 0.0]);
        let c = sp(&[0.5, 0.5]);
        assert!(matches!(log_dirichlet_kernel(&x, &c, bw(0.1)), Err(Error::BoundaryInput(_))));
        let c3 = sp(&[0.2, 0.3, 0.5]);
        assert!(matches!(log_dirichlet_kernel(&c, &c3, bw(0.1)), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn dirichlet_uniform_limit() {
        let x = sp(&[0.2, 0.3, 0.5]);
        let c = sp(&[0.6, 0.1, 0.3]);
        let v = log_dirichlet_kernel(&x, &c, bw(1e12)).unwrap();
        assert!((v - 2f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn kernel_matrix_cases() {
        let ds = LabeledDataset::from_rows(&[vec![0.3, 0.7]], &[0]).unwrap();
        let m = log_kernel_matrix(&ds, bw(0.5), true).unwrap();
        assert_eq!(m.row_entries(0).count(), 0);
        assert!(m.row_log_sum(0).is_err());

        let ds = LabeledDataset::from_rows(&vec![vec![0.2, 0.3, 0.5]; 4], &[0, 1, 2, 0]).unwrap();
        let m = log_kernel_matrix(&ds, bw(0.2), true).unwrap();
        let first = m.get(0, 1).unwrap();
        for j in 0..4 {
            assert!(m.get(j, j).is_none());
            for (_, v) in m.row_entries(j) {
                assert_eq!(v, first);
            }
        }

        let rows = vec![vec![0.1, 0.6, 0.3], vec![0.5, 0.25, 0.25], vec![0.7, 0.2, 0.1]];
        let ds = LabeledDataset::from_rows(&rows, &[0, 1, 2]).unwrap();
        let m = log_kernel_matrix(&ds, bw(0.3), false).unwrap();
        for j in 0..3 {
            for i in 0..3 {
                let direct = log_dirichlet_kernel(&sp(&rows[j]), &sp(&rows[i]), bw(0.3)).unwrap();
                assert!((m.get(j, i).unwrap() - direct).abs() < 1e-12);
            }
        }
    }
}
