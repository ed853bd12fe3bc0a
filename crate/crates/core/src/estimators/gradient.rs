use ndarray::Array2;
use rayon::prelude::*;

use super::canonical::check_raw;
use super::{Debias, KdeConfig};
use crate::error::{Error, Result};
use crate::kernels::{Bandwidth, KernelTable};
use crate::numeric::{abs_pow_deriv, digamma};
use crate::simplex::LabeledDataset;

const CHUNK: usize = 64;

/// Center-side accumulators: `a_i = sum_j A_ji` and `b_ik = sum_j A_ji ln x_jk`.
struct CenterAcc {
    a: Vec<f64>,
    b: Vec<f64>,
}

/// Gradient of [`canonical_objective`](super::canonical_objective) with respect to every coordinate.
///
/// `p` must be 1 or 2; at `p = 1` an exact zero residual contributes a zero subgradient.
pub fn grad_canonical_objective(points: &Array2<f64>, labels: &[usize], h: Bandwidth, p: f64) -> Result<Array2<f64>> {
    if p != 1.0 && p != 2.0 {
        return Err(Error::UnsupportedNorm(p));
    }
    let (n, k) = points.dim();
    check_raw(n, k, labels)?;
    let flat = points.as_standard_layout();
    let flat = flat.as_slice().expect("standard layout");
    let table = KernelTable::new(flat, k, h)?;
    let hv = h.get();
    let nf = n as f64;
    let log_x: Vec<f64> = flat.iter().map(|v| v.ln()).collect();

    let chunks: Vec<(Vec<f64>, CenterAcc)> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let rows = c * CHUNK..((c + 1) * CHUNK).min(n);
            let mut own = vec![0.0; rows.len() * k];
            let mut acc = CenterAcc { a: vec![0.0; n], b: vec![0.0; n * k] };
            let mut buf = vec![0.0; n];
            let mut e = vec![0.0; k];
            let mut g = vec![0.0; k];
            let mut pull = vec![0.0; k];
            for (r, j) in rows.enumerate() {
                table.row(j, &mut buf);
                buf[j] = f64::NEG_INFINITY;
                let max = buf.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
                let mut total = 0.0;
                for v in buf.iter_mut() {
                    *v = (*v - max).exp();
                    total += *v;
                }
                e.iter_mut().for_each(|v| *v = 0.0);
                for (w, &y) in buf.iter_mut().zip(labels) {
                    *w /= total;
                    e[y] += *w;
                }
                let xj = &flat[j * k..(j + 1) * k];
                for m in 0..k {
                    g[m] = abs_pow_deriv(e[m] - xj[m], p);
                }
                let ge: f64 = g.iter().zip(&e).map(|(a, b)| a * b).sum();
                let lx = &log_x[j * k..(j + 1) * k];
                pull.iter_mut().for_each(|v| *v = 0.0);
                for (i, (&w, &y)) in buf.iter().zip(labels).enumerate() {
                    if w == 0.0 {
                        continue;
                    }
                    let a = w * (g[y] - ge) / nf;
                    let xi = &flat[i * k..(i + 1) * k];
                    for m in 0..k {
                        pull[m] += a * xi[m];
                    }
                    acc.a[i] += a;
                    let bi = &mut acc.b[i * k..(i + 1) * k];
                    for m in 0..k {
                        bi[m] += a * lx[m];
                    }
                }
                let out = &mut own[r * k..(r + 1) * k];
                for m in 0..k {
                    out[m] = -g[m] / nf + pull[m] / (hv * xj[m]);
                }
            }
            (own, acc)
        })
        .collect();

    let mut grad = Array2::<f64>::zeros((n, k));
    let gs = grad.as_slice_mut().expect("standard layout");
    let mut a = vec![0.0; n];
    let mut b = vec![0.0; n * k];
    for (c, (own, acc)) in chunks.into_iter().enumerate() {
        let start = c * CHUNK * k;
        gs[start..start + own.len()].copy_from_slice(&own);
        a.iter_mut().zip(&acc.a).for_each(|(x, y)| *x += y);
        b.iter_mut().zip(&acc.b).for_each(|(x, y)| *x += y);
    }
    let inv_h = 1.0 / hv;
    for i in 0..n {
        let xi = &flat[i * k..(i + 1) * k];
        let alpha_sum: f64 = xi.iter().map(|v| v * inv_h + 1.0).sum();
        let psi_sum = digamma(alpha_sum);
        for m in 0..k {
            let d = psi_sum - digamma(xi[m] * inv_h + 1.0);
            gs[i * k + m] += (a[i] * d + b[i * k + m]) * inv_h;
        }
    }
    Ok(grad)
}

/// Gradient of the plain canonical estimate with respect to the clamped prediction
/// coordinates, each treated as a free variable.
pub fn grad_ece_kde_canonical(ds: &LabeledDataset, cfg: &KdeConfig) -> Result<Array2<f64>> {
    cfg.validate()?;
    if cfg.debias != Debias::None {
        return Err(Error::InvalidConfig("gradients are available for the plain estimator only".into()));
    }
    let ds_c = ds.clamped(cfg.clamp_eps);
    grad_canonical_objective(ds_c.points(), ds.labels(), cfg.h, cfg.p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::canonical_objective;
    use crate::simplex::{sample_labels, sample_uniform_simplex, RngSeed};

    fn bw(h: f64) -> Bandwidth {
        Bandwidth::new(h).unwrap()
    }

    /// Uniform simplex points shrunk 10% toward the barycenter, so every coordinate
    /// is far from the boundary relative to the difference step.
    fn random(n: usize, k: usize, seed: u64) -> (Array2<f64>, Vec<usize>) {
        let pts = sample_uniform_simplex(k, n, RngSeed(seed)).unwrap();
        let labels: Vec<usize> = sample_labels(&pts, RngSeed(seed + 1)).unwrap().iter().map(|l| l.0).collect();
        let flat: Vec<f64> = pts.iter().flat_map(|p| p.coords().iter().map(|&v| 0.9 * v + 0.1 / k as f64)).collect();
        (Array2::from_shape_vec((n, k), flat).unwrap(), labels)
    }

    #[test]
    fn matches_central_differences() {
        let (x, labels) = random(64, 3, 7);
        let h = bw(0.3);
        let g = grad_canonical_objective(&x, &labels, h, 2.0).unwrap();
        let step = 1e-5;
        let mut worst: f64 = 0.0;
        for i in (0..64).step_by(5) {
            for m in 0..3 {
                let mut up = x.clone();
                up[[i, m]] += step;
                let mut dn = x.clone();
                dn[[i, m]] -= step;
                let fd = (canonical_objective(&up, &labels, h, 2.0).unwrap()
                    - canonical_objective(&dn, &labels, h, 2.0).unwrap())
                    / (2.0 * step);
                let rel = (fd - g[[i, m]]).abs() / g[[i, m]].abs().max(1e-3);
                worst = worst.max(rel);
            }
        }
        assert!(worst < 1e-5, "worst relative error {worst}");
    }

    #[test]
    fn two_point_identical_centers() {
        // Two identical centers: each conditional is the other label, so only the
        // direct term survives: d/dx_jk of (1/2) sum_k (e_other - x_j)^2.
        let x = Array2::from_shape_vec((2, 2), vec![0.4, 0.6, 0.4, 0.6]).unwrap();
        let labels = [0, 1];
        let g = grad_canonical_objective(&x, &labels, bw(0.5), 2.0).unwrap();
        let expected = [[-(0.0 - 0.4), -(1.0 - 0.6)], [-(1.0 - 0.4), -(0.0 - 0.6)]];
        for j in 0..2 {
            for m in 0..2 {
                assert!((g[[j, m]] - expected[j][m]).abs() < 1e-12, "{j},{m}: {}", g[[j, m]]);
            }
        }
    }

    #[test]
    fn rejects_other_norms() {
        let (x, labels) = random(5, 3, 1);
        assert!(matches!(grad_canonical_objective(&x, &labels, bw(0.3), 3.0), Err(Error::UnsupportedNorm(_))));
    }
}
