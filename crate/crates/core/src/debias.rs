//! Geometric-series bias correction for ratio estimators.
//!
//! Two schemes are provided:
//!
//! * [`debias_ratio_means`] corrects `mean(Y) / mean(X)` for its `O(1/n)` and
//!   `O(1/n^2)` bias terms, with the inner `O(1/n)` ratios `r_a = Cov(X,Y)/(mu_X mu_Y)`
//!   and `r_b = Var(X)/mu_X^2` themselves corrected once (`r_a*`, `r_b*`).
//! * [`debias_ratio_squared_means`] corrects the ratio of the unbiased
//!   square-of-mean U-statistics `U(Y^2) / U(X^2)` using six correction terms
//!   (labelled `a` through `f`).
//!
//! Every plug-in moment uses the population (`1/n`) normalizer. Each correction
//! is written as a difference of the same expression evaluated with `Y` and with
//! `X` in the second slot, so `X = Y` cancels exactly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::ClassSums;
use crate::kernels::{Bandwidth, KernelTable};
use crate::simplex::{clamp_interior, LabeledDataset, SimplexPoint, CLAMP_EPS};

/// Denominator statistics below this magnitude are treated as degenerate.
pub const DEGENERATE_EPS: f64 = 1e-12;

/// Plug-in sample moments of paired observations `(X_i, Y_i)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSet {
    pub n: usize,
    pub mu_x: f64,
    pub mu_y: f64,
    pub var_x: f64,
    pub var_y: f64,
    pub cov_xy: f64,
    /// `Cov(X^2, Y)`
    pub cov_x2_y: f64,
    /// `Cov(Y^2, X)`
    pub cov_y2_x: f64,
    /// `Cov(X^2, X)`
    pub cov_x2_x: f64,
}

/// Raw power sums from which a [`MomentSet`] and the square-of-mean U-statistics follow.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PowerSums {
    pub n: usize,
    pub x: f64,
    pub y: f64,
    pub xx: f64,
    pub yy: f64,
    pub xy: f64,
    pub xxx: f64,
    pub xxy: f64,
    pub yyx: f64,
}

impl PowerSums {
    pub fn from_slices(x: &[f64], y: &[f64]) -> Self {
        let mut s = PowerSums { n: x.len(), ..Default::default() };
        for (&a, &b) in x.iter().zip(y) {
            s.x += a;
            s.y += b;
            s.xx += a * a;
            s.yy += b * b;
            s.xy += a * b;
            s.xxx += a * a * a;
            s.xxy += a * a * b;
            s.yyx += b * b * a;
        }
        s
    }

    /// Sums for `X = w` and `Y = w * 1[class]`, given sums of `w, w^2, w^3`
    /// over all points and over the points of the class.
    pub fn from_indicator(all: [f64; 3], class: [f64; 3], n: usize) -> Self {
        PowerSums {
            n,
            x: all[0],
            y: class[0],
            xx: all[1],
            yy: class[1],
            xy: class[1],
            xxx: all[2],
            xxy: class[2],
            yyx: class[2],
        }
    }

    pub fn moments(&self) -> MomentSet {
        let nf = self.n as f64;
        let mu_x = self.x / nf;
        let mu_y = self.y / nf;
        let m_xx = self.xx / nf;
        let m_yy = self.yy / nf;
        let cov = |m_ab: f64, m_a: f64, m_b: f64| m_ab - m_a * m_b;
        MomentSet {
            n: self.n,
            mu_x,
            mu_y,
            var_x: cov(m_xx, mu_x, mu_x),
            var_y: cov(m_yy, mu_y, mu_y),
            cov_xy: cov(self.xy / nf, mu_x, mu_y),
            cov_x2_y: cov(self.xxy / nf, m_xx, mu_y),
            cov_y2_x: cov(self.yyx / nf, m_yy, mu_x),
            cov_x2_x: cov(self.xxx / nf, m_xx, mu_x),
        }
    }

    /// `sum_{i != j} X_i X_j / (n (n - 1))`
    pub fn u_square_x(&self) -> f64 {
        u_square(self.x, self.xx, self.n)
    }

    /// `sum_{i != j} Y_i Y_j / (n (n - 1))`
    pub fn u_square_y(&self) -> f64 {
        u_square(self.y, self.yy, self.n)
    }
}

fn u_square(s1: f64, s2: f64, n: usize) -> f64 {
    let nf = n as f64;
    (s1 * s1 - s2) / (nf * (nf - 1.0))
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Two-pass population covariance; symmetric in its arguments bit for bit.
fn cov(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    a.iter().zip(b).map(|(&x, &y)| (x - ma) * (y - mb)).sum::<f64>() / a.len() as f64
}

/// Plug-in moments of `(X, Y)` using two-pass centered accumulation.
pub fn compute_moments(x: &[f64], y: &[f64]) -> Result<MomentSet> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch { left: x.len(), right: y.len() });
    }
    if x.len() < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: x.len() });
    }
    let x2: Vec<f64> = x.iter().map(|v| v * v).collect();
    let y2: Vec<f64> = y.iter().map(|v| v * v).collect();
    Ok(MomentSet {
        n: x.len(),
        mu_x: mean(x),
        mu_y: mean(y),
        var_x: cov(x, x),
        var_y: cov(y, y),
        cov_xy: cov(x, y),
        cov_x2_y: cov(&x2, y),
        cov_y2_x: cov(&y2, x),
        cov_x2_x: cov(&x2, x),
    })
}

/// Outcome of a ratio correction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DebiasReport {
    pub raw_ratio: f64,
    pub corrected_ratio: f64,
    /// Named additive pieces of the correction; see each scheme for the labels.
    pub correction_terms: Vec<(String, f64)>,
    /// Set when a denominator statistic was degenerate and the raw ratio was returned.
    pub degenerate: bool,
}

impl DebiasReport {
    fn passthrough(raw: f64) -> Self {
        DebiasReport { raw_ratio: raw, corrected_ratio: raw, correction_terms: Vec::new(), degenerate: true }
    }

    pub fn term(&self, name: &str) -> Option<f64> {
        self.correction_terms.iter().find(|(k, _)| k == name).map(|&(_, v)| v)
    }
}

/// Moments of `X` against a second variable `Z`, which is either `Y` or `X` itself.
#[derive(Clone, Copy)]
struct Slot {
    mu_z: f64,
    var_z: f64,
    cov_xz: f64,
    cov_x2_z: f64,
    cov_z2_x: f64,
}

impl MomentSet {
    fn slot_y(&self) -> Slot {
        Slot {
            mu_z: self.mu_y,
            var_z: self.var_y,
            cov_xz: self.cov_xy,
            cov_x2_z: self.cov_x2_y,
            cov_z2_x: self.cov_y2_x,
        }
    }

    fn slot_x(&self) -> Slot {
        Slot {
            mu_z: self.mu_x,
            var_z: self.var_x,
            cov_xz: self.var_x,
            cov_x2_z: self.cov_x2_x,
            cov_z2_x: self.cov_x2_x,
        }
    }

    /// `Cov(X, Z) / (mu_X mu_Z)`: `r_a` for `Z = Y`, `r_b` for `Z = X`.
    fn ratio(&self, z: Slot) -> f64 {
        z.cov_xz / (self.mu_x * z.mu_z)
    }

    /// Once-corrected `r_a*` (`Z = Y`) or `r_b*` (`Z = X`).
    ///
    /// `r (1 + (T / (Cov mu_X mu_Z) - 4) / (n-1) - (Var X/mu_X^2 + Var Z/mu_Z^2 + 2 r) / (n-1))`
    /// with `T = mu_Z Cov(X^2, Z) + mu_X Cov(Z^2, X)`, expanded so that a zero
    /// covariance does not divide by zero.
    fn ratio_star(&self, z: Slot) -> f64 {
        let r = self.ratio(z);
        let nm1 = self.n as f64 - 1.0;
        let mm = self.mu_x * z.mu_z;
        let t = (z.mu_z * z.cov_x2_z + self.mu_x * z.cov_z2_x) / (mm * mm);
        let spread = self.var_x / (self.mu_x * self.mu_x) + z.var_z / (z.mu_z * z.mu_z) + 2.0 * r;
        r + (t - 4.0 * r - r * spread) / nm1
    }

    /// `(Cov(X^2, Z) - 2 mu_X Cov(X, Z)) / (mu_X^2 mu_Z)`
    fn skew_term(&self, z: Slot) -> f64 {
        (z.cov_x2_z - 2.0 * self.mu_x * z.cov_xz) / (self.mu_x * self.mu_x * z.mu_z)
    }

    /// `3 Var(X) Cov(X, Z) / (mu_X^3 mu_Z)`
    fn kurt_term(&self, z: Slot) -> f64 {
        3.0 * self.var_x * z.cov_xz / (self.mu_x * self.mu_x * self.mu_x * z.mu_z)
    }

    /// `Cov(X, Z)^2 / (mu_X^2 mu_Z^2)`
    fn sq_ratio(&self, z: Slot) -> f64 {
        let r = self.ratio(z);
        r * r
    }

    /// `Cov(X^2, Z) / (mu_X^2 mu_Z) + c Cov(X, Z) (Var X + mu_X^2) / (mu_X^3 mu_Z)`
    fn mixed_term(&self, z: Slot, c: f64) -> f64 {
        let mx2 = self.mu_x * self.mu_x;
        z.cov_x2_z / (mx2 * z.mu_z) + c * z.cov_xz * (self.var_x + mx2) / (mx2 * self.mu_x * z.mu_z)
    }
}

/// Applies the ratio-of-means correction to precomputed moments.
pub fn ratio_means_from_moments(m: &MomentSet) -> Result<DebiasReport> {
    if m.n < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: m.n });
    }
    if m.mu_x.abs() <= DEGENERATE_EPS {
        return Err(Error::DegenerateDenominator(m.mu_x));
    }
    let raw = m.mu_y / m.mu_x;
    if m.mu_y == 0.0 {
        return Ok(DebiasReport { degenerate: false, ..DebiasReport::passthrough(raw) });
    }
    let n = m.n as f64;
    let (ys, xs) = (m.slot_y(), m.slot_x());
    let ra = m.ratio_star(ys);
    let rb = m.ratio_star(xs);
    let first = -(rb - ra) / n;
    let bracket = (m.skew_term(ys) - m.skew_term(xs)) - (m.kurt_term(ys) - m.kurt_term(xs));
    let second = -bracket / (n * n);
    Ok(DebiasReport {
        raw_ratio: raw,
        corrected_ratio: raw * (1.0 + first + second),
        correction_terms: vec![
            ("r_a*".into(), ra),
            ("r_b*".into(), rb),
            ("first_order".into(), first),
            ("second_order".into(), second),
        ],
        degenerate: false,
    })
}

/// Bias-corrected estimate of `mu_Y / mu_X` from paired samples.
///
/// Correction terms: `r_a*`, `r_b*`, and the additive bracket pieces
/// `first_order = -(r_b* - r_a*)/n` and `second_order`.
pub fn debias_ratio_means(x: &[f64], y: &[f64]) -> Result<DebiasReport> {
    let m = compute_moments(x, y)?;
    ratio_means_from_moments(&m)
}

/// Applies the squared-means correction given moments and the two U-statistics.
pub fn ratio_squared_means_from_parts(m: &MomentSet, u_x2: f64, u_y2: f64) -> Result<DebiasReport> {
    if m.n < 6 {
        return Err(Error::TooFewPoints { needed: 6, got: m.n });
    }
    if u_x2.abs() <= DEGENERATE_EPS || m.mu_x.abs() <= DEGENERATE_EPS {
        return Err(Error::DegenerateDenominator(u_x2));
    }
    let raw = u_y2 / u_x2;
    if m.mu_y == 0.0 {
        return Ok(DebiasReport { degenerate: false, ..DebiasReport::passthrough(raw) });
    }
    let n = m.n as f64;
    let (ys, xs) = (m.slot_y(), m.slot_x());
    let ra = m.ratio_star(ys);
    let rb = m.ratio_star(xs);

    let c_a = 12.0 / (n * (n - 1.0));
    let c_c = 32.0 * (n - 2.0) / (n * (n - 1.0).powi(2));
    let c_c_rec = 4.0 * (n - 2.0) * (n - 3.0) / (n * (n - 1.0));
    let c_e = 24.0 * (n - 2.0) * (n - 3.0) * (n - 4.0) / (n * n * (n - 1.0).powi(3));
    let c_e_rec = (n - 2.0) * (n - 3.0) * (n - 4.0) * (n - 5.0) / (n * n * (n - 1.0).powi(2));

    // (a)/(b): 6 Cov(U_X2, U_Z2) / (mu_X^2 mu_Z^2)
    let var_term = |z: Slot, rs: f64| c_a * m.sq_ratio(z) + 24.0 / n * rs;
    // (c)/(d): 4 Cov(U_X2^2, U_Z2) / (mu_X^4 mu_Z^2)
    let cube_term = |z: Slot, rs: f64| {
        c_c * m.mixed_term(z, 2.0) + c_c_rec * (8.0 / n * rs + 12.0 / (n * (n - 1.0)) * m.sq_ratio(z))
    };
    // (e)/(f): Cov(U_X2^3, U_Z2) / (mu_X^6 mu_Z^2)
    let fourth_term = |z: Slot, rs: f64| {
        c_e * m.mixed_term(z, 4.0) + c_e_rec * (12.0 / n * rs + 30.0 / (n * (n - 1.0)) * m.sq_ratio(z))
    };

    let a = var_term(ys, ra);
    let b = -var_term(xs, rb);
    let c = -cube_term(ys, ra);
    let d = cube_term(xs, rb);
    let e = fourth_term(ys, ra);
    let f = -fourth_term(xs, rb);
    let total = (a + b) + (c + d) + (e + f);
    Ok(DebiasReport {
        raw_ratio: raw,
        corrected_ratio: raw * (1.0 + total),
        correction_terms: vec![
            ("r_a*".into(), ra),
            ("r_b*".into(), rb),
            ("a".into(), a),
            ("b".into(), b),
            ("c".into(), c),
            ("d".into(), d),
            ("e".into(), e),
            ("f".into(), f),
        ],
        degenerate: false,
    })
}

/// Bias-corrected estimate of `mu_Y^2 / mu_X^2` from paired samples.
///
/// The raw ratio is `U(Y^2) / U(X^2)` with `U(X^2) = sum_{i != j} X_i X_j / (n (n-1))`.
/// Correction terms: `r_a*`, `r_b*` and the signed bracket contributions `a` to `f`.
pub fn debias_ratio_squared_means(x: &[f64], y: &[f64]) -> Result<DebiasReport> {
    let m = compute_moments(x, y)?;
    let nm1 = (m.n - 1) as f64;
    ratio_squared_means_from_parts(&m, m.mu_x * m.mu_x - m.var_x / nm1, m.mu_y * m.mu_y - m.var_y / nm1)
}

/// Per-class first-order corrected ratios from kernel-weight sums, renormalized onto the simplex.
///
/// Falls back to the plain ratio for a class whose correction is degenerate.
pub(crate) fn debiased_conditional(sums: &ClassSums) -> Vec<f64> {
    let mut out: Vec<f64> = sums
        .class
        .iter()
        .map(|&cls| {
            let plain = cls[0] / sums.total[0];
            if sums.count < 2 {
                return plain;
            }
            let m = PowerSums::from_indicator(sums.total, cls, sums.count).moments();
            match ratio_means_from_moments(&m) {
                Ok(r) if r.corrected_ratio.is_finite() => r.corrected_ratio.max(0.0),
                _ => plain,
            }
        })
        .collect();
    let s: f64 = out.iter().sum();
    if s > 0.0 {
        out.iter_mut().for_each(|v| *v /= s);
    }
    out
}

/// Second-order corrected estimate of `E[1[y = k] | f]^2` from kernel-weight sums.
pub(crate) fn debiased_square(all: [f64; 3], class: [f64; 3], count: usize) -> f64 {
    let s = PowerSums::from_indicator(all, class, count);
    let plain = {
        let r = class[0] / all[0];
        r * r
    };
    let u_x2 = s.u_square_x();
    if u_x2.abs() <= DEGENERATE_EPS {
        return plain;
    }
    if count < 6 {
        return s.u_square_y() / u_x2;
    }
    match ratio_squared_means_from_parts(&s.moments(), u_x2, s.u_square_y()) {
        Ok(r) if r.corrected_ratio.is_finite() => r.corrected_ratio,
        _ => plain,
    }
}

/// Kernel estimate of `E[y | f = at]` with each class ratio bias-corrected, renormalized.
pub fn cond_expectation_debiased(at: &SimplexPoint, ds: &LabeledDataset, h: Bandwidth) -> Result<Vec<f64>> {
    let k = ds.num_classes();
    if at.dim() != k {
        return Err(Error::DimensionMismatch { expected: k, got: at.dim() });
    }
    let ds = ds.clamped(CLAMP_EPS);
    let mut at = at.coords().to_vec();
    clamp_interior(&mut at, CLAMP_EPS);
    let table = KernelTable::for_dataset(&ds, h)?;
    let log_at: Vec<f64> = at.iter().map(|v| v.ln()).collect();
    let mut buf = vec![0.0; ds.len()];
    table.row_at(&log_at, &mut buf);
    let sums = ClassSums::from_log_weights(&buf, ds.labels(), k, None, true)?;
    Ok(debiased_conditional(&sums))
}
