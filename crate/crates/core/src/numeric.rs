//! Small numeric helpers shared across modules.

pub use statrs::function::gamma::{digamma, ln_gamma};

/// `ln(sum_i exp(v_i))`, shifted by the maximum. Empty input gives `-inf`.
pub fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    if m == f64::INFINITY {
        return m;
    }
    m + v.iter().map(|&x| (x - m).exp()).sum::<f64>().ln()
}

/// `sum_k |a_k - b_k|^p`, with integer fast paths for `p = 1, 2`.
pub fn lp_pow(a: &[f64], b: &[f64], p: f64) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| abs_pow(x - y, p)).sum()
}

#[inline]
pub fn abs_pow(d: f64, p: f64) -> f64 {
    if p == 1.0 {
        d.abs()
    } else if p == 2.0 {
        d * d
    } else {
        d.abs().powf(p)
    }
}

/// Derivative of `|d|^p` with respect to `d`; zero at `d = 0`.
#[inline]
pub fn abs_pow_deriv(d: f64, p: f64) -> f64 {
    if p == 1.0 {
        if d > 0.0 {
            1.0
        } else if d < 0.0 {
            -1.0
        } else {
            0.0
        }
    } else if p == 2.0 {
        2.0 * d
    } else {
        p * d.abs().powf(p - 1.0) * d.signum()
    }
}
