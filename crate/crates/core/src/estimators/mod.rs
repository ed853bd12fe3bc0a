//! Kernel estimators of calibration error and sharpness.

mod canonical;
mod gradient;
mod reductions;
mod sharpness;

pub use canonical::{canonical_objective, cond_expectation, ece_kde_canonical, loo_conditionals, mse_ce_objective};
pub use gradient::{grad_canonical_objective, grad_ece_kde_canonical};
pub use reductions::{ece_kde_marginal, ece_kde_toplabel};
pub use sharpness::{sharpness_at, sharpness_partial, SharpnessMode};
pub(crate) use sharpness::sharpness_from_sums;

use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::debias::{debiased_conditional, debiased_square};
use crate::error::{Error, Result};
use crate::kernels::{Bandwidth, KernelTable};
use crate::numeric::abs_pow;
use crate::simplex::{LabeledDataset, CLAMP_EPS};

/// Bias-correction level applied to the kernel conditional expectation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Debias {
    #[default]
    None,
    /// Ratio-of-means correction on each class ratio.
    FirstOrder,
    /// Squared-means correction on the quadratic part; `p = 2` only.
    SecondOrder,
}

/// Settings shared by every kernel estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KdeConfig {
    pub h: Bandwidth,
    pub p: f64,
    pub debias: Debias,
    pub clamp_eps: f64,
}

impl KdeConfig {
    pub fn new(h: Bandwidth, p: f64) -> Self {
        KdeConfig { h, p, debias: Debias::None, clamp_eps: CLAMP_EPS }
    }

    pub fn with_debias(mut self, debias: Debias) -> Self {
        self.debias = debias;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p.is_finite() && self.p >= 1.0) {
            return Err(Error::InvalidConfig(format!("p must be >= 1, got {}", self.p)));
        }
        if !(self.clamp_eps > 0.0 && self.clamp_eps <= 1e-3) {
            return Err(Error::InvalidConfig(format!("clamp_eps must lie in (0, 1e-3], got {}", self.clamp_eps)));
        }
        if self.debias == Debias::SecondOrder && self.p != 2.0 {
            return Err(Error::InvalidConfig("second-order debiasing requires p = 2".into()));
        }
        Ok(())
    }
}

/// Which calibration notion an estimate refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimateKind {
    Canonical,
    Marginal,
    TopLabel,
    Sharpness,
    Objective,
}

impl std::fmt::Display for EstimateKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EstimateKind::Canonical => "canonical",
            EstimateKind::Marginal => "marginal",
            EstimateKind::TopLabel => "toplabel",
            EstimateKind::Sharpness => "sharpness",
            EstimateKind::Objective => "objective",
        })
    }
}

/// Estimated `CE_p^p` together with the settings that produced it.
///
/// `config` is absent for histogram estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationEstimate {
    pub value: f64,
    pub kind: EstimateKind,
    pub p: f64,
    pub config: Option<KdeConfig>,
    pub n: usize,
    pub k: usize,
}

impl CalibrationEstimate {
    pub(crate) fn kde(value: f64, kind: EstimateKind, config: KdeConfig, ds: &LabeledDataset) -> Self {
        CalibrationEstimate { value, kind, p: config.p, config: Some(config), n: ds.len(), k: ds.num_classes() }
    }

    pub(crate) fn binned(value: f64, kind: EstimateKind, p: f64, ds: &LabeledDataset) -> Self {
        CalibrationEstimate { value, kind, p, config: None, n: ds.len(), k: ds.num_classes() }
    }

    /// `CE_p`, the `p`-th root of the estimate.
    pub fn root(&self) -> f64 {
        self.value.max(0.0).powf(1.0 / self.p)
    }
}

/// Weight `lambda` of `CE_2^2` in `MSE + lambda CE_2^2`, and the equivalent sharpness
/// weight `gamma = lambda / (1 + lambda)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularizationWeights {
    pub lambda: f64,
    pub gamma: f64,
}

impl RegularizationWeights {
    pub fn from_lambda(lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::InvalidConfig(format!("lambda must be >= 0, got {lambda}")));
        }
        Ok(RegularizationWeights { lambda, gamma: lambda / (1.0 + lambda) })
    }

    pub fn from_gamma(gamma: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::InvalidConfig(format!("gamma must lie in [0, 1), got {gamma}")));
        }
        Ok(RegularizationWeights { lambda: gamma / (1.0 - gamma), gamma })
    }
}

/// Sums of `w, w^2, w^3` over all included points and per class, where `w` are
/// kernel weights rescaled so the largest is 1.
#[derive(Debug, Clone)]
pub(crate) struct ClassSums {
    pub total: [f64; 3],
    pub class: Vec<[f64; 3]>,
    pub count: usize,
}

impl ClassSums {
    pub fn from_log_weights(
        log_w: &[f64],
        targets: &[usize],
        classes: usize,
        exclude: Option<usize>,
        powers: bool,
    ) -> Result<Self> {
        let included = log_w.len() - usize::from(exclude.is_some_and(|e| e < log_w.len()));
        if included == 0 {
            return Err(Error::TooFewPoints { needed: 1 + usize::from(exclude.is_some()), got: log_w.len() });
        }
        let max = log_w
            .iter()
            .enumerate()
            .filter(|&(i, _)| Some(i) != exclude)
            .fold(f64::NEG_INFINITY, |m, (_, &v)| m.max(v));
        let mut total = [0.0; 3];
        let mut class = vec![[0.0; 3]; classes];
        for (i, (&lw, &t)) in log_w.iter().zip(targets).enumerate() {
            if Some(i) == exclude {
                continue;
            }
            let w = (lw - max).exp();
            let c = &mut class[t];
            if powers {
                let w2 = w * w;
                let w3 = w2 * w;
                total[1] += w2;
                total[2] += w3;
                c[1] += w2;
                c[2] += w3;
            }
            total[0] += w;
            c[0] += w;
        }
        Ok(ClassSums { total, class, count: included })
    }

    pub fn plain(&self) -> Vec<f64> {
        self.class.iter().map(|c| c[0] / self.total[0]).collect()
    }
}

/// Mean over table points of the leave-one-out error `sum_{k in scored} |E_hat[t | x_j]_k - pred_jk|^p`,
/// where `pred(j, out)` writes the compared vector.
pub(crate) fn loo_mean_error<F>(
    table: &KernelTable,
    targets: &[usize],
    classes: usize,
    scored: Range<usize>,
    p: f64,
    debias: Debias,
    pred: F,
) -> Result<f64>
where
    F: Fn(usize, &mut [f64]) + Sync,
{
    let n = table.len();
    if n < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: n });
    }
    let powers = debias != Debias::None;
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map_init(
            || (vec![0.0; n], vec![0.0; classes]),
            |(buf, f), j| -> Result<f64> {
                table.row(j, buf);
                pred(j, f);
                let sums = ClassSums::from_log_weights(buf, targets, classes, Some(j), powers)?;
                Ok(row_error(&sums, f, scored.clone(), p, debias))
            },
        )
        .collect::<Result<_>>()?;
    let mean = rows.iter().sum::<f64>() / n as f64;
    Ok(if debias == Debias::SecondOrder { mean.max(0.0) } else { mean })
}

fn row_error(sums: &ClassSums, f: &[f64], scored: Range<usize>, p: f64, debias: Debias) -> f64 {
    let e = match debias {
        Debias::None => sums.plain(),
        _ => debiased_conditional(sums),
    };
    if debias == Debias::SecondOrder {
        return scored
            .map(|k| {
                let sq = debiased_square(sums.total, sums.class[k], sums.count);
                sq - 2.0 * e[k] * f[k] + f[k] * f[k]
            })
            .sum();
    }
    scored.map(|k| abs_pow(e[k] - f[k], p)).sum()
}
