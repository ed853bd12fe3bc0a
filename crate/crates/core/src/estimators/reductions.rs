use super::{loo_mean_error, CalibrationEstimate, EstimateKind, KdeConfig};
use crate::error::{Error, Result};
use crate::kernels::KernelTable;
use crate::simplex::{argmax, LabeledDataset};

/// Binary leave-one-out error of scalar scores against 0/1 targets with a Beta kernel.
fn binary_loo(scores: &[f64], targets: &[usize], cfg: &KdeConfig) -> Result<f64> {
    let table = KernelTable::for_scalars(scores, cfg.h)?;
    loo_mean_error(&table, targets, 2, 1..2, cfg.p, cfg.debias, |j, f| {
        f[0] = 1.0 - scores[j];
        f[1] = scores[j];
    })
}

fn clamp_score(v: f64, eps: f64) -> f64 {
    v.clamp(eps, 1.0 - eps)
}

fn check(ds: &LabeledDataset, cfg: &KdeConfig) -> Result<()> {
    cfg.validate()?;
    if ds.len() < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: ds.len() });
    }
    Ok(())
}

/// Top-label estimate: the confidence `c = max_k f_k` against the indicator that the
/// arg-max class (lowest index on ties) is the label.
pub fn ece_kde_toplabel(ds: &LabeledDataset, cfg: &KdeConfig) -> Result<CalibrationEstimate> {
    check(ds, cfg)?;
    let mut conf = Vec::with_capacity(ds.len());
    let mut hit = Vec::with_capacity(ds.len());
    for (i, &y) in ds.labels().iter().enumerate() {
        let row = ds.row(i);
        let top = argmax(row);
        conf.push(clamp_score(row[top], cfg.clamp_eps));
        hit.push(usize::from(top == y));
    }
    let value = binary_loo(&conf, &hit, cfg)?;
    Ok(CalibrationEstimate::kde(value, EstimateKind::TopLabel, *cfg, ds))
}

/// Marginal estimate: the one-vs-rest errors of every class coordinate, summed over classes.
pub fn ece_kde_marginal(ds: &LabeledDataset, cfg: &KdeConfig) -> Result<CalibrationEstimate> {
    check(ds, cfg)?;
    let k = ds.num_classes();
    let mut value = 0.0;
    let mut scores = vec![0.0; ds.len()];
    let mut hit = vec![0; ds.len()];
    for class in 0..k {
        for (i, &y) in ds.labels().iter().enumerate() {
            scores[i] = clamp_score(ds.row(i)[class], cfg.clamp_eps);
            hit[i] = usize::from(y == class);
        }
        value += binary_loo(&scores, &hit, cfg)?;
    }
    Ok(CalibrationEstimate::kde(value, EstimateKind::Marginal, *cfg, ds))
}
