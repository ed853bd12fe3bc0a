use ndarray::Array2;
use rayon::prelude::*;

use super::{loo_mean_error, sharpness_partial, CalibrationEstimate, ClassSums, EstimateKind, KdeConfig, RegularizationWeights};
use crate::error::{Error, Result};
use crate::kernels::{Bandwidth, KernelTable};
use crate::simplex::{clamp_interior, LabeledDataset, SimplexPoint, CLAMP_EPS};

/// Kernel estimate of `E[y | f = at]`: the kernel-weighted average of one-hot labels,
/// optionally leaving out point `exclude`.
///
/// Dataset points and `at` are clamped into the interior before evaluation.
pub fn cond_expectation(
    at: &SimplexPoint,
    ds: &LabeledDataset,
    h: Bandwidth,
    exclude: Option<usize>,
) -> Result<Vec<f64>> {
    let k = ds.num_classes();
    if at.dim() != k {
        return Err(Error::DimensionMismatch { expected: k, got: at.dim() });
    }
    let needed = 1 + usize::from(exclude.is_some());
    if ds.len() < needed {
        return Err(Error::TooFewPoints { needed, got: ds.len() });
    }
    if let Some(e) = exclude {
        if e >= ds.len() {
            return Err(Error::InvalidConfig(format!("exclude index {e} out of range for {} points", ds.len())));
        }
    }
    let ds = ds.clamped(CLAMP_EPS);
    let mut at = at.coords().to_vec();
    clamp_interior(&mut at, CLAMP_EPS);
    let table = KernelTable::for_dataset(&ds, h)?;
    let log_at: Vec<f64> = at.iter().map(|v| v.ln()).collect();
    let mut buf = vec![0.0; ds.len()];
    table.row_at(&log_at, &mut buf);
    Ok(ClassSums::from_log_weights(&buf, ds.labels(), k, exclude, false)?.plain())
}

/// Leave-one-out conditional expectation at every dataset point, one row per point.
pub fn loo_conditionals(ds: &LabeledDataset, h: Bandwidth) -> Result<Array2<f64>> {
    let n = ds.len();
    if n < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: n });
    }
    let k = ds.num_classes();
    let table = KernelTable::for_dataset(&ds.clamped(CLAMP_EPS), h)?;
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map_init(
            || vec![0.0; n],
            |buf, j| -> Result<Vec<f64>> {
                table.row(j, buf);
                Ok(ClassSums::from_log_weights(buf, ds.labels(), k, Some(j), false)?.plain())
            },
        )
        .collect::<Result<_>>()?;
    Ok(Array2::from_shape_vec((n, k), rows.concat()).expect("n rows of k values"))
}

/// Leave-one-out canonical estimate of `CE_p^p` with a Dirichlet kernel.
pub fn ece_kde_canonical(ds: &LabeledDataset, cfg: &KdeConfig) -> Result<CalibrationEstimate> {
    cfg.validate()?;
    if ds.len() < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: ds.len() });
    }
    let ds_c = ds.clamped(cfg.clamp_eps);
    let table = KernelTable::for_dataset(&ds_c, cfg.h)?;
    let k = ds.num_classes();
    let value = loo_mean_error(&table, ds.labels(), k, 0..k, cfg.p, cfg.debias, |j, f| {
        f.copy_from_slice(ds_c.row(j))
    })?;
    Ok(CalibrationEstimate::kde(value, EstimateKind::Canonical, *cfg, ds))
}

/// The plain canonical estimator evaluated on raw coordinates with no clamping or
/// renormalization, so each coordinate can be perturbed independently.
///
/// Every coordinate must lie in `(0, 1)`.
pub fn canonical_objective(points: &Array2<f64>, labels: &[usize], h: Bandwidth, p: f64) -> Result<f64> {
    let (n, k) = points.dim();
    check_raw(n, k, labels)?;
    let flat = points.as_standard_layout();
    let flat = flat.as_slice().expect("standard layout");
    let table = KernelTable::new(flat, k, h)?;
    loo_mean_error(&table, labels, k, 0..k, p, super::Debias::None, |j, f| {
        f.copy_from_slice(&flat[j * k..(j + 1) * k])
    })
}

pub(super) fn check_raw(n: usize, k: usize, labels: &[usize]) -> Result<()> {
    if labels.len() != n {
        return Err(Error::LengthMismatch { left: n, right: labels.len() });
    }
    if n < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: n });
    }
    if let Some(&label) = labels.iter().find(|&&l| l >= k) {
        return Err(Error::IndexOutOfRange { label, classes: k });
    }
    Ok(())
}

/// `MSE + gamma * sharpness` for binary data, where MSE uses the positive-class
/// probability and `y in {0, 1}`. Minimizing it is equivalent to minimizing
/// `MSE + lambda CE_2^2`.
pub fn mse_ce_objective(ds: &LabeledDataset, h: Bandwidth, w: &RegularizationWeights) -> Result<f64> {
    if ds.num_classes() != 2 {
        return Err(Error::NotBinary(ds.num_classes()));
    }
    let mse = (0..ds.len())
        .map(|i| {
            let d = ds.row(i)[1] - ds.labels()[i] as f64;
            d * d
        })
        .sum::<f64>()
        / ds.len() as f64;
    if w.gamma == 0.0 {
        return Ok(mse);
    }
    Ok(mse + w.gamma * sharpness_partial(ds, h)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::Debias;
    use crate::kernels::log_dirichlet_kernel;
    use crate::simplex::{one_hot, Label};

    fn bw(h: f64) -> Bandwidth {
        Bandwidth::new(h).unwrap()
    }

    #[test]
    fn single_point_returns_its_label() {
        let ds = LabeledDataset::from_rows(&[vec![0.2, 0.5, 0.3]], &[2]).unwrap();
        for h in [0.01, 1.0, 50.0] {
            let at = SimplexPoint::new(vec![0.9, 0.05, 0.05]).unwrap();
            assert_eq!(cond_expectation(&at, &ds, bw(h), None).unwrap(), one_hot(Label(2), 3).unwrap());
        }
    }

    #[test]
    fn single_class_returns_basis_vector() {
        let ds = LabeledDataset::from_rows(&[vec![0.2, 0.8], vec![0.6, 0.4], vec![0.5, 0.5]], &[1, 1, 1]).unwrap();
        let at = SimplexPoint::new(vec![0.3, 0.7]).unwrap();
        assert_eq!(cond_expectation(&at, &ds, bw(0.4), Some(1)).unwrap(), vec![0.0, 1.0]);
    }

    #[test]
    fn two_point_weighted_average() {
        let rows = [vec![0.3, 0.7], vec![0.6, 0.4]];
        let ds = LabeledDataset::from_rows(&rows, &[1, 0]).unwrap();
        let at = SimplexPoint::new(vec![0.5, 0.5]).unwrap();
        let got = cond_expectation(&at, &ds, bw(0.5), None).unwrap();
        let k1 = log_dirichlet_kernel(&at, &SimplexPoint::new(rows[0].clone()).unwrap(), bw(0.5)).unwrap().exp();
        let k2 = log_dirichlet_kernel(&at, &SimplexPoint::new(rows[1].clone()).unwrap(), bw(0.5)).unwrap().exp();
        let w1 = k1 / (k1 + k2);
        assert!((got[1] - w1).abs() < 1e-14);
        assert!((got[0] - (1.0 - w1)).abs() < 1e-14);
    }

    #[test]
    fn cond_expectation_errors() {
        let ds = LabeledDataset::from_rows(&[vec![0.2, 0.8]], &[0]).unwrap();
        let at = SimplexPoint::new(vec![0.3, 0.7]).unwrap();
        assert!(matches!(cond_expectation(&at, &ds, bw(0.4), Some(0)), Err(Error::TooFewPoints { .. })));
        let bad = SimplexPoint::new(vec![0.3, 0.3, 0.4]).unwrap();
        assert!(matches!(cond_expectation(&bad, &ds, bw(0.4), None), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn canonical_hand_cases() {
        let ds = LabeledDataset::from_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]], &[0, 1]).unwrap();
        let est = ece_kde_canonical(&ds, &KdeConfig::new(bw(0.3), 1.0)).unwrap();
        assert_eq!(est.value, 1.0);

        let rows: Vec<Vec<f64>> = (0..6).map(|_| vec![1.0, 0.0, 0.0]).collect();
        let ds = LabeledDataset::from_rows(&rows, &[0; 6]).unwrap();
        let est = ece_kde_canonical(&ds, &KdeConfig::new(bw(0.1), 1.0)).unwrap();
        assert!(est.value < 1e-6);
    }

    #[test]
    fn canonical_config_errors() {
        let ds = LabeledDataset::from_rows(&[vec![0.5, 0.5]], &[0]).unwrap();
        assert!(matches!(ece_kde_canonical(&ds, &KdeConfig::new(bw(0.3), 1.0)), Err(Error::TooFewPoints { .. })));
        let ds = LabeledDataset::from_rows(&[vec![0.5, 0.5], vec![0.2, 0.8]], &[0, 1]).unwrap();
        let cfg = KdeConfig::new(bw(0.3), 0.5);
        assert!(matches!(ece_kde_canonical(&ds, &cfg), Err(Error::InvalidConfig(_))));
        let cfg = KdeConfig::new(bw(0.3), 1.0).with_debias(Debias::SecondOrder);
        assert!(matches!(ece_kde_canonical(&ds, &cfg), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn raw_objective_matches_estimator_on_interior_points() {
        let rows = [vec![0.2, 0.5, 0.3], vec![0.6, 0.1, 0.3], vec![0.3, 0.3, 0.4], vec![0.1, 0.1, 0.8]];
        let labels = [0, 1, 2, 2];
        let ds = LabeledDataset::from_rows(&rows, &labels).unwrap();
        let est = ece_kde_canonical(&ds, &KdeConfig::new(bw(0.2), 2.0)).unwrap();
        let raw = canonical_objective(ds.points(), &labels, bw(0.2), 2.0).unwrap();
        assert!((est.value - raw).abs() < 1e-14);
    }

    #[test]
    fn objective_with_zero_gamma_is_mse() {
        let ds = LabeledDataset::from_rows(&[vec![0.5, 0.5], vec![0.2, 0.8], vec![0.9, 0.1]], &[0, 1, 1]).unwrap();
        let w = RegularizationWeights::from_lambda(0.0).unwrap();
        let v = mse_ce_objective(&ds, bw(0.3), &w).unwrap();
        assert!((v - (0.25 + 0.04 + 0.81) / 3.0).abs() < 1e-15);
    }

    #[test]
    fn objective_for_sharp_correct_predictor() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| if i % 2 == 0 { vec![0.0, 1.0] } else { vec![1.0, 0.0] }).collect();
        let labels: Vec<usize> = (0..10).map(|i| usize::from(i % 2 == 0)).collect();
        let ds = LabeledDataset::from_rows(&rows, &labels).unwrap();
        let w = RegularizationWeights::from_lambda(1.0).unwrap();
        let v = mse_ce_objective(&ds, bw(0.1), &w).unwrap();
        // sharpness is E[E[y|f]^2] = P(y = 1) = 1/2 for this balanced set
        assert!((v - 0.5 * 0.5).abs() < 1e-6, "{v}");
        let ones = LabeledDataset::from_rows(&vec![vec![0.0, 1.0]; 8], &[1; 8]).unwrap();
        let v = mse_ce_objective(&ones, bw(0.1), &w).unwrap();
        assert!((v - 0.5).abs() < 1e-12, "{v}");
        let three = LabeledDataset::from_rows(&[vec![0.2, 0.3, 0.5]], &[0]).unwrap();
        assert!(matches!(mse_ce_objective(&three, bw(0.1), &w), Err(Error::NotBinary(3))));
    }
}
