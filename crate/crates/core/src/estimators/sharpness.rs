use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{CalibrationEstimate, ClassSums, EstimateKind, KdeConfig};
use crate::debias::{debiased_square, DEGENERATE_EPS};
use crate::error::{Error, Result};
use crate::kernels::{Bandwidth, KernelTable};
use crate::simplex::{LabeledDataset, CLAMP_EPS};

/// Estimator of `E[y | f]^2` at a single location.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SharpnessMode {
    /// Ratio of the square-of-mean U-statistics.
    Partial,
    /// The same ratio with the squared-means bias correction.
    SecondOrder,
}

fn check_binary(ds: &LabeledDataset) -> Result<()> {
    if ds.num_classes() != 2 {
        return Err(Error::NotBinary(ds.num_classes()));
    }
    if ds.len() < 3 {
        return Err(Error::TooFewPoints { needed: 3, got: ds.len() });
    }
    Ok(())
}

/// `((sum k y)^2 - sum (k y)^2) / ((sum k)^2 - sum k^2)`, falling back to the squared
/// plain ratio when the denominator vanishes.
fn partial_ratio(s: &ClassSums) -> f64 {
    let pos = s.class[1];
    let den = s.total[0] * s.total[0] - s.total[1];
    if den <= DEGENERATE_EPS {
        let r = pos[0] / s.total[0];
        return r * r;
    }
    (pos[0] * pos[0] - pos[1]) / den
}

fn ratio(s: &ClassSums, mode: SharpnessMode) -> f64 {
    match mode {
        SharpnessMode::Partial => partial_ratio(s),
        SharpnessMode::SecondOrder => debiased_square(s.total, s.class[1], s.count),
    }
}

/// Leave-one-out estimate of `E[E[y | f]^2]` for binary data, `y = 1` the positive class.
pub fn sharpness_partial(ds: &LabeledDataset, h: Bandwidth) -> Result<CalibrationEstimate> {
    check_binary(ds)?;
    let ds_c = ds.clamped(CLAMP_EPS);
    let table = KernelTable::for_dataset(&ds_c, h)?;
    let n = ds.len();
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map_init(
            || vec![0.0; n],
            |buf, j| -> Result<f64> {
                table.row(j, buf);
                Ok(partial_ratio(&ClassSums::from_log_weights(buf, ds.labels(), 2, Some(j), true)?))
            },
        )
        .collect::<Result<_>>()?;
    let value = rows.iter().sum::<f64>() / n as f64;
    Ok(CalibrationEstimate::kde(value, EstimateKind::Sharpness, KdeConfig::new(h, 2.0), ds))
}

/// The sharpness ratio at one positive-class probability `point`, over the whole dataset.
pub fn sharpness_at(point: f64, ds: &LabeledDataset, h: Bandwidth, mode: SharpnessMode) -> Result<f64> {
    if !(point > 0.0 && point < 1.0) {
        return Err(Error::BoundaryInput(point));
    }
    check_binary(ds)?;
    let ds_c = ds.clamped(CLAMP_EPS);
    let table = KernelTable::for_dataset(&ds_c, h)?;
    let mut buf = vec![0.0; ds.len()];
    table.row_at(&[(1.0 - point).ln(), point.ln()], &mut buf);
    Ok(ratio(&ClassSums::from_log_weights(&buf, ds.labels(), 2, None, true)?, mode))
}

/// [`sharpness_at`] from precomputed weight sums; used by the large-sample reference.
pub(crate) fn sharpness_from_sums(total: [f64; 3], positive: [f64; 3], count: usize, mode: SharpnessMode) -> f64 {
    let s = ClassSums { total, class: vec![[0.0; 3], positive], count };
    ratio(&s, mode)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bw(h: f64) -> Bandwidth {
        Bandwidth::new(h).unwrap()
    }

    fn binary(rows: &[f64], labels: &[usize]) -> LabeledDataset {
        let r: Vec<Vec<f64>> = rows.iter().map(|&v| vec![1.0 - v, v]).collect();
        LabeledDataset::from_rows(&r, labels).unwrap()
    }

    #[test]
    fn all_positive_and_all_negative() {
        let f = [0.1, 0.4, 0.35, 0.8, 0.9, 0.2, 0.66];
        let ones = binary(&f, &[1; 7]);
        let zeros = binary(&f, &[0; 7]);
        assert_eq!(sharpness_partial(&ones, bw(0.3)).unwrap().value, 1.0);
        assert_eq!(sharpness_partial(&zeros, bw(0.3)).unwrap().value, 0.0);
        for mode in [SharpnessMode::Partial, SharpnessMode::SecondOrder] {
            for x in [0.05, 0.17, 0.5, 0.93] {
                assert_eq!(sharpness_at(x, &ones, bw(0.5), mode).unwrap(), 1.0);
                assert_eq!(sharpness_at(x, &zeros, bw(0.5), mode).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn errors() {
        let three = LabeledDataset::from_rows(&vec![vec![0.2, 0.3, 0.5]; 4], &[0; 4]).unwrap();
        assert!(matches!(sharpness_partial(&three, bw(0.3)), Err(Error::NotBinary(3))));
        let two = binary(&[0.2, 0.4], &[0, 1]);
        assert!(matches!(sharpness_partial(&two, bw(0.3)), Err(Error::TooFewPoints { .. })));
        let ok = binary(&[0.2, 0.4, 0.5], &[0, 1, 1]);
        assert!(matches!(sharpness_at(1.0, &ok, bw(0.3), SharpnessMode::Partial), Err(Error::BoundaryInput(_))));
    }

    #[test]
    fn constant_scores_reduce_to_unbiased_square_of_label_mean() {
        for y in [&[1, 0, 1, 1, 0, 0, 1, 1][..], &[1, 0, 1, 1]] {
            let n = y.len() as f64;
            let ds = binary(&vec![0.4; y.len()], y);
            let s: f64 = y.iter().map(|&v| v as f64).sum();
            let expected = (s * s - s) / (n * (n - 1.0));
            for mode in [SharpnessMode::Partial, SharpnessMode::SecondOrder] {
                let got = sharpness_at(0.17, &ds, bw(0.5), mode).unwrap();
                assert!((got - expected).abs() < 1e-14, "n {n} {mode:?}: {got} vs {expected}");
            }
        }
    }
}
