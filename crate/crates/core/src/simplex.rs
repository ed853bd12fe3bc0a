//! Probability-simplex values, labeled datasets, seeded sampling and temperature scaling.

use ndarray::{Array2, ArrayView1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::log_sum_exp;

/// Default tolerance on `|sum - 1|` when validating simplex points.
pub const TOL_SIMPLEX: f64 = 1e-9;

/// Default clamping epsilon applied before any log or power transform.
pub const CLAMP_EPS: f64 = 1e-10;

/// A point on the probability simplex, typically a classifier's output vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplexPoint(Vec<f64>);

impl SimplexPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        validate_simplex(&coords, TOL_SIMPLEX)
    }

    pub(crate) fn from_vec_unchecked(coords: Vec<f64>) -> Self {
        Self(coords)
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Index of the largest coordinate; ties resolve to the lowest index.
    pub fn argmax(&self) -> usize {
        argmax(&self.0)
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for SimplexPoint {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// A class index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Label(pub usize);

impl Label {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Seed for every sampling routine. Equal seeds give bitwise-equal streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct RngSeed(pub u64);

impl RngSeed {
    /// ChaCha8 generator on stream 0.
    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }

    /// Independent generator for work unit `stream` derived from this seed.
    pub fn substream(self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.0);
        rng.set_stream(stream.wrapping_add(1));
        rng
    }

    /// A new seed derived from this one, for handing to nested routines.
    pub fn derive(self, salt: u64) -> RngSeed {
        RngSeed(splitmix64(self.0 ^ splitmix64(salt)))
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `n` classifier outputs with their observed labels, stored row-major as an `n x K` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    points: Array2<f64>,
    labels: Vec<usize>,
}

impl LabeledDataset {
    /// Validates every point at [`TOL_SIMPLEX`] and every label against `K`.
    pub fn new(points: Vec<SimplexPoint>, labels: Vec<Label>) -> Result<Self> {
        let labels: Vec<usize> = labels.into_iter().map(Label::index).collect();
        if points.is_empty() {
            return Err(Error::Empty);
        }
        if points.len() != labels.len() {
            return Err(Error::LengthMismatch { left: points.len(), right: labels.len() });
        }
        let k = points[0].dim();
        let mut flat = Vec::with_capacity(points.len() * k);
        for p in &points {
            if p.dim() != k {
                return Err(Error::DimensionMismatch { expected: k, got: p.dim() });
            }
            flat.extend_from_slice(p.coords());
        }
        let points = Array2::from_shape_vec((labels.len(), k), flat)
            .expect("shape matches flattened length");
        Self::from_array(points, labels, TOL_SIMPLEX)
    }

    /// Builds a dataset from an `n x K` matrix, validating each row at tolerance `tol`.
    pub fn from_array(points: Array2<f64>, labels: Vec<usize>, tol: f64) -> Result<Self> {
        let (n, k) = points.dim();
        if n == 0 || k == 0 {
            return Err(Error::Empty);
        }
        if labels.len() != n {
            return Err(Error::LengthMismatch { left: n, right: labels.len() });
        }
        for row in points.rows() {
            check_simplex(row.as_slice().expect("standard layout"), tol)?;
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= k) {
            return Err(Error::IndexOutOfRange { label: bad, classes: k });
        }
        let points = if points.is_standard_layout() { points } else { points.as_standard_layout().to_owned() };
        Ok(Self { points, labels })
    }

    /// Builds from rows of raw probabilities.
    pub fn from_rows(rows: &[Vec<f64>], labels: &[usize]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Empty);
        }
        let k = rows[0].len();
        let mut flat = Vec::with_capacity(rows.len() * k);
        for r in rows {
            if r.len() != k {
                return Err(Error::DimensionMismatch { expected: k, got: r.len() });
            }
            flat.extend_from_slice(r);
        }
        if labels.len() != rows.len() {
            return Err(Error::LengthMismatch { left: rows.len(), right: labels.len() });
        }
        let points = Array2::from_shape_vec((rows.len(), k), flat).expect("shape matches");
        Self::from_array(points, labels.to_vec(), TOL_SIMPLEX)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.points.ncols()
    }

    pub fn points(&self) -> &Array2<f64> {
        &self.points
    }

    pub fn point(&self, i: usize) -> ArrayView1<'_, f64> {
        self.points.row(i)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let k = self.num_classes();
        &self.points.as_slice().expect("standard layout")[i * k..(i + 1) * k]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Rows selected by `indices`, in that order (repeats allowed).
    pub fn select(&self, indices: &[usize]) -> LabeledDataset {
        let k = self.num_classes();
        let mut flat = Vec::with_capacity(indices.len() * k);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            flat.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        LabeledDataset {
            points: Array2::from_shape_vec((indices.len(), k), flat).expect("shape matches"),
            labels,
        }
    }

    /// Copy with every row clamped into `[eps, 1 - eps]` and renormalized.
    pub fn clamped(&self, eps: f64) -> LabeledDataset {
        let mut points = self.points.clone();
        for mut row in points.rows_mut() {
            clamp_interior(row.as_slice_mut().expect("standard layout"), eps);
        }
        LabeledDataset { points, labels: self.labels.clone() }
    }
}

fn check_simplex(v: &[f64], tol: f64) -> Result<()> {
    if v.is_empty() {
        return Err(Error::Empty);
    }
    for (index, &x) in v.iter().enumerate() {
        if !x.is_finite() {
            return Err(Error::NonFinite { index });
        }
        if x < 0.0 {
            return Err(Error::NegativeCoordinate { index, value: x });
        }
    }
    let sum: f64 = v.iter().sum();
    if (sum - 1.0).abs() > tol {
        return Err(Error::SumOutOfTolerance { sum, tol });
    }
    Ok(())
}

/// Checks non-negativity and `|sum - 1| <= tol`.
pub fn validate_simplex(v: &[f64], tol: f64) -> Result<SimplexPoint> {
    check_simplex(v, tol)?;
    Ok(SimplexPoint(v.to_vec()))
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Clamps coordinates into `[eps, 1 - eps]` and renormalizes in place. No-op for `K = 1`.
pub fn clamp_interior(coords: &mut [f64], eps: f64) {
    if coords.len() < 2 {
        return;
    }
    let mut sum = 0.0;
    for c in coords.iter_mut() {
        *c = c.clamp(eps, 1.0 - eps);
        sum += *c;
    }
    for c in coords.iter_mut() {
        *c /= sum;
    }
}

fn needs_clamp(coords: &[f64], eps: f64) -> bool {
    coords.len() > 1 && coords.iter().any(|&c| c < eps || c > 1.0 - eps)
}

/// `q_k = p_k^(1/t) / sum_j p_j^(1/t)`, evaluated in log space.
///
/// Points with a coordinate outside `[CLAMP_EPS, 1 - CLAMP_EPS]` are clamped first.
pub fn temperature_scale(p: &SimplexPoint, t: f64) -> Result<SimplexPoint> {
    let mut out = vec![0.0; p.dim()];
    temperature_scale_into(p.coords(), t, &mut out)?;
    Ok(SimplexPoint(out))
}

pub(crate) fn temperature_scale_into(p: &[f64], t: f64, out: &mut [f64]) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::NonPositiveTemperature(t));
    }
    if p.len() == 1 {
        out[0] = 1.0;
        return Ok(());
    }
    let mut src = p.to_vec();
    if needs_clamp(&src, CLAMP_EPS) {
        clamp_interior(&mut src, CLAMP_EPS);
    }
    for (o, &x) in out.iter_mut().zip(&src) {
        *o = x.ln() / t;
    }
    let lse = log_sum_exp(out);
    for o in out.iter_mut() {
        *o = (*o - lse).exp();
    }
    Ok(())
}

pub(crate) fn uniform_simplex_point<R: Rng + ?Sized>(rng: &mut R, k: usize, cuts: &mut Vec<f64>, out: &mut [f64]) {
    cuts.clear();
    cuts.extend((0..k - 1).map(|_| rng.random::<f64>()));
    cuts.sort_by(f64::total_cmp);
    let mut prev = 0.0;
    for (o, &c) in out.iter_mut().zip(cuts.iter()) {
        *o = c - prev;
        prev = c;
    }
    out[k - 1] = 1.0 - prev;
}

/// `n` points drawn uniformly from the `K`-class simplex.
///
/// Uses sorted-uniform spacings: `K - 1` uniforms on `[0, 1]` are sorted and the
/// consecutive gaps (including both endpoints) form the point.
pub fn sample_uniform_simplex(k: usize, n: usize, seed: RngSeed) -> Result<Vec<SimplexPoint>> {
    if k == 0 {
        return Err(Error::InvalidDimension("K must be at least 1".into()));
    }
    if n == 0 {
        return Err(Error::InvalidDimension("n must be at least 1".into()));
    }
    let mut rng = seed.rng();
    let mut cuts = Vec::with_capacity(k);
    Ok((0..n)
        .map(|_| {
            let mut v = vec![0.0; k];
            uniform_simplex_point(&mut rng, k, &mut cuts, &mut v);
            SimplexPoint(v)
        })
        .collect())
}

pub(crate) fn categorical<R: Rng + ?Sized>(rng: &mut R, probs: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut cum = 0.0;
    let mut last_positive = 0;
    for (k, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            last_positive = k;
            cum += p;
            if u < cum {
                return k;
            }
        }
    }
    last_positive
}

/// One categorical draw per point, with the point's coordinates as class probabilities.
pub fn sample_labels(points: &[SimplexPoint], seed: RngSeed) -> Result<Vec<Label>> {
    let mut rng = seed.rng();
    points
        .iter()
        .map(|p| {
            check_simplex(p.coords(), TOL_SIMPLEX)?;
            Ok(Label(categorical(&mut rng, p.coords())))
        })
        .collect()
}

pub fn one_hot(label: Label, k: usize) -> Result<Vec<f64>> {
    if label.0 >= k {
        return Err(Error::IndexOutOfRange { label: label.0, classes: k });
    }
    let mut v = vec![0.0; k];
    v[label.0] = 1.0;
    Ok(v)
}

/// Max-shifted softmax of a logit vector.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let lse = log_sum_exp(logits);
    logits.iter().map(|&z| (z - lse).exp()).collect()
}
