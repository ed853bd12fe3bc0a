//! Shared fixtures for the benchmarks.

use ecekde::{gen_synthetic, LabeledDataset, RngSeed, SyntheticSpec};

/// Synthetic miscalibrated dataset with `t1 = t2 = 0.6`.
pub fn fixture(k: usize, n: usize) -> LabeledDataset {
    gen_synthetic(&SyntheticSpec { k, n, t1: 0.6, t2: 0.6, seed: RngSeed(17) }).expect("valid spec").0
}
