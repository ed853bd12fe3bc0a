//! Kernel density estimation of calibration error on the probability simplex.
//!
//! The central estimator is the leave-one-out Dirichlet-kernel estimate of
//! `CE_p^p = E[ |E[y | f(x)] - f(x)|_p^p ]`, available in canonical, marginal and
//! top-label flavours, with optional ratio bias correction. Histogram baselines,
//! leave-one-out bandwidth selection and a synthetic experiment harness with known
//! ground truth sit alongside.
//!
//! ```
//! use ecekde::{ece_kde_canonical, Bandwidth, KdeConfig, LabeledDataset};
//!
//! let ds = LabeledDataset::from_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]], &[0, 1]).unwrap();
//! let cfg = KdeConfig::new(Bandwidth::new(0.5).unwrap(), 1.0);
//! assert_eq!(ece_kde_canonical(&ds, &cfg).unwrap().value, 1.0);
//! ```

pub mod bandwidth;
pub mod binned;
pub mod debias;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod kernels;
pub mod numeric;
pub mod simplex;

pub use bandwidth::{loo_log_likelihood, loo_log_likelihood_grid, select_bandwidth, BandwidthGrid};
pub use binned::{
    assign_simplex_bins, doane_bins, ece_bin_canonical, ece_bin_toplabel, BinKind, BinningScheme, HistogramEstimate,
    TopLabelBinning,
};
pub use debias::{
    compute_moments, cond_expectation_debiased, debias_ratio_means, debias_ratio_squared_means, DebiasReport, MomentSet,
};
pub use error::{Error, Result};
pub use estimators::{
    canonical_objective, cond_expectation, ece_kde_canonical, ece_kde_marginal, ece_kde_toplabel,
    grad_canonical_objective, grad_ece_kde_canonical, loo_conditionals, mse_ce_objective, sharpness_at, sharpness_partial,
    CalibrationEstimate, Debias, EstimateKind, KdeConfig, RegularizationWeights, SharpnessMode,
};
pub use experiments::{
    bootstrap_ci, convergence_study, debias_study, fit_loglog_slope, gen_synthetic, ground_truth_ce, BandwidthChoice,
    McEstimate, StudyEstimator, StudyResult, StudyRow, SyntheticSpec,
};
pub use kernels::{log_beta_kernel, log_dirichlet_kernel, log_kernel_matrix, Bandwidth, KernelTable, LogKernelMatrix};
pub use simplex::{
    clamp_interior, one_hot, sample_labels, sample_uniform_simplex, softmax, temperature_scale, validate_simplex,
    Label, LabeledDataset, RngSeed, SimplexPoint, CLAMP_EPS, TOL_SIMPLEX,
};
