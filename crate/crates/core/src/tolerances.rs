//! Numerical tolerances used throughout the crate and its test suites.
//!
//! Keeping them in one place means a golden value and the check that
//! guards it always agree on how close is close enough.

/// Algebraically identical routes (sum form vs. V-statistic form, affine
/// transforms). About 100x double epsilon scaled by typical conditioning.
pub const EXACT_IDENTITY_REL: f64 = 1e-10;

/// Sum form vs. numerical quadrature of the integral form.
pub const CROSS_FORM_REL: f64 = 1e-8;

/// Doubling check for Gaussian-weight quadrature: relative change allowed
/// between `m` and `2m` nodes.
pub const QUAD_DOUBLING_REL: f64 = 1e-6;

/// Statistic values are analytically nonnegative; rounding may push them
/// slightly below zero.
pub const NONNEG_ABS: f64 = 1e-10;

/// Per-element slack for the residual constraints `sum y = 0`, `sum y^2 = n`.
pub const RESIDUAL_CONSTRAINT_PER_N: f64 = 1e-12;

/// Nystrom eigenvalues below `-NEG_EIGEN_REL * lambda_max` indicate a real
/// failure rather than discretization noise.
pub const NEG_EIGEN_REL: f64 = 1e-10;

/// Eigenvalues below this fraction of the largest are dropped before the
/// characteristic-function inversion.
pub const EIGEN_TRUNCATION_REL: f64 = 1e-12;

/// Absolute target error of a tail probability from the inversion integral.
pub const INVERSION_ABS: f64 = 1e-9;

/// Minimum sample size accepted by the public API.
pub const MIN_SAMPLE_SIZE: usize = 3;

/// Minimum Monte Carlo replicate count.
pub const MIN_REPS: usize = 1000;

/// Replicate count used when the inversion integral fails and the tail is
/// estimated by simulation instead.
pub const FALLBACK_REPS: usize = 1_000_000;

/// Default Gauss-Hermite node count for the statistic and interactive p-values.
pub const DEFAULT_QUAD_NODES: usize = 128;

/// Default Nystrom node count for published tables.
pub const TABLE_NYSTROM_NODES: usize = 256;

/// Default weight parameter. A convention, comfortably inside `beta > 2`.
pub const DEFAULT_BETA: f64 = 3.0;
