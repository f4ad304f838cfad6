//! Normality test based on the empirical moment generating function.
//!
//! The statistic compares the empirical MGF of the scaled residuals with
//! the standard normal MGF `e^{t²/2}` in a weighted `L²` norm with weight
//! `e^{-βt²}`, `β > 2`:
//!
//! ```text
//! T = n ∫ (M_n(t) - e^{t²/2})² e^{-βt²} dt
//! ```
//!
//! Modules:
//!
//! * [`stat`]: residuals, the statistic in three equivalent forms, sample
//!   skewness and kurtosis.
//! * [`limit_null`]: the large-sample null law `∑ λ_j N_j²`, its closed-form
//!   mean and variance, Nystrom eigenvalues and tail probabilities.
//! * [`mc`]: seeded Monte Carlo null distributions, critical values,
//!   p-values and power.
//! * [`asymptotics`]: the large-`β` skewness limit, the fixed-alternative
//!   lower bound and the contiguous-alternative shift.
//! * [`io`] and [`report`]: input parsing, exports and the JSON report.

// NaN must fail the domain checks, hence `!(x > 0.0)`.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod alternatives;
pub mod asymptotics;
pub mod ddouble;
pub mod empirical;
pub mod error;
pub mod io;
pub mod limit_null;
pub mod mc;
pub mod quadrature;
pub mod report;
pub mod rng;
pub mod sample;
pub mod stat;
pub mod summation;
pub mod tolerances;

pub use error::{Error, Result};
pub use sample::{Sample, ScaledResiduals, TestConfig};
