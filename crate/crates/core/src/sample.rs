//! Validated inputs: raw samples, scaled residuals and test configuration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::summation;
use crate::tolerances::{DEFAULT_BETA, DEFAULT_QUAD_NODES, MIN_SAMPLE_SIZE, RESIDUAL_CONSTRAINT_PER_N};

/// Finite observations with strictly positive spread.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    values: Vec<f64>,
}

impl Sample {
    /// Requires at least three finite values, not all equal.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        Self::with_min_len(values, MIN_SAMPLE_SIZE)
    }

    /// Same checks with a floor of two observations. Only meant for analytic
    /// fixtures where `n = 2` gives closed-form residuals `{-1, 1}`.
    #[doc(hidden)]
    pub fn new_relaxed(values: Vec<f64>) -> Result<Self> {
        Self::with_min_len(values, 2)
    }

    fn with_min_len(values: Vec<f64>, min: usize) -> Result<Self> {
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidValue { index, value });
        }
        if values.len() < min {
            return Err(Error::DegenerateSample(format!(
                "need at least {min} observations, got {}",
                values.len()
            )));
        }
        if values.iter().all(|&v| v == values[0]) {
            return Err(Error::DegenerateSample("all observations are equal".into()));
        }
        let s = Sample { values };
        if !(s.variance() > 0.0) {
            return Err(Error::DegenerateSample("sample variance is zero".into()));
        }
        Ok(s)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        summation::sum(self.values.iter().copied()) / self.values.len() as f64
    }

    /// Variance with divisor `n`.
    pub fn variance(&self) -> f64 {
        self.central_moment(2)
    }

    /// `n⁻¹ ∑ (x - x̄)^k`.
    pub fn central_moment(&self, k: i32) -> f64 {
        let m = self.mean();
        summation::sum(self.values.iter().map(|&x| (x - m).powi(k))) / self.values.len() as f64
    }
}

/// Studentized values `y_j = (x_j - x̄)/S` with `∑y = 0` and `∑y² = n`.
///
/// Some write-ups of the large-`beta` expansion state `∑y² = 1`; with the
/// divisor-`n` standard deviation used here the identity is `∑y² = n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledResiduals {
    y: Vec<f64>,
}

impl ScaledResiduals {
    /// Wraps values that already satisfy the residual constraints (within
    /// `n·1e-12`). Accepts `n >= 2`.
    pub fn from_values(y: Vec<f64>) -> Result<Self> {
        if let Some((index, &value)) = y.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidValue { index, value });
        }
        let n = y.len();
        if n < 2 {
            return Err(Error::DegenerateSample(format!("need at least 2 residuals, got {n}")));
        }
        let tol = n as f64 * RESIDUAL_CONSTRAINT_PER_N;
        let s1 = summation::sum(y.iter().copied());
        let s2 = summation::sum(y.iter().map(|v| v * v));
        if s1.abs() > tol || (s2 - n as f64).abs() > tol {
            return Err(Error::DomainError(format!(
                "residual constraints violated: sum = {s1:e}, sum of squares - n = {:e}",
                s2 - n as f64
            )));
        }
        Ok(ScaledResiduals { y })
    }

    pub(crate) fn from_values_unchecked(y: Vec<f64>) -> Self {
        ScaledResiduals { y }
    }

    pub fn values(&self) -> &[f64] {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.y.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Weight parameter and quadrature settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestConfig {
    pub beta: f64,
    pub quad_nodes: usize,
    /// Truncate the quadrature rule to `|t| <= h·σ_w` with `σ_w = 1/√(2β)`.
    /// `None` keeps every node of the Gauss-Hermite rule.
    pub quad_halfwidth_sigmas: Option<f64>,
}

impl TestConfig {
    pub fn new(beta: f64) -> Result<Self> {
        check_beta(beta)?;
        Ok(TestConfig {
            beta,
            quad_nodes: DEFAULT_QUAD_NODES,
            quad_halfwidth_sigmas: None,
        })
    }

    pub fn with_quad_nodes(mut self, nodes: usize) -> Self {
        self.quad_nodes = nodes;
        self
    }

    pub fn with_halfwidth_sigmas(mut self, h: f64) -> Self {
        self.quad_halfwidth_sigmas = Some(h);
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_beta(self.beta)?;
        if self.quad_nodes == 0 {
            return Err(Error::DomainError("quad_nodes must be positive".into()));
        }
        if let Some(h) = self.quad_halfwidth_sigmas {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::DomainError(format!("halfwidth must be positive, got {h}")));
            }
        }
        Ok(())
    }
}

impl Default for TestConfig {
    fn default() -> Self {
        TestConfig::new(DEFAULT_BETA).expect("default beta is valid")
    }
}

pub(crate) fn check_beta(beta: f64) -> Result<()> {
    if beta > 2.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(Error::DomainError(format!("beta must be finite and > 2, got {beta}")))
    }
}
