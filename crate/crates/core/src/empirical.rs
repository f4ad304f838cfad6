//! Sorted Monte Carlo replicates and queries on them.
//!
//! Quantiles use type-7 linear interpolation (the default of R and NumPy):
//! for probability `p` and `m` sorted values the position is `h = (m-1)p`
//! and the result interpolates between elements `⌊h⌋` and `⌊h⌋+1`.
//!
//! Monte Carlo p-values use the add-one convention
//! `(1 + #{replicates >= observed}) / (reps + 1)`, which never returns zero.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::summation;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistMeta {
    pub n: Option<usize>,
    pub beta: Option<f64>,
    pub generator: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDist {
    sorted_values: Vec<f64>,
    seed: u64,
    meta: DistMeta,
}

impl EmpiricalDist {
    /// Takes replicates in canonical (replicate index) order and sorts them.
    pub fn from_replicates(mut values: Vec<f64>, seed: u64, meta: DistMeta) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput);
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| v.is_nan()) {
            return Err(Error::InvalidValue { index, value });
        }
        values.sort_by(|a, b| a.total_cmp(b));
        Ok(EmpiricalDist {
            sorted_values: values,
            seed,
            meta,
        })
    }

    pub fn sorted_values(&self) -> &[f64] {
        &self.sorted_values
    }

    pub fn reps(&self) -> usize {
        self.sorted_values.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn meta(&self) -> &DistMeta {
        &self.meta
    }

    pub fn mean(&self) -> f64 {
        summation::sum(self.sorted_values.iter().copied()) / self.reps() as f64
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        let ss = summation::sum(self.sorted_values.iter().map(|v| (v - m).powi(2)));
        ss / (self.reps() as f64 - 1.0).max(1.0)
    }

    /// Standard error of [`Self::variance`], `√((m₄ - m₂²)/reps)` from the
    /// central moments of the replicates.
    pub fn variance_std_error(&self) -> f64 {
        let m = self.mean();
        let r = self.reps() as f64;
        let m2 = summation::sum(self.sorted_values.iter().map(|v| (v - m).powi(2))) / r;
        let m4 = summation::sum(self.sorted_values.iter().map(|v| (v - m).powi(4))) / r;
        ((m4 - m2 * m2).max(0.0) / r).sqrt()
    }

    /// Type-7 quantile, `0 <= p <= 1`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::DomainError(format!("probability must be in [0,1], got {p}")));
        }
        let v = &self.sorted_values;
        let h = (v.len() - 1) as f64 * p;
        let lo = h.floor() as usize;
        let hi = (lo + 1).min(v.len() - 1);
        Ok(v[lo] + (h - lo as f64) * (v[hi] - v[lo]))
    }

    /// Empirical `(1-α)` quantile.
    pub fn critical_value(&self, alpha: f64) -> Result<f64> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::DomainError(format!("alpha must be in (0,1), got {alpha}")));
        }
        self.quantile(1.0 - alpha)
    }

    pub fn p_value(&self, observed: f64) -> Result<f64> {
        if !observed.is_finite() {
            return Err(Error::DomainError(format!("observed value must be finite, got {observed}")));
        }
        let below = self.sorted_values.partition_point(|&v| v < observed);
        let at_or_above = self.reps() - below;
        Ok((1 + at_or_above) as f64 / (self.reps() + 1) as f64)
    }

    /// Fraction of replicates strictly greater than `x`.
    pub fn exceedance(&self, x: f64) -> f64 {
        let upto = self.sorted_values.partition_point(|&v| v <= x);
        (self.reps() - upto) as f64 / self.reps() as f64
    }

    /// Newline-delimited decimals, 17 significant digits each.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.reps() * 24);
        for v in &self.sorted_values {
            let _ = writeln!(out, "{v:.16e}");
        }
        out
    }
}

/// Two-sample Kolmogorov-Smirnov test: returns `(D, p)` with the asymptotic
/// Kolmogorov p-value at the effective size `m·n/(m+n)` (with Stephens'
/// small-sample correction).
pub fn ks_two_sample(a: &EmpiricalDist, b: &EmpiricalDist) -> (f64, f64) {
    let (x, y) = (a.sorted_values(), b.sorted_values());
    let (m, n) = (x.len(), y.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < m && j < n {
        let v = x[i].min(y[j]);
        while i < m && x[i] <= v {
            i += 1;
        }
        while j < n && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / m as f64 - j as f64 / n as f64).abs());
    }
    let en = ((m * n) as f64 / (m + n) as f64).sqrt();
    (d, kolmogorov_survival((en + 0.12 + 0.11 / en) * d))
}

/// `P(K > λ) = 2 ∑_{k>=1} (-1)^{k-1} e^{-2k²λ²}`.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-18 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(values: Vec<f64>) -> EmpiricalDist {
        let meta = DistMeta {
            n: None,
            beta: None,
            generator: "fixture".into(),
        };
        EmpiricalDist::from_replicates(values, 0, meta).unwrap()
    }

    #[test]
    fn type7_critical_value_on_one_to_hundred() {
        let d = dist((1..=100).rev().map(f64::from).collect());
        assert!((d.critical_value(0.05).unwrap() - 95.05).abs() < 1e-12);
        assert!(d.critical_value(0.0).is_err());
        assert!(d.critical_value(1.0).is_err());
    }

    #[test]
    fn median_of_symmetric_distribution() {
        let d = dist(vec![-2.0, -1.0, 0.0, 1.0, 2.0]);
        assert_eq!(d.critical_value(0.5).unwrap(), 0.0);
    }

    #[test]
    fn critical_value_is_monotone_in_alpha() {
        let d = dist((0..1000).map(|i| ((i * 7919) % 1000) as f64 / 13.0).collect());
        let mut prev = f64::INFINITY;
        for k in 1..100 {
            let c = d.critical_value(k as f64 / 100.0).unwrap();
            assert!(c <= prev);
            prev = c;
        }
    }

    #[test]
    fn add_one_p_values() {
        let d = dist((1..=999).map(f64::from).collect());
        assert_eq!(d.p_value(0.0).unwrap(), 1.0);
        assert_eq!(d.p_value(1e9).unwrap(), 1.0 / 1000.0);
        assert!((d.p_value(500.0).unwrap() - 0.5).abs() <= 1.5e-3);
        assert!(d.p_value(f64::NAN).is_err());
    }

    #[test]
    fn text_export_round_trips() {
        let d = dist(vec![0.1, 1.0 / 3.0, 2e-300]);
        let back: Vec<f64> = d.to_text().lines().map(|l| l.parse().unwrap()).collect();
        assert_eq!(back, d.sorted_values());
    }

    #[test]
    fn ks_identical_and_shifted() {
        let a = dist((0..2000).map(|i| i as f64).collect());
        let b = dist((0..2000).map(|i| i as f64 + 0.5).collect());
        let (d, p) = ks_two_sample(&a, &b);
        assert!(d < 0.001 && p > 0.99);
        let c = dist((0..2000).map(|i| i as f64 + 400.0).collect());
        let (d, p) = ks_two_sample(&a, &c);
        assert!((d - 0.2).abs() < 1e-3 && p < 1e-10);
    }
}
