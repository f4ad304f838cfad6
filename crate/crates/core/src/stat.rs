//! The test statistic
//!
//! `T = n ∫ (M_n(t) - e^{t²/2})² e^{-βt²} dt`
//!
//! where `M_n` is the empirical moment generating function of the scaled
//! residuals. Three routes are provided: the closed double-sum form
//! ([`statistic_sum`], the one used everywhere else), direct quadrature of
//! the integral ([`statistic_quadrature`]), and the V-statistic form built
//! from the raw sample ([`vstat_statistic`]).

use std::f64::consts::PI;

use crate::asymptotics::tau;
use crate::ddouble::{dd_sum, DDouble};
use crate::error::{Error, Result};
use crate::quadrature::with_doubling_check;
use crate::sample::{check_beta, Sample, ScaledResiduals, TestConfig};
use crate::summation::{self, NeumaierSum};

/// Largest exponent for which `e^x` is safe to square.
pub(crate) const HALF_LOG_MAX: f64 = 354.891_356_446_692_2;

/// Exponent above which the double sum switches to the rescaled path.
const RESCALE_EXPONENT: f64 = 600.0;

pub fn scale_residuals(s: &Sample) -> Result<ScaledResiduals> {
    let n = s.len() as f64;
    let mean = s.mean();
    let sd = s.variance().sqrt();
    if !(sd > 0.0) {
        return Err(Error::DegenerateSample("sample variance is zero".into()));
    }
    let mut y: Vec<f64> = s.values().iter().map(|&x| (x - mean) / sd).collect();
    // One refinement pass absorbs the rounding of the mean and the scale.
    let shift = summation::sum(y.iter().copied()) / n;
    y.iter_mut().for_each(|v| *v -= shift);
    let ss = summation::sum(y.iter().map(|v| v * v));
    let k = (n / ss).sqrt();
    y.iter_mut().for_each(|v| *v *= k);
    Ok(ScaledResiduals::from_values_unchecked(y))
}

/// Closed double-sum form:
///
/// `√π ( n/√(β-1) - 2/√(β-½) ∑ e^{y_i²/(4β-2)} + 1/(n√β) ∑_{i,j} e^{(y_i+y_j)²/(4β)} )`.
///
/// The terms are of size `n` while `T` can be many orders smaller, so the
/// parts fixed by `∑y = 0` and `∑y² = n` are summed exactly: with
/// `R(z) = e^z - 1 - z - z²/2`, `c₁ = 1/(4β-2)` and `c₂ = 1/(4β)`,
///
/// `T/√π = nτ(β) + D ∑y⁴ - 2/√(β-½) ∑ R(c₁y_i²) + 1/(n√β) ∑_{i,j} R(c₂(y_i+y_j)²)`
///
/// where `D = c₂²/√β - c₁²/√(β-½)`.
///
/// Returns `Overflow` only when the statistic itself exceeds the `f64` range.
pub fn statistic_sum(r: &ScaledResiduals, cfg: &TestConfig) -> Result<f64> {
    check_beta(cfg.beta)?;
    let beta = cfg.beta;
    let y = r.values();
    let n = y.len() as f64;
    let max_exponent = r.max_abs().powi(2) / beta;

    if max_exponent <= RESCALE_EXPONENT {
        return Ok(PI.sqrt() * remainder_form(y, beta)?);
    }

    let single = summation::sum(y.iter().map(|v| (v * v / (4.0 * beta - 2.0)).exp()));
    let log_term = max_exponent + (pair_sum(y, beta, max_exponent) / (n * beta.sqrt())).ln();
    if log_term > 709.0 {
        return Err(Error::Overflow(format!(
            "statistic exceeds f64 range (log of double-sum term {log_term:.1})"
        )));
    }
    let mut acc = NeumaierSum::new();
    acc.add(n / (beta - 1.0).sqrt());
    acc.add(-2.0 / (beta - 0.5).sqrt() * single);
    acc.add(log_term.exp());
    Ok(PI.sqrt() * acc.value())
}

fn remainder_form(y: &[f64], beta: f64) -> Result<f64> {
    let n = y.len() as f64;
    let b = DDouble::from_f64(beta);
    let c1 = (b * 4.0 - 2.0).recip();
    let c2 = (b * 4.0).recip();
    let r_bh = (b - 0.5).sqrt().recip();
    let r_b = b.sqrt().recip();
    let d = (c2 * c2 * r_b - c1 * c1 * r_bh).to_f64();
    let (c1, c2) = (c1.to_f64(), c2.to_f64());

    let mut singles = NeumaierSum::new();
    let mut fourth = NeumaierSum::new();
    for &v in y {
        let v2 = v * v;
        singles.add(exp_remainder(c1 * v2));
        fourth.add(v2 * v2);
    }
    let mut pairs = NeumaierSum::new();
    for i in 0..y.len() {
        // Remainders are nonnegative, so a plain row sum is accurate.
        let yi = y[i];
        let row: f64 = y[i + 1..].iter().map(|&yj| exp_remainder(c2 * (yi + yj) * (yi + yj))).sum();
        pairs.add(2.0 * row);
        pairs.add(exp_remainder(4.0 * c2 * y[i] * y[i]));
    }

    let mut acc = NeumaierSum::new();
    acc.add(n * tau(beta)?);
    acc.add(d * fourth.value());
    acc.add(-2.0 * r_bh.to_f64() * singles.value());
    acc.add(r_b.to_f64() / n * pairs.value());
    Ok(acc.value())
}

/// `3!/(k+3)!` for `k = 0..=12`.
const REMAINDER_SERIES: [f64; 13] = {
    let mut c = [1.0; 13];
    let mut k = 1;
    while k < 13 {
        c[k] = c[k - 1] / (k as f64 + 3.0);
        k += 1;
    }
    c
};

/// `e^z - 1 - z - z²/2` for `z ≥ 0`, by its series where that cancels.
#[inline]
fn exp_remainder(z: f64) -> f64 {
    if z >= 0.5 {
        return z.exp() - 1.0 - z - 0.5 * z * z;
    }
    // The omitted tail is below ε relative for z < 0.5.
    let mut p = REMAINDER_SERIES[12];
    for &c in REMAINDER_SERIES[..12].iter().rev() {
        p = p * z + c;
    }
    p * z * z * z / 6.0
}

/// `∑_{i,j} exp((y_i+y_j)²/(4β) - shift)`, using symmetry.
fn pair_sum(y: &[f64], beta: f64, shift: f64) -> f64 {
    let c = 1.0 / (4.0 * beta);
    let mut total = NeumaierSum::new();
    if shift == 0.0 {
        // e^{(a+b)²c} = e^{a²c} e^{b²c} e^{2abc}
        let a: Vec<f64> = y.iter().map(|v| (v * v * c).exp()).collect();
        for i in 0..y.len() {
            let mut row = NeumaierSum::new();
            let yi = 2.0 * c * y[i];
            for j in (i + 1)..y.len() {
                row.add(a[j] * (yi * y[j]).exp());
            }
            total.add(2.0 * a[i] * row.value());
            total.add((4.0 * c * y[i] * y[i]).exp());
        }
    } else {
        for i in 0..y.len() {
            let mut row = NeumaierSum::new();
            for j in (i + 1)..y.len() {
                let s = y[i] + y[j];
                row.add((s * s * c - shift).exp());
            }
            total.add(2.0 * row.value());
            total.add((4.0 * c * y[i] * y[i] - shift).exp());
        }
    }
    total.value()
}

/// `n⁻¹ ∑ e^{t y_j}`.
pub fn empirical_mgf(r: &ScaledResiduals, t: f64) -> Result<f64> {
    if !t.is_finite() {
        return Err(Error::DomainError(format!("t must be finite, got {t}")));
    }
    let reach = t.abs() * r.max_abs();
    if reach > HALF_LOG_MAX {
        return Err(Error::Overflow(format!(
            "|t|·max|y| = {reach:.1} exceeds {HALF_LOG_MAX:.1}; restrict the quadrature range"
        )));
    }
    let y = r.values();
    Ok(summation::sum(y.iter().map(|v| (t * v).exp())) / y.len() as f64)
}

/// `n ∫ (mgf(t) - e^{t²/2})² e^{-βt²} dt` by Gaussian-weight quadrature with
/// the doubling check. Any MGF can be supplied; with `n = 1` this is the
/// population distance used by the consistency bound.
pub fn weighted_l2_distance<F>(n: f64, cfg: &TestConfig, mgf: F) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    cfg.validate()?;
    let integral = with_doubling_check(cfg.beta, cfg.quad_nodes, cfg.quad_halfwidth_sigmas, |rule| {
        rule.integrate_square(|t| Ok(mgf(t)? - (0.5 * t * t).exp()))
    })?;
    Ok(n * integral)
}

/// Direct quadrature of the defining integral.
pub fn statistic_quadrature(r: &ScaledResiduals, cfg: &TestConfig) -> Result<f64> {
    if cfg.quad_nodes < 16 {
        return Err(Error::DomainError(format!(
            "quadrature needs at least 16 nodes, got {}",
            cfg.quad_nodes
        )));
    }
    weighted_l2_distance(r.len() as f64, cfg, |t| empirical_mgf(r, t))
}

/// `n · n⁻² ∑_{i,j} h_β(x_i, x_j; x̄, S²)` with
///
/// `h_β(x,y) = √π ( 1/√(β-1) - (e^{(x-μ)²/((4β-2)σ²)} + e^{(y-μ)²/((4β-2)σ²)})/√(β-½) + e^{(x+y-2μ)²/(4βσ²)}/√β )`,
///
/// evaluated from the raw observations.
pub fn vstat_statistic(s: &Sample, cfg: &TestConfig) -> Result<f64> {
    check_beta(cfg.beta)?;
    let beta = cfg.beta;
    let mu = s.mean();
    let var = s.variance();
    if !(var > 0.0) {
        return Err(Error::DegenerateSample("sample variance is zero".into()));
    }
    let x = s.values();
    let n = x.len() as f64;

    let max_dev = x.iter().fold(0.0f64, |m, &v| m.max((v - mu).abs()));
    if max_dev * max_dev / var / beta > 700.0 {
        return Err(Error::Overflow("V-statistic kernel exceeds f64 range".into()));
    }

    // Double-double throughout: the kernel terms cancel from size 1 down to T/n.
    let b = DDouble::from_f64(beta);
    let c0 = (b - 1.0).sqrt().recip();
    let c1 = (b - 0.5).sqrt().recip();
    let c2 = b.sqrt().recip();
    let mean = dd_sum(x.iter().map(|&v| DDouble::from_f64(v))) / n;
    let dev: Vec<DDouble> = x.iter().map(|&v| DDouble::from_f64(v) - mean).collect();
    let var = dd_sum(dev.iter().map(|&d| d * d)) / n;
    let single: Vec<DDouble> = dev.iter().map(|&d| (d * d / ((b * 4.0 - 2.0) * var)).exp()).collect();
    let pair_scale = (b * 4.0 * var).recip();

    let mut acc = DDouble::from_f64(0.0);
    for i in 0..x.len() {
        let mut row = DDouble::from_f64(0.0);
        for j in (i + 1)..x.len() {
            let z = dev[i] + dev[j];
            row = row + c2 * (z * z * pair_scale).exp() - c1 * (single[i] + single[j]);
        }
        let z = dev[i] * 2.0;
        acc = acc + row * 2.0 + c0 * n + c2 * (z * z * pair_scale).exp() - c1 * single[i] * 2.0;
    }
    Ok(PI.sqrt() * (acc / n).to_f64())
}

/// `b₁ = n⁻¹∑(x-x̄)³ / S³` with divisor-`n` variance.
pub fn sample_skewness(s: &Sample) -> Result<f64> {
    let m2 = s.variance();
    if !(m2 > 0.0) {
        return Err(Error::DegenerateSample("sample variance is zero".into()));
    }
    Ok(s.central_moment(3) / m2.powf(1.5))
}

/// `b₂ = n⁻¹∑(x-x̄)⁴ / S⁴` (not excess kurtosis).
pub fn sample_kurtosis(s: &Sample) -> Result<f64> {
    let m2 = s.variance();
    if !(m2 > 0.0) {
        return Err(Error::DegenerateSample("sample variance is zero".into()));
    }
    Ok(s.central_moment(4) / (m2 * m2))
}

/// Scale residuals and evaluate the double-sum form.
pub fn statistic(s: &Sample, cfg: &TestConfig) -> Result<f64> {
    statistic_sum(&scale_residuals(s)?, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tolerances::{CROSS_FORM_REL, EXACT_IDENTITY_REL};

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    fn cfg(beta: f64) -> TestConfig {
        TestConfig::new(beta).unwrap()
    }

    // Golden values below come from a 40-digit evaluation of the double-sum form.
    const T_PM1_BETA3: f64 = 0.002543820364100445;
    const T_123_BETA3: f64 = 0.0025111613119091288;
    const T_SYM3_BETA25: f64 = 0.007115974467464713;

    #[test]
    fn residuals_of_one_two_three() {
        let r = scale_residuals(&Sample::new(vec![1.0, 2.0, 3.0]).unwrap()).unwrap();
        let h = 1.5f64.sqrt();
        for (got, want) in r.values().iter().zip([-h, 0.0, h]) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn residuals_of_two_points() {
        let r = scale_residuals(&Sample::new_relaxed(vec![-1.0, 1.0]).unwrap()).unwrap();
        assert_eq!(r.values(), &[-1.0, 1.0]);
    }

    #[test]
    fn constant_sample_is_degenerate() {
        assert!(matches!(Sample::new(vec![5.0; 3]), Err(Error::DegenerateSample(_))));
    }

    #[test]
    fn sum_form_two_point_golden() {
        let r = ScaledResiduals::from_values(vec![-1.0, 1.0]).unwrap();
        let t = statistic_sum(&r, &cfg(3.0)).unwrap();
        assert!(rel(t, T_PM1_BETA3) < 1e-12, "{t}");
        // Hand form: √π(2/√2 - 4e^{0.1}/√2.5 + (e^{1/3}+1)/√3)
        let hand = PI.sqrt()
            * (2.0 / 2f64.sqrt() - 4.0 * 0.1f64.exp() / 2.5f64.sqrt()
                + ((1.0f64 / 3.0).exp() + 1.0) / 3f64.sqrt());
        assert!(rel(t, hand) < 1e-10);
    }

    #[test]
    fn quadrature_matches_sum_form_on_fixtures() {
        let r = ScaledResiduals::from_values(vec![-1.0, 1.0]).unwrap();
        let q = statistic_quadrature(&r, &cfg(3.0)).unwrap();
        assert!(rel(q, T_PM1_BETA3) < CROSS_FORM_REL, "{q}");

        let h = 1.5f64.sqrt();
        let r = ScaledResiduals::from_values(vec![-h, 0.0, h]).unwrap();
        let s = statistic_sum(&r, &cfg(2.5)).unwrap();
        let q = statistic_quadrature(&r, &cfg(2.5)).unwrap();
        assert!(rel(s, T_SYM3_BETA25) < 1e-12);
        assert!(rel(q, s) < CROSS_FORM_REL);
    }

    #[test]
    fn quadrature_of_exact_normal_mgf_is_zero() {
        let d = weighted_l2_distance(50.0, &cfg(3.0), |t| Ok((0.5 * t * t).exp())).unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn quadrature_rejects_too_few_nodes() {
        let r = ScaledResiduals::from_values(vec![-1.0, 1.0]).unwrap();
        assert!(statistic_quadrature(&r, &cfg(3.0).with_quad_nodes(8)).is_err());
    }

    #[test]
    fn vstat_matches_sum_form() {
        let s = Sample::new_relaxed(vec![-1.0, 1.0]).unwrap();
        let v = vstat_statistic(&s, &cfg(3.0)).unwrap();
        assert!(rel(v, T_PM1_BETA3) < EXACT_IDENTITY_REL);

        let s = Sample::new(vec![1.0, 2.0, 3.0]).unwrap();
        let v = vstat_statistic(&s, &cfg(3.0)).unwrap();
        let t = statistic(&s, &cfg(3.0)).unwrap();
        assert!(rel(v, t) < EXACT_IDENTITY_REL);
        assert!(rel(t, T_123_BETA3) < 1e-12);
    }

    #[test]
    fn empirical_mgf_values() {
        let r = ScaledResiduals::from_values(vec![-1.0, 1.0]).unwrap();
        assert_eq!(empirical_mgf(&r, 0.0).unwrap(), 1.0);
        assert!((empirical_mgf(&r, 1.0).unwrap() - 1f64.cosh()).abs() < 1e-15);

        let h = 1.5f64.sqrt();
        let r = ScaledResiduals::from_values(vec![-h, 0.0, h]).unwrap();
        assert_eq!(empirical_mgf(&r, 0.0).unwrap(), 1.0);
        assert!((empirical_mgf(&r, 2.0).unwrap() - 4.2229242732225725).abs() < 1e-13);
        assert!(matches!(empirical_mgf(&r, 400.0), Err(Error::Overflow(_))));
    }

    #[test]
    fn skewness_and_kurtosis_fixtures() {
        let s = Sample::new(vec![-1.0, 0.0, 1.0]).unwrap();
        assert_eq!(sample_skewness(&s).unwrap(), 0.0);
        assert!((sample_kurtosis(&s).unwrap() - 1.5).abs() < 1e-15);

        let s = Sample::new(vec![0.0, 0.0, 3.0]).unwrap();
        assert!((sample_skewness(&s).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);

        let s = Sample::new_relaxed(vec![-1.0, 1.0]).unwrap();
        assert!((sample_kurtosis(&s).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn huge_outlier_takes_rescaled_path() {
        // max|y|² / β far above the direct-evaluation limit, but the
        // statistic itself is still representable.
        let mut v = vec![0.0; 4000];
        v[0] = 1.0;
        let s = Sample::new(v).unwrap();
        let r = scale_residuals(&s).unwrap();
        let c = cfg(5.8);
        assert!(r.max_abs().powi(2) / c.beta > RESCALE_EXPONENT);
        let t = statistic_sum(&r, &c).unwrap();
        assert!(t.is_finite() && t > 0.0);

        let big = Sample::new({
            let mut v = vec![0.0; 20000];
            v[0] = 1.0;
            v
        })
        .unwrap();
        assert!(matches!(statistic(&big, &cfg(3.0)), Err(Error::Overflow(_))));
    }
}
