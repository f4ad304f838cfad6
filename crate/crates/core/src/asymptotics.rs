//! Limit analyses as executable checks: the large-`β` skewness limit, the
//! fixed-alternative lower bound `Δ`, and the shift `c(t)` of the limit law
//! under contiguous alternatives.
//!
//! # Large-`β` skewness limit
//!
//! For fixed `n`, `(96/5) β^{7/2} (T/(n√π) - τ(β)) → b₁²` as `β → ∞`, where
//! `b₁` is the sample skewness and
//!
//! `τ(β) = 1/√(β-1) - 2/√(β-½) - 2/((4β-2)√(β-½)) + 1/√β + 1/(2β^{3/2}) + 3/(16β^{5/2})`.
//!
//! `T/(n√π)` and `τ(β)` agree to about `β^{-7/2}` relative, so at `β = 10⁴`
//! roughly 14 of the 16 double-precision digits cancel. The extended path
//! evaluates both in double-double arithmetic. The error of the limit is
//! observed to shrink like `1/β`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::alternatives::ContiguousG;
use crate::ddouble::{dd_sum, DDouble, DD_EPSILON};
use crate::empirical::{DistMeta, EmpiricalDist};
use crate::error::{Error, Result};
use crate::limit_null::SpectralApprox;
use crate::quadrature::{adaptive_gk15, GaussHermite};
use crate::rng::{replicate_rng, GENERATOR_NAME};
use crate::sample::{check_beta, Sample, TestConfig};
use crate::stat::{statistic, weighted_l2_distance};
use crate::summation::NeumaierSum;
use crate::tolerances::{MIN_REPS, QUAD_DOUBLING_REL};

/// `τ(β)` in double-double arithmetic.
pub fn tau_dd(beta: f64) -> Result<DDouble> {
    if !(beta > 1.0) || !beta.is_finite() {
        return Err(Error::DomainError(format!("tau needs beta > 1, got {beta}")));
    }
    let b = DDouble::from_f64(beta);
    let r_b1 = (b - 1.0).sqrt().recip();
    let r_bh = (b - 0.5).sqrt().recip();
    let r_b = b.sqrt().recip();
    let b15 = b * b.sqrt();
    let b25 = b15 * b;
    Ok(dd_sum([
        r_b1,
        r_bh * -2.0,
        r_bh * -2.0 / (b * 4.0 - 2.0),
        r_b,
        (b15 * 2.0).recip(),
        DDouble::from_f64(3.0) / (b25 * 16.0),
    ]))
}

pub fn tau(beta: f64) -> Result<f64> {
    Ok(tau_dd(beta)?.to_f64())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precision {
    /// Double precision throughout.
    Double,
    /// Residuals, exponentials and sums in double-double.
    Extended,
}

/// Below this `β` the double path has ample headroom.
pub const EXTENDED_PRECISION_BETA: f64 = 1e3;

/// `(96/5) β^{7/2} (T/(n√π) - τ(β))`, using double-double arithmetic for
/// `β >= EXTENDED_PRECISION_BETA`.
pub fn skewness_limit_scaled(s: &Sample, beta: f64) -> Result<f64> {
    let p = if beta >= EXTENDED_PRECISION_BETA {
        Precision::Extended
    } else {
        Precision::Double
    };
    skewness_limit_scaled_with(s, beta, p)
}

/// As [`skewness_limit_scaled`] with an explicit precision. Returns
/// `PrecisionLoss` when `(96/5) β^{7/2} ε ∑|terms|` exceeds 1% of the result.
pub fn skewness_limit_scaled_with(s: &Sample, beta: f64, precision: Precision) -> Result<f64> {
    check_beta(beta)?;
    let scale = 96.0 / 5.0 * beta.powf(3.5);
    let n = s.len() as f64;
    let (value, magnitude, eps) = match precision {
        Precision::Double => {
            let cfg = TestConfig::new(beta)?;
            let t = statistic(s, &cfg)? / (n * PI.sqrt());
            let tau = tau(beta)?;
            // The three terms of the sum form are each of size about 1/√β.
            (t - tau, 4.0 / (beta - 1.0).sqrt() + tau.abs(), f64::EPSILON)
        }
        Precision::Extended => {
            let (terms, mag) = normalized_statistic_dd(s, beta)?;
            let tau = tau_dd(beta)?;
            ((terms - tau).to_f64(), mag + tau.to_f64().abs(), DD_EPSILON)
        }
    };
    let scaled = scale * value;
    let estimate = scale * eps * magnitude * 8.0;
    if !scaled.is_finite() {
        return Err(Error::Overflow(format!("scaled statistic at beta = {beta} is not finite")));
    }
    if estimate > 0.01 * scaled.abs() {
        return Err(Error::PrecisionLoss {
            estimate,
            value: scaled,
        });
    }
    Ok(scaled)
}

/// `T/(n√π)` from the double-sum form in double-double, together with the
/// sum of the absolute values of its three terms.
fn normalized_statistic_dd(s: &Sample, beta: f64) -> Result<(DDouble, f64)> {
    let n = s.len();
    let nd = DDouble::from_f64(n as f64);
    let x: Vec<DDouble> = s.values().iter().map(|&v| DDouble::from_f64(v)).collect();
    let mean = dd_sum(x.iter().copied()) / nd;
    let dev: Vec<DDouble> = x.iter().map(|&v| v - mean).collect();
    let var = dd_sum(dev.iter().map(|&d| d * d)) / nd;
    let sd = var.sqrt();
    let y: Vec<DDouble> = dev.iter().map(|&d| d / sd).collect();

    let b = DDouble::from_f64(beta);
    let c1 = (b * 4.0 - 2.0).recip();
    let c2 = (b * 4.0).recip();
    let reach = y.iter().map(|v| v.to_f64().abs()).fold(0.0, f64::max);
    if 4.0 * reach * reach * c2.to_f64() > 700.0 {
        return Err(Error::Overflow(format!(
            "max |y| = {reach:.1} too large for the extended path at beta = {beta}"
        )));
    }

    let first = (b - 1.0).sqrt().recip();
    let single = dd_sum(y.iter().map(|&v| (v * v * c1).exp()));
    let second = single * 2.0 / (nd * (b - 0.5).sqrt());
    let mut pairs = DDouble::ZERO;
    for i in 0..n {
        pairs = pairs + (y[i] * y[i] * 4.0 * c2).exp();
        for j in i + 1..n {
            let u = y[i] + y[j];
            pairs = pairs + (u * u * c2).exp() * 2.0;
        }
    }
    let third = pairs / (nd * nd * b.sqrt());
    let magnitude = first.to_f64().abs() + second.to_f64().abs() + third.to_f64().abs();
    Ok((first - second + third, magnitude))
}

/// MGF of a standardized law (mean 0, variance 1) that is finite on all of ℝ.
#[derive(Clone)]
pub struct AltMGF {
    name: String,
    mgf: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    domain_note: String,
}

impl fmt::Debug for AltMGF {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AltMGF")
            .field("name", &self.name)
            .field("domain_note", &self.domain_note)
            .finish()
    }
}

impl AltMGF {
    /// Checks `M(0) = 1`, `M'(0) = 0` and `M''(0) = 1` by central differences.
    pub fn new<F>(name: &str, mgf: F, domain_note: &str) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let h = 1e-4;
        let (m0, mp, mm) = (mgf(0.0), mgf(h), mgf(-h));
        let d1 = (mp - mm) / (2.0 * h);
        let d2 = (mp - 2.0 * m0 + mm) / (h * h);
        if (m0 - 1.0).abs() > 1e-12 || d1.abs() > 1e-6 || (d2 - 1.0).abs() > 1e-5 {
            return Err(Error::DomainError(format!(
                "'{name}' is not a standardized MGF: M(0) = {m0}, M'(0) ≈ {d1:e}, M''(0) ≈ {d2}"
            )));
        }
        Ok(AltMGF {
            name: name.into(),
            mgf: Arc::new(mgf),
            domain_note: domain_note.into(),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain_note(&self) -> &str {
        &self.domain_note
    }

    pub fn eval(&self, t: f64) -> f64 {
        (self.mgf)(t)
    }

    pub fn normal() -> Self {
        AltMGF::new("normal", |t| (0.5 * t * t).exp(), "finite everywhere").unwrap()
    }

    /// Uniform on `[-√3, √3]`: `M(t) = sinh(√3 t)/(√3 t)`.
    pub fn uniform() -> Self {
        AltMGF::new(
            "uniform",
            |t| {
                let x = 3f64.sqrt() * t;
                if x.abs() < 1e-4 {
                    1.0 + x * x / 6.0
                } else {
                    x.sinh() / x
                }
            },
            "finite everywhere, overflows for |t| > 410",
        )
        .unwrap()
    }

    /// `p·N(μ₁, σ₁²) + (1-p)·N(μ₂, σ₂²)`, shifted and scaled to mean 0,
    /// variance 1.
    pub fn normal_mixture(p: f64, mu1: f64, mu2: f64, s1: f64, s2: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0 && s1 > 0.0 && s2 > 0.0) {
            return Err(Error::DomainError("mixture needs 0 < p < 1 and positive scales".into()));
        }
        let m = p * mu1 + (1.0 - p) * mu2;
        let var = p * (s1 * s1 + mu1 * mu1) + (1.0 - p) * (s2 * s2 + mu2 * mu2) - m * m;
        let sd = var.sqrt();
        let (a1, a2) = ((mu1 - m) / sd, (mu2 - m) / sd);
        let (b1, b2) = (s1 / sd, s2 / sd);
        AltMGF::new(
            &format!("mixture:{p},{mu1},{mu2},{s1},{s2}"),
            move |t| {
                p * (a1 * t + 0.5 * b1 * b1 * t * t).exp()
                    + (1.0 - p) * (a2 * t + 0.5 * b2 * b2 * t * t).exp()
            },
            "finite everywhere",
        )
    }
}

/// `∫ (M(t) - e^{t²/2})² e^{-βt²} dt`.
pub fn delta_lower_bound(alt: &AltMGF, cfg: &TestConfig) -> Result<f64> {
    weighted_l2_distance(1.0, cfg, |t| Ok(alt.eval(t)))
}

/// `h(x,t) = e^{tx} - e^{t²/2} - (x²-1) t² e^{t²/2}/2 - x t e^{t²/2}`.
pub fn h_component(x: f64, t: f64) -> f64 {
    let e = (0.5 * t * t).exp();
    (t * x).exp() - e - 0.5 * (x * x - 1.0) * t * t * e - x * t * e
}

/// `E f(Z)` for standard normal `Z` on the `m`-point Gauss-Hermite rule.
fn normal_expectation_rule<F: Fn(f64) -> f64>(m: usize, f: &F) -> f64 {
    let r2 = 2f64.sqrt();
    GaussHermite::cached(m).integrate(|u| f(r2 * u)) / PI.sqrt()
}

/// `E f(Z)` on the Gauss-Hermite rule with the doubling check (128 against
/// 256 nodes). Integrands with kinks, such as clamped perturbations, defeat
/// the doubling check; those fall back to adaptive Gauss-Kronrod on
/// `[-40, 40]`. `floor` is the absolute level below which differences are
/// ignored.
pub fn normal_expectation<F: Fn(f64) -> f64>(f: F, floor: f64) -> Result<f64> {
    let coarse = normal_expectation_rule(128, &f);
    let fine = normal_expectation_rule(256, &f);
    if (fine - coarse).abs() <= (QUAD_DOUBLING_REL * fine.abs()).max(floor) {
        return Ok(fine);
    }
    let phi = |z: f64| (-0.5 * z * z).exp() / (2.0 * PI).sqrt();
    let (value, err) = adaptive_gk15(|z| f(z) * phi(z), -40.0, 40.0, 0.1 * floor, 1e-12, 20_000);
    if err > (QUAD_DOUBLING_REL * value.abs()).max(floor) {
        return Err(Error::QuadratureUnconverged(format!(
            "normal expectation: Gauss-Hermite gave {coarse:e} and {fine:e}, adaptive rule {value:e} ± {err:e}"
        )));
    }
    Ok(value)
}

/// Perturbation `g` with its shift `c(t) = ∫ h(x,t) g(x) φ(x) dx` tabulated
/// on the quadrature nodes of a spectrum.
#[derive(Debug, Clone)]
pub struct ShiftFunction {
    g: ContiguousG,
    /// `∫ (x²-1) g φ` and `∫ x g φ`.
    second: f64,
    first: f64,
    nodes: Vec<f64>,
    c_values: Vec<f64>,
}

impl ShiftFunction {
    /// Checks `|∫ g φ| < 1e-10` and tabulates `c` on `nodes`.
    pub fn new(g: ContiguousG, nodes: &[f64]) -> Result<Self> {
        let floor = 1e-14 * g.sup_abs().max(1.0);
        let mass = normal_expectation(|x| g.eval(x), floor)?;
        if mass.abs() >= 1e-10 {
            return Err(Error::InvalidDensity(format!("∫ g φ = {mass:e}, expected 0")));
        }
        let second = normal_expectation(|x| (x * x - 1.0) * g.eval(x), floor)?;
        let first = normal_expectation(|x| x * g.eval(x), floor)?;
        let mut sf = ShiftFunction {
            g,
            second,
            first,
            nodes: nodes.to_vec(),
            c_values: Vec::new(),
        };
        sf.c_values = nodes.iter().map(|&t| sf.evaluate(t)).collect::<Result<_>>()?;
        Ok(sf)
    }

    /// Tabulated on the nodes of a Nystrom spectrum.
    pub fn for_spectrum(g: ContiguousG, spec: &SpectralApprox) -> Result<Self> {
        let basis = spec
            .basis()
            .ok_or_else(|| Error::DomainError("spectrum carries no quadrature basis".into()))?;
        ShiftFunction::new(g, &basis.nodes)
    }

    pub fn g(&self) -> ContiguousG {
        self.g
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn c_values(&self) -> &[f64] {
        &self.c_values
    }

    /// `c(t) = e^{t²/2} (E g(t+Z) - t·∫xgφ - t²/2·∫(x²-1)gφ)`, using
    /// `e^{tx} φ(x) = e^{t²/2} φ(x-t)` and `∫ g φ = 0`.
    fn evaluate(&self, t: f64) -> Result<f64> {
        if t == 0.0 || self.g == ContiguousG::Zero {
            return Ok(0.0);
        }
        let floor = 1e-14 * self.g.sup_abs();
        let shifted = normal_expectation(|z| self.g.eval(t + z), floor)?;
        let bracket = shifted - t * self.first - 0.5 * t * t * self.second;
        Ok((0.5 * t * t).exp() * bracket)
    }
}

/// `c(t)` at an arbitrary point.
pub fn shift_c(sf: &ShiftFunction, t: f64) -> Result<f64> {
    sf.evaluate(t)
}

/// `∑ v_i c(t_i)²` on the spectrum's quadrature grid, the mean shift of the
/// limit law.
pub fn shift_energy(sf: &ShiftFunction, spec: &SpectralApprox) -> Result<f64> {
    Ok(projected_shift(sf, spec)?.iter().map(|d| d * d).sum())
}

/// `δ = Qᵀ(√v ∘ c)` in the eigenbasis of the Nystrom matrix.
fn projected_shift(sf: &ShiftFunction, spec: &SpectralApprox) -> Result<Vec<f64>> {
    let basis = spec
        .basis()
        .ok_or_else(|| Error::DomainError("spectrum carries no quadrature basis".into()))?;
    if basis.nodes != sf.nodes {
        return Err(Error::MismatchedConfig(
            "shift function and spectrum use different quadrature nodes".into(),
        ));
    }
    let weighted: Vec<f64> = basis
        .weights
        .iter()
        .zip(&sf.c_values)
        .map(|(&v, &c)| if v > 0.0 { v.sqrt() * c } else { 0.0 })
        .collect();
    let q = &basis.eigenvectors;
    Ok((0..q.ncols())
        .map(|j| {
            let mut acc = NeumaierSum::new();
            for (i, w) in weighted.iter().enumerate() {
                acc.add(q[(i, j)] * w);
            }
            acc.value()
        })
        .collect())
}

/// Draws of `∫ (W(t) + c(t))² e^{-βt²} dt` on the Nystrom grid: with
/// `√v∘W = Q Λ^{1/2} Z`, a draw is `∑_j (√λ_j Z_j + δ_j)²`. Components below
/// the eigenvalue cut contribute their `δ_j²` deterministically.
pub fn contiguous_shifted_limit(
    sf: &ShiftFunction,
    spec: &SpectralApprox,
    cfg: &TestConfig,
    reps: usize,
    seed: u64,
) -> Result<EmpiricalDist> {
    cfg.validate()?;
    if (cfg.beta - spec.beta()).abs() > 0.0 {
        return Err(Error::MismatchedConfig(format!(
            "config beta {} differs from spectrum beta {}",
            cfg.beta,
            spec.beta()
        )));
    }
    if reps < MIN_REPS {
        return Err(Error::DomainError(format!("need at least {MIN_REPS} replicates, got {reps}")));
    }
    let delta = projected_shift(sf, spec)?;
    let lambdas = spec.significant_eigenvalues();
    let k = lambdas.len();
    let fixed: f64 = delta[k..].iter().map(|d| d * d).sum();
    let roots: Vec<f64> = lambdas.iter().map(|l| l.sqrt()).collect();
    let draws: Vec<f64> = (0..reps as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = replicate_rng(seed, i);
            let mut acc = NeumaierSum::new();
            acc.add(fixed);
            for (r, d) in roots.iter().zip(&delta) {
                let z: f64 = StandardNormal.sample(&mut rng);
                let u = r * z + d;
                acc.add(u * u);
            }
            acc.value()
        })
        .collect();
    EmpiricalDist::from_replicates(
        draws,
        seed,
        DistMeta {
            n: None,
            beta: Some(spec.beta()),
            generator: GENERATOR_NAME.into(),
        },
    )
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;
    use crate::limit_null::{kernel, nystrom_spectrum, spectral_sample, KernelParams};

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    // 40-digit reference values.
    const TAU_3: f64 = 0.0013080553751412136759;
    const TAU_1E4: f64 = 1.0255444512194844355e-19;
    const DELTA_UNIFORM_BETA3: f64 = 0.00058787194327521061712;

    #[test]
    fn tau_reference_values() {
        assert!(rel(tau(3.0).unwrap(), TAU_3) < 1e-15);
        assert!(rel(tau(1e4).unwrap(), TAU_1E4) < 1e-12);
        assert!(tau(1.0).is_err());
        let grid: Vec<f64> = [1e2, 1e3, 1e4].iter().map(|&b| tau(b).unwrap().abs()).collect();
        assert!(grid[0] > grid[1] && grid[1] > grid[2]);
    }

    #[test]
    fn skewness_limit_reference_values() {
        let s = Sample::new(vec![0.0, 0.0, 3.0]).unwrap();
        for (beta, want) in [
            (1e2, 0.48945535041442595),
            (1e3, 0.49895941028260778),
            (1e4, 0.49989607849075238),
        ] {
            let got = skewness_limit_scaled(&s, beta).unwrap();
            assert!(rel(got, want) < 1e-6, "beta {beta}: {got}");
        }
        let sym = Sample::new(vec![-2.0, -1.0, 1.0, 2.0]).unwrap();
        let got = skewness_limit_scaled(&sym, 1e4).unwrap();
        assert!(rel(got, -0.00013805562740460839) < 1e-4, "{got}");
    }

    #[test]
    fn double_path_reports_precision_loss() {
        let s = Sample::new(vec![0.0, 0.0, 3.0]).unwrap();
        let e = skewness_limit_scaled_with(&s, 1e6, Precision::Double);
        assert!(matches!(e, Err(Error::PrecisionLoss { .. })), "{e:?}");
        let a = skewness_limit_scaled_with(&s, 100.0, Precision::Double).unwrap();
        let b = skewness_limit_scaled_with(&s, 100.0, Precision::Extended).unwrap();
        assert!(rel(a, b) < 1e-6);
    }

    #[test]
    fn alt_mgf_validation() {
        assert!(AltMGF::new("exp", |t: f64| t.exp(), "").is_err());
        assert!(AltMGF::normal_mixture(0.3, -1.0, 2.0, 0.5, 1.5).is_ok());
        assert!(rel(AltMGF::uniform().eval(1.0), (3f64.sqrt()).sinh() / 3f64.sqrt()) < 1e-15);
    }

    #[test]
    fn delta_values() {
        let cfg = TestConfig::new(3.0).unwrap();
        assert_eq!(delta_lower_bound(&AltMGF::normal(), &cfg).unwrap(), 0.0);
        let d = delta_lower_bound(&AltMGF::uniform(), &cfg).unwrap();
        assert!(rel(d, DELTA_UNIFORM_BETA3) < 1e-8, "{d}");
        let m = AltMGF::normal_mixture(0.5, -1.0, 1.0, 0.5, 0.5).unwrap();
        assert!(delta_lower_bound(&m, &cfg).unwrap() > 0.0);
    }

    #[test]
    fn h_component_is_centred_and_reproduces_kernel() {
        for x in [-3.0, 0.0, 1.5] {
            assert_eq!(h_component(x, 0.0), 0.0);
        }
        let mean = normal_expectation(|x| h_component(x, 1.0), 1e-12).unwrap();
        assert!(mean.abs() < 1e-10);
        let grid = [-1.5, -0.5, 0.25, 1.0, 2.0];
        for &s in &grid {
            for &t in &grid {
                let q = normal_expectation(|x| h_component(x, s) * h_component(x, t), 1e-12).unwrap();
                assert!((q - kernel(s, t)).abs() < 1e-8 * kernel(s, t).abs().max(1.0), "({s},{t})");
            }
        }
    }

    #[test]
    fn sine_shift_matches_closed_form_and_trapezoid() {
        let sf = ShiftFunction::new(ContiguousG::Sine, &[]).unwrap();
        assert_eq!(shift_c(&sf, 0.0).unwrap(), 0.0);
        // c(t) = e^{(t²-1)/2} (sin t - t) for g = sin.
        for t in [0.3f64, 1.0, 2.5, 6.0] {
            let want = (0.5 * (t * t - 1.0)).exp() * (t.sin() - t);
            assert!(rel(shift_c(&sf, t).unwrap(), want) < 1e-9, "t = {t}");
        }
        let m = 1_000_000;
        let hstep = 20.0 / m as f64;
        let phi = |x: f64| (-0.5 * x * x).exp() / (2.0 * PI).sqrt();
        let trap: f64 = (0..=m)
            .map(|k| {
                let x = -10.0 + k as f64 * hstep;
                let w = if k == 0 || k == m { 0.5 } else { 1.0 };
                w * h_component(x, 1.0) * x.sin() * phi(x)
            })
            .sum::<f64>()
            * hstep;
        assert!((shift_c(&sf, 1.0).unwrap() - trap).abs() < 1e-6);
    }

    #[test]
    fn zero_shift_is_zero() {
        let sf = ShiftFunction::new(ContiguousG::Zero, &[0.5, 1.0]).unwrap();
        assert_eq!(sf.c_values(), &[0.0, 0.0]);
    }

    #[test]
    fn hermite_shift_is_tabulated() {
        let g = ContiguousG::Hermite3 { scale: 0.2 };
        let sf = ShiftFunction::new(g, &[-1.0, 0.5, 2.0]).unwrap();
        assert!(sf.c_values().iter().all(|c| c.is_finite()));
    }

    #[test]
    fn shifted_limit_mean_and_determinism() {
        let spec = nystrom_spectrum(&KernelParams::new(3.0).unwrap(), 64).unwrap();
        let cfg = TestConfig::new(3.0).unwrap();
        let sf = ShiftFunction::for_spectrum(ContiguousG::Sine, &spec).unwrap();
        let energy = shift_energy(&sf, &spec).unwrap();
        let direct: f64 = spec
            .basis()
            .unwrap()
            .weights
            .iter()
            .zip(sf.c_values())
            .map(|(v, c)| v * c * c)
            .sum();
        assert!(rel(energy, direct) < 1e-10);
        let reps = 20_000;
        let d = contiguous_shifted_limit(&sf, &spec, &cfg, reps, 3).unwrap();
        let se = (d.variance() / reps as f64).sqrt();
        assert!((d.mean() - spec.trace() - energy).abs() < 4.0 * se);
        let again = contiguous_shifted_limit(&sf, &spec, &cfg, reps, 3).unwrap();
        assert_eq!(d.sorted_values(), again.sorted_values());

        let zero = ShiftFunction::for_spectrum(ContiguousG::Zero, &spec).unwrap();
        let z = contiguous_shifted_limit(&zero, &spec, &cfg, 1000, 8).unwrap();
        let plain = spectral_sample(&spec, 1000, 8).unwrap();
        for (a, b) in z.sorted_values().iter().zip(plain.sorted_values()) {
            assert!(rel(*a, *b) < 1e-12);
        }
    }
}
