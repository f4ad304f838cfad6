//! The large-sample null law of the statistic.
//!
//! Under normality the statistic converges to `‖W‖²` where `W` is a centred
//! Gaussian process with covariance kernel
//!
//! ```text
//! K(s,t) = e^{(s²+t²)/2} (e^{st} - 1 - st - s²t²/2)
//! ```
//!
//! in `L²(e^{-βt²} dt)`. Its law is that of `∑ λ_j N_j²` with `λ_j` the
//! eigenvalues of `f ↦ ∫ K(s,·) f(s) e^{-βs²} ds`. No closed form of the
//! eigenvalues is known; they are approximated here by the Nystrom method on
//! the Gaussian-weight quadrature rule, and checked against the closed-form
//! mean and variance of the limit law.

use std::f64::consts::PI;

use log::warn;
use nalgebra::{DMatrix, SymmetricEigen};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::empirical::{DistMeta, EmpiricalDist};
use crate::error::{Error, Result};
use crate::quadrature::{adaptive_gk15, GaussianWeightRule};
use crate::rng::{replicate_rng, GENERATOR_NAME};
use crate::sample::check_beta;
use crate::summation::{self, NeumaierSum};
use crate::tolerances::{
    EIGEN_TRUNCATION_REL, FALLBACK_REPS, INVERSION_ABS, MIN_REPS, NEG_EIGEN_REL,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    beta: f64,
}

impl KernelParams {
    pub fn new(beta: f64) -> Result<Self> {
        check_beta(beta)?;
        Ok(KernelParams { beta })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

/// `e^x - 1 - x - x²/2` without cancellation near zero.
fn exp_tail3(x: f64) -> f64 {
    if x.abs() < 0.5 {
        let mut term = x * x * x / 6.0;
        let mut sum: f64 = 0.0;
        let mut k = 3.0;
        while term.abs() > 1e-18 * sum.abs() || sum == 0.0 {
            sum += term;
            k += 1.0;
            term *= x / k;
            if term == 0.0 {
                break;
            }
        }
        sum
    } else {
        x.exp_m1() - x - 0.5 * x * x
    }
}

/// `(ln|e^x - 1 - x - x²/2|, sign)`, finite for every finite `x != 0`.
fn ln_exp_tail3(x: f64) -> (f64, f64) {
    if x > 30.0 {
        let poly = 1.0 + x + 0.5 * x * x;
        (x + (-poly * (-x).exp()).ln_1p(), 1.0)
    } else {
        let v = exp_tail3(x);
        (v.abs().ln(), v.signum())
    }
}

/// Covariance kernel of the limiting process. Does not depend on `β`.
pub fn kernel(s: f64, t: f64) -> f64 {
    (0.5 * (s * s + t * t)).exp() * exp_tail3(s * t)
}

/// Mean of the limit law, `∫ K(t,t) e^{-βt²} dt`.
pub fn limit_mean(beta: f64) -> Result<f64> {
    check_beta(beta)?;
    let b1 = beta - 1.0;
    Ok(PI.sqrt() / (beta - 2.0).sqrt()
        - PI.sqrt() / b1.sqrt() * (1.0 + 1.0 / (2.0 * b1) + 3.0 / (8.0 * b1 * b1)))
}

/// Variance of the limit law, `2 ∫∫ K(s,t)² e^{-β(s²+t²)} ds dt`.
pub fn limit_variance(beta: f64) -> Result<f64> {
    check_beta(beta)?;
    let b1 = beta - 1.0;
    let gamma = 4.0 * b1 * b1 - 1.0;
    let terms = [
        1.0 / (beta.sqrt() * (beta - 2.0).sqrt()),
        -4.0 / gamma.sqrt(),
        -6.0 / gamma.powf(1.5),
        -6.0 / gamma.powf(2.5),
        1.0 / b1,
        1.0 / (2.0 * b1.powi(3)),
        9.0 / (64.0 * b1.powi(5)),
    ];
    Ok(2.0 * PI * summation::sum(terms))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitMoments {
    pub mean: f64,
    pub variance: f64,
}

pub fn limit_moments(beta: f64) -> Result<LimitMoments> {
    Ok(LimitMoments {
        mean: limit_mean(beta)?,
        variance: limit_variance(beta)?,
    })
}

/// Quadrature grid and eigenvectors behind a Nystrom spectrum.
#[derive(Debug, Clone)]
pub struct SpectralBasis {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// Column `j` is the unit eigenvector of the symmetrized Nystrom matrix
    /// belonging to `eigenvalues[j]`.
    pub eigenvectors: DMatrix<f64>,
}

#[derive(Debug, Clone)]
pub struct SpectralApprox {
    eigenvalues: Vec<f64>,
    node_count: usize,
    beta: f64,
    trace: f64,
    sq_trace: f64,
    clamped: usize,
    basis: Option<SpectralBasis>,
}

impl SpectralApprox {
    /// Spectrum from explicit eigenvalues (e.g. `{1}` for a `χ²₁` law).
    pub fn from_eigenvalues(mut eigenvalues: Vec<f64>, beta: f64) -> Result<Self> {
        if eigenvalues.is_empty() || eigenvalues.iter().any(|l| !l.is_finite() || *l < 0.0) {
            return Err(Error::DomainError("eigenvalues must be finite and nonnegative".into()));
        }
        eigenvalues.sort_by(|a, b| b.total_cmp(a));
        let trace = summation::sum(eigenvalues.iter().copied());
        let sq_trace = summation::sum(eigenvalues.iter().map(|l| l * l));
        Ok(SpectralApprox {
            node_count: eigenvalues.len(),
            eigenvalues,
            beta,
            trace,
            sq_trace,
            clamped: 0,
            basis: None,
        })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn trace(&self) -> f64 {
        self.trace
    }

    pub fn sq_trace(&self) -> f64 {
        self.sq_trace
    }

    /// Number of slightly negative eigenvalues that were set to zero.
    pub fn clamped(&self) -> usize {
        self.clamped
    }

    pub fn basis(&self) -> Option<&SpectralBasis> {
        self.basis.as_ref()
    }

    /// Eigenvalues above `EIGEN_TRUNCATION_REL·λ₁`.
    pub fn significant_eigenvalues(&self) -> &[f64] {
        let cut = EIGEN_TRUNCATION_REL * self.eigenvalues[0];
        let k = self.eigenvalues.partition_point(|&l| l > cut);
        &self.eigenvalues[..k.max(1)]
    }
}

/// Nystrom approximation on the `nodes`-point Gaussian-weight rule: the
/// eigenvalues of `A_ij = √(v_i v_j) K(s_i, s_j)`.
pub fn nystrom_spectrum(p: &KernelParams, nodes: usize) -> Result<SpectralApprox> {
    if nodes < 32 || !nodes.is_multiple_of(2) {
        return Err(Error::DomainError(format!(
            "Nystrom node count must be even and >= 32, got {nodes}"
        )));
    }
    let rule = GaussianWeightRule::new(p.beta, nodes, None);
    let s = rule.nodes();
    let lv = rule.log_weights();
    let m = s.len();

    // Entries assembled in log space: √v_i e^{s_i²/2} overflows on its own
    // at the outer nodes even though the product stays small.
    let half: Vec<f64> = (0..m).map(|i| 0.5 * lv[i] + 0.5 * s[i] * s[i]).collect();
    let matrix = DMatrix::from_fn(m, m, |i, j| {
        let x = s[i] * s[j];
        if x == 0.0 {
            return 0.0;
        }
        let (ln_b, sign) = ln_exp_tail3(x);
        sign * (half[i] + half[j] + ln_b).exp()
    });

    let eig = SymmetricEigen::try_new(matrix, 1e-15, 10_000)
        .ok_or_else(|| Error::EigenFailure(format!("no convergence for {m} nodes")))?;

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let lambda_max = eig.eigenvalues[order[0]];
    if !(lambda_max > 0.0) {
        return Err(Error::EigenFailure("largest eigenvalue is not positive".into()));
    }

    let mut eigenvalues = Vec::with_capacity(m);
    let mut clamped = 0;
    for &k in &order {
        let l = eig.eigenvalues[k];
        if l < -NEG_EIGEN_REL * lambda_max {
            return Err(Error::EigenFailure(format!(
                "eigenvalue {l:e} is too negative for a covariance operator (λ_max = {lambda_max:e})"
            )));
        }
        if l < 0.0 {
            clamped += 1;
            eigenvalues.push(0.0);
        } else {
            eigenvalues.push(l);
        }
    }
    if clamped > 0 {
        warn!("clamped {clamped} slightly negative Nystrom eigenvalues to zero (beta = {})", p.beta);
    }
    let eigenvectors = DMatrix::from_fn(m, m, |i, j| eig.eigenvectors[(i, order[j])]);

    Ok(SpectralApprox {
        trace: summation::sum(eigenvalues.iter().copied()),
        sq_trace: summation::sum(eigenvalues.iter().map(|l| l * l)),
        eigenvalues,
        node_count: m,
        beta: p.beta,
        clamped,
        basis: Some(SpectralBasis {
            nodes: s.to_vec(),
            weights: rule.weights(),
            eigenvectors,
        }),
    })
}

/// `P(∑ λ_j N_j² > x)` for the spectrum's significant eigenvalues.
pub fn quadratic_form_tail(spec: &SpectralApprox, x: f64) -> Result<f64> {
    if !(spec.trace() > 0.0) {
        return Err(Error::DomainError("spectrum has zero trace".into()));
    }
    imhof_tail(spec.significant_eigenvalues(), x)
}

/// Like [`quadratic_form_tail`], but falls back to a seeded simulation with
/// `FALLBACK_REPS` draws when the inversion integral does not converge.
pub fn tail_or_simulate(spec: &SpectralApprox, x: f64, seed: u64) -> Result<f64> {
    match quadratic_form_tail(spec, x) {
        Err(Error::InversionUnconverged(msg)) => {
            warn!("inversion failed ({msg}); estimating the tail by simulation");
            Ok(spectral_sample(spec, FALLBACK_REPS, seed)?.exceedance(x))
        }
        other => other,
    }
}

/// Imhof's inversion formula
///
/// `P(Q > x) = ½ + π⁻¹ ∫₀^∞ sin θ(u) / (u ρ(u)) du`,
/// `θ(u) = ½∑ atan(λ_j u) - ½xu`, `ρ(u) = ∏ (1 + λ_j² u²)^{1/4}`,
///
/// integrated over consecutive half-periods of `xu/2` with adaptive
/// Gauss-Kronrod. Stops when a rigorous bound on the remaining tail is below
/// the target, or when Wynn's ε-extrapolation of the alternating partial sums
/// has settled.
pub fn imhof_tail(lambdas: &[f64], x: f64) -> Result<f64> {
    if !x.is_finite() || x.is_nan() {
        return Err(Error::DomainError(format!("x must be finite, got {x}")));
    }
    if lambdas.iter().any(|l| !(*l > 0.0) || !l.is_finite()) {
        return Err(Error::DomainError("eigenvalues must be positive".into()));
    }
    if x <= 0.0 {
        return Ok(1.0);
    }
    let tol = INVERSION_ABS * PI;
    let integrand = |u: f64| {
        let mut theta = -0.5 * x * u;
        let mut ln_rho = 0.0;
        for &l in lambdas {
            let lu = l * u;
            theta += 0.5 * lu.atan();
            ln_rho += 0.25 * (lu * lu).ln_1p();
        }
        theta.sin() / (u * ln_rho.exp())
    };

    let h = 2.0 * PI / x;
    let mut partial = Vec::new();
    let mut total = 0.0;
    let mut est_err = 0.0;
    let mut last_extrapolation: Option<f64> = None;
    const MAX_INTERVALS: usize = 4000;
    for k in 0..MAX_INTERVALS {
        let a = k as f64 * h;
        let (v, e) = adaptive_gk15(integrand, a, a + h, 0.01 * tol, 1e-13, 400);
        total += v;
        est_err += e;
        partial.push(total);

        if truncation_bound(lambdas, a + h) + est_err < tol {
            return Ok((0.5 + total / PI).clamp(0.0, 1.0));
        }
        if k >= 16 && k % 4 == 0 {
            let window = &partial[partial.len().saturating_sub(41)..];
            let ext = wynn_epsilon(window);
            if let Some(prev) = last_extrapolation {
                if (ext - prev).abs() + est_err < tol {
                    return Ok((0.5 + ext / PI).clamp(0.0, 1.0));
                }
            }
            last_extrapolation = Some(ext);
        }
    }
    Err(Error::InversionUnconverged(format!(
        "x = {x}: {MAX_INTERVALS} intervals without meeting tolerance"
    )))
}

/// Upper bound on `π⁻¹ ∫_U^∞ du / (u ρ(u))`, minimized over how many leading
/// eigenvalues are bounded by `(λu)^{1/2}` (the rest by their value at `U`).
fn truncation_bound(lambdas: &[f64], upper: f64) -> f64 {
    let mut sorted: Vec<f64> = lambdas.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let ln_u = upper.ln();
    let rest_total: f64 = sorted.iter().map(|l| 0.25 * (l * l * upper * upper).ln_1p()).sum();
    let mut best = f64::INFINITY;
    let mut lead = 0.0;
    let mut rest = rest_total;
    for (r, &l) in sorted.iter().enumerate() {
        lead += 0.5 * l.ln();
        rest -= 0.25 * (l * l * upper * upper).ln_1p();
        let k = (r + 1) as f64 / 2.0;
        // ∫_U^∞ u^{-1-k} du = U^{-k}/k
        let ln_bound = -(PI.ln() + k.ln() + k * ln_u + lead + rest);
        best = best.min(ln_bound.exp());
    }
    best
}

/// Wynn's ε-algorithm; returns the deepest even-column estimate.
fn wynn_epsilon(s: &[f64]) -> f64 {
    let n = s.len();
    let mut prev = vec![0.0; n + 1];
    let mut cur: Vec<f64> = s.to_vec();
    let mut best = *s.last().unwrap();
    let mut col = 0;
    while cur.len() > 1 {
        let mut next = Vec::with_capacity(cur.len() - 1);
        for i in 0..cur.len() - 1 {
            let d = cur[i + 1] - cur[i];
            if d == 0.0 {
                return if col % 2 == 0 { cur[i + 1] } else { best };
            }
            next.push(prev[i + 1] + 1.0 / d);
        }
        prev = cur;
        cur = next;
        col += 1;
        if col % 2 == 0 {
            let v = *cur.last().unwrap();
            if v.is_finite() {
                best = v;
            } else {
                break;
            }
        }
    }
    best
}

/// `x` with `P(∑λN² > x) = alpha`.
pub fn spectral_quantile(spec: &SpectralApprox, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::DomainError(format!("alpha must be in (0,1), got {alpha}")));
    }
    let mut lo = 0.0;
    let mut hi = spec.trace().max(f64::MIN_POSITIVE);
    while quadratic_form_tail(spec, hi)? > alpha {
        lo = hi;
        hi *= 2.0;
        if hi > 1e6 * spec.trace() {
            return Err(Error::InversionUnconverged("quantile bracket diverged".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if quadratic_form_tail(spec, mid)? > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `reps` draws of `∑ λ_j Z_j²` over the significant eigenvalues; draw `i`
/// uses stream `i` of the seeded generator.
pub fn spectral_sample(spec: &SpectralApprox, reps: usize, seed: u64) -> Result<EmpiricalDist> {
    if reps < MIN_REPS {
        return Err(Error::DomainError(format!("need at least {MIN_REPS} replicates, got {reps}")));
    }
    let lambdas = spec.significant_eigenvalues();
    let draws: Vec<f64> = (0..reps as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = replicate_rng(seed, i);
            let mut acc = NeumaierSum::new();
            for &l in lambdas {
                let z: f64 = StandardNormal.sample(&mut rng);
                acc.add(l * z * z);
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
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn kernel_fixtures() {
        for s in [-3.0, -0.1, 0.0, 0.7, 2.5] {
            assert_eq!(kernel(s, 0.0), 0.0);
        }
        let e = std::f64::consts::E;
        assert!(rel(kernel(1.0, 1.0), e * (e - 2.5)) < 1e-14);
        assert!(rel(kernel(1.0, 1.0), 0.5933515277830371) < 1e-14);
        assert!(rel(kernel(2.0, -2.0), -271.9907501657212) < 1e-14);
        // Leading term x³/6 with x = st; the series avoids losing it to cancellation.
        let x = 1e-4f64 * 2e-4;
        assert!(rel(kernel(1e-4, 2e-4), x.powi(3) / 6.0 * (1.0 + x / 4.0) * (2.5e-8f64).exp()) < 1e-12);
    }

    #[test]
    fn kernel_is_symmetric_with_nonnegative_diagonal() {
        for i in -20..=20 {
            for j in -20..=20 {
                let (s, t) = (i as f64 * 0.37, j as f64 * 0.29);
                assert_eq!(kernel(s, t), kernel(t, s));
            }
            let t = i as f64 * 0.37;
            assert!(kernel(t, t) >= 0.0);
        }
    }

    #[test]
    fn closed_form_moments() {
        // √π (1 - (1 + 1/4 + 3/32)/√2)
        let m3 = PI.sqrt() * (1.0 - (1.0 + 0.25 + 0.09375) / 2f64.sqrt());
        assert!(rel(limit_mean(3.0).unwrap(), m3) < 1e-14);
        assert!(rel(limit_mean(3.0).unwrap(), 0.08831297888781273) < 1e-13);
        assert!(rel(limit_variance(3.0).unwrap(), 0.008070009014952997) < 1e-12);
        assert!(limit_mean(2.0).is_err());
        assert!(limit_variance(2.0).is_err());
        assert!(limit_variance(2.5).unwrap() > limit_variance(3.0).unwrap());
    }

    #[test]
    fn moments_positive_and_decreasing_on_grid() {
        let grid = [2.1, 2.5, 3.0, 5.0, 10.0, 100.0];
        let mut prev = (f64::INFINITY, f64::INFINITY);
        for b in grid {
            let m = limit_moments(b).unwrap();
            assert!(m.mean > 0.0 && m.variance > 0.0, "beta {b}");
            assert!(m.mean < prev.0 && m.variance < prev.1, "beta {b}");
            prev = (m.mean, m.variance);
        }
    }

    #[test]
    fn nystrom_reproduces_moments() {
        let spec = nystrom_spectrum(&KernelParams::new(3.0).unwrap(), 256).unwrap();
        assert!(rel(spec.trace(), limit_mean(3.0).unwrap()) < 1e-6);
        assert!(rel(2.0 * spec.sq_trace(), limit_variance(3.0).unwrap()) < 1e-4);
        let coarse = nystrom_spectrum(&KernelParams::new(3.0).unwrap(), 128).unwrap();
        assert!(rel(coarse.eigenvalues()[0], spec.eigenvalues()[0]) < 1e-8);
        assert!(spec.eigenvalues().windows(2).all(|w| w[0] >= w[1]));
        assert!(nystrom_spectrum(&KernelParams::new(3.0).unwrap(), 31).is_err());
        assert!(nystrom_spectrum(&KernelParams::new(3.0).unwrap(), 30).is_err());
    }

    #[test]
    fn chi_square_one_tail() {
        let spec = SpectralApprox::from_eigenvalues(vec![1.0], 3.0).unwrap();
        let p = quadratic_form_tail(&spec, 3.841458820694124).unwrap();
        assert!((p - 0.05).abs() < 1e-7, "{p}");
        assert_eq!(quadratic_form_tail(&spec, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn chi_square_two_over_two_tail() {
        // ½χ²₂ is Exp(1): P(Q > x) = e^{-x}.
        let spec = SpectralApprox::from_eigenvalues(vec![0.5, 0.5], 3.0).unwrap();
        for x in [0.1, 1.0, 2.995732273553991, 7.0] {
            let p = quadratic_form_tail(&spec, x).unwrap();
            assert!((p - (-x).exp()).abs() < 1e-8, "x={x} p={p}");
        }
    }

    #[test]
    fn tail_is_monotone_for_limit_spectrum() {
        let spec = nystrom_spectrum(&KernelParams::new(3.0).unwrap(), 128).unwrap();
        let mut prev = 1.0;
        for k in 0..40 {
            let p = quadratic_form_tail(&spec, k as f64 * 0.02).unwrap();
            assert!(p <= prev + 1e-9 && (0.0..=1.0).contains(&p));
            prev = p;
        }
    }

    #[test]
    fn spectral_sample_is_deterministic() {
        let spec = SpectralApprox::from_eigenvalues(vec![0.3, 0.1, 0.05], 3.0).unwrap();
        let a = spectral_sample(&spec, 2000, 9).unwrap();
        let b = spectral_sample(&spec, 2000, 9).unwrap();
        assert_eq!(a.sorted_values(), b.sorted_values());
        assert!(spectral_sample(&spec, 999, 9).is_err());
        let se = (2.0 * spec.sq_trace() / 2000.0).sqrt();
        assert!((a.mean() - spec.trace()).abs() < 4.0 * se);
    }

    #[test]
    fn wynn_accelerates_alternating_series() {
        // ln 2 = 1 - 1/2 + 1/3 - ...
        let mut s = 0.0;
        let partial: Vec<f64> = (1..=20)
            .map(|k| {
                s += if k % 2 == 1 { 1.0 } else { -1.0 } / k as f64;
                s
            })
            .collect();
        assert!((wynn_epsilon(&partial) - 2f64.ln()).abs() < 1e-10);
    }
}
