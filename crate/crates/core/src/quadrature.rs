//! Quadrature rules.
//!
//! * [`GaussHermite`]: the `m`-point rule for `∫ f(u) e^{-u²} du`. Nodes come
//!   from the Golub-Welsch eigenproblem and are polished by Newton steps on
//!   the orthonormal three-term recurrence; weights are kept as logarithms
//!   because the outer ones underflow long before the integrands we pair
//!   them with stop growing.
//! * [`GaussianWeightRule`]: the same rule rescaled to the weight
//!   `e^{-βt²}` via `t = u/√β`, `v = w/√β`.
//! * [`adaptive_gk15`]: adaptive Gauss-Kronrod (7, 15) on a finite interval.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::summation::NeumaierSum;
use crate::tolerances::QUAD_DOUBLING_REL;

#[derive(Debug, Clone)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    log_weights: Vec<f64>,
}

/// Orthonormal Hermite recurrence at `x`, returning `(p_m, p_{m-1}, log_scale)`
/// where the true values are the returned ones times `exp(log_scale)`.
fn hermite_recurrence(m: usize, x: f64) -> (f64, f64, f64) {
    let mut prev = 0.0;
    let mut cur = std::f64::consts::PI.powf(-0.25);
    let mut log_scale = 0.0;
    for k in 0..m {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * x * cur - (kf / (kf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        if cur.abs() > 1e150 {
            cur *= 1e-150;
            prev *= 1e-150;
            log_scale += 150.0 * std::f64::consts::LN_10;
        }
    }
    (cur, prev, log_scale)
}

impl GaussHermite {
    pub fn new(m: usize) -> Self {
        assert!(m >= 1, "Gauss-Hermite rule needs at least one node");
        let jacobi = DMatrix::from_fn(m, m, |i, j| {
            if i + 1 == j || j + 1 == i {
                ((i.max(j) as f64) / 2.0).sqrt()
            } else {
                0.0
            }
        });
        let mut guesses: Vec<f64> = jacobi.symmetric_eigenvalues().iter().copied().collect();
        guesses.sort_by(|a, b| a.partial_cmp(b).unwrap());

        let mf = m as f64;
        let mut nodes = Vec::with_capacity(m);
        let mut log_weights = Vec::with_capacity(m);
        for &x0 in &guesses {
            let mut x = x0;
            for _ in 0..4 {
                let (p, q, _) = hermite_recurrence(m, x);
                let dx = p / ((2.0 * mf).sqrt() * q);
                x -= dx;
                if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                    break;
                }
            }
            let (_, q, log_scale) = hermite_recurrence(m, x);
            nodes.push(x);
            log_weights.push(-mf.ln() - 2.0 * (q.abs().ln() + log_scale));
        }
        // Exact symmetry about zero.
        for i in 0..m / 2 {
            let j = m - 1 - i;
            let x = 0.5 * (nodes[j] - nodes[i]);
            nodes[i] = -x;
            nodes[j] = x;
            let lw = 0.5 * (log_weights[i] + log_weights[j]);
            log_weights[i] = lw;
            log_weights[j] = lw;
        }
        if m % 2 == 1 {
            nodes[m / 2] = 0.0;
        }
        GaussHermite { nodes, log_weights }
    }

    /// Shared, lazily built rule of order `m`.
    pub fn cached(m: usize) -> Arc<GaussHermite> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussHermite>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(rule) = cache.lock().unwrap().get(&m) {
            return Arc::clone(rule);
        }
        let rule = Arc::new(GaussHermite::new(m));
        cache
            .lock()
            .unwrap()
            .entry(m)
            .or_insert_with(|| Arc::clone(&rule))
            .clone()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    /// `∫ f(u) e^{-u²} du`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        let mut acc = NeumaierSum::new();
        for (&u, &lw) in self.nodes.iter().zip(&self.log_weights) {
            let w = lw.exp();
            if w > 0.0 {
                acc.add(w * f(u));
            }
        }
        acc.value()
    }
}

/// Quadrature rule for `∫ F(t) e^{-βt²} dt`.
#[derive(Debug, Clone)]
pub struct GaussianWeightRule {
    beta: f64,
    nodes: Vec<f64>,
    log_weights: Vec<f64>,
}

impl GaussianWeightRule {
    /// `m`-point rule; with `halfwidth_sigmas = Some(h)` nodes farther than
    /// `h` weight standard deviations (`σ = 1/√(2β)`) from zero are dropped.
    pub fn new(beta: f64, m: usize, halfwidth_sigmas: Option<f64>) -> Self {
        let gh = GaussHermite::cached(m);
        let scale = beta.sqrt();
        let limit = halfwidth_sigmas.map(|h| h / (2.0 * beta).sqrt());
        let mut nodes = Vec::with_capacity(m);
        let mut log_weights = Vec::with_capacity(m);
        for (&u, &lw) in gh.nodes().iter().zip(gh.log_weights()) {
            let t = u / scale;
            if limit.is_some_and(|l| t.abs() > l) {
                continue;
            }
            nodes.push(t);
            log_weights.push(lw - 0.5 * beta.ln());
        }
        GaussianWeightRule {
            beta,
            nodes,
            log_weights,
        }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn weights(&self) -> Vec<f64> {
        self.log_weights.iter().map(|lw| lw.exp()).collect()
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        let mut acc = NeumaierSum::new();
        for (&t, &lw) in self.nodes.iter().zip(&self.log_weights) {
            let w = lw.exp();
            if w > 0.0 {
                acc.add(w * f(t));
            }
        }
        acc.value()
    }

    /// `∫ g(t)² e^{-βt²} dt`, forming `(√v·g)²` so that large `g` paired with
    /// tiny weights neither overflows nor underflows prematurely.
    pub fn integrate_square<F: Fn(f64) -> Result<f64>>(&self, g: F) -> Result<f64> {
        let mut acc = NeumaierSum::new();
        for (&t, &lw) in self.nodes.iter().zip(&self.log_weights) {
            let r = (0.5 * lw).exp() * g(t)?;
            acc.add(r * r);
        }
        Ok(acc.value())
    }
}

/// Evaluates `eval` on the `m`- and `2m`-point Gaussian-weight rules and
/// returns the finer value, or `QuadratureUnconverged` if the two differ by
/// more than [`QUAD_DOUBLING_REL`] relative.
pub fn with_doubling_check<F>(
    beta: f64,
    m: usize,
    halfwidth_sigmas: Option<f64>,
    eval: F,
) -> Result<f64>
where
    F: Fn(&GaussianWeightRule) -> Result<f64>,
{
    let coarse = eval(&GaussianWeightRule::new(beta, m, halfwidth_sigmas))?;
    let fine = eval(&GaussianWeightRule::new(beta, 2 * m, halfwidth_sigmas))?;
    let scale = coarse.abs().max(fine.abs());
    if (coarse - fine).abs() > QUAD_DOUBLING_REL * scale && scale > 1e-300 {
        return Err(Error::QuadratureUnconverged(format!(
            "{m} nodes gave {coarse:e}, {} nodes gave {fine:e}",
            2 * m
        )));
    }
    Ok(fine)
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Adaptive (7, 15) Gauss-Kronrod on `[a, b]`, bisecting the interval with the
/// largest error estimate until the total estimate meets
/// `max(abs_tol, rel_tol·|I|)`. Returns `(integral, error_estimate)`; the
/// caller decides what an unmet tolerance means.
pub fn adaptive_gk15<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_intervals: usize,
) -> (f64, f64) {
    let (v, e) = gk15(&f, a, b);
    let mut pieces = vec![(a, b, v, e)];
    loop {
        let total: f64 = pieces.iter().map(|p| p.2).sum();
        let err: f64 = pieces.iter().map(|p| p.3).sum();
        if err <= abs_tol.max(rel_tol * total.abs()) || pieces.len() >= max_intervals {
            return (total, err);
        }
        let (idx, _) = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.partial_cmp(&y.1 .3).unwrap())
            .unwrap();
        let (lo, hi, _, _) = pieces.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return (total, err);
        }
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        pieces.push((lo, mid, v1, e1));
        pieces.push((mid, hi, v2, e2));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn hermite_moments() {
        for m in [1, 2, 7, 32, 128, 256] {
            let gh = GaussHermite::new(m);
            let s0 = gh.integrate(|_| 1.0);
            assert!((s0 - PI.sqrt()).abs() < 1e-13, "m={m} sum={s0}");
            if m >= 2 {
                let s2 = gh.integrate(|u| u * u);
                assert!((s2 - PI.sqrt() / 2.0).abs() < 1e-13, "m={m}");
            }
        }
    }

    #[test]
    fn small_rule_matches_closed_form() {
        // Two-point rule: nodes ±1/√2, weights √π/2.
        let gh = GaussHermite::new(2);
        assert!((gh.nodes()[1] - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((gh.log_weights()[0].exp() - PI.sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn large_rule_has_finite_log_weights() {
        let gh = GaussHermite::new(512);
        assert!(gh.log_weights().iter().all(|w| w.is_finite()));
        // ∫ e^{0.8u²} e^{-u²} du = √(π/0.2), where relative weight accuracy matters.
        let v = gh.integrate(|u| (0.8 * u * u).exp());
        assert!((v / (PI / 0.2).sqrt() - 1.0).abs() < 1e-12, "{v}");
    }

    #[test]
    fn gaussian_weight_rule_integrates_shifted_exponential() {
        // ∫ e^{at} e^{-βt²} dt = √(π/β) e^{a²/(4β)}
        let (beta, a) = (3.0, 2.5);
        let rule = GaussianWeightRule::new(beta, 128, None);
        let got = rule.integrate(|t| (a * t).exp());
        let want = (PI / beta).sqrt() * (a * a / (4.0 * beta)).exp();
        assert!((got / want - 1.0).abs() < 1e-14);
    }

    #[test]
    fn halfwidth_truncation_drops_outer_nodes() {
        let full = GaussianWeightRule::new(3.0, 64, None);
        let cut = GaussianWeightRule::new(3.0, 64, Some(6.0));
        assert!(cut.len() < full.len());
        let limit = 6.0 / 6f64.sqrt();
        assert!(cut.nodes().iter().all(|t| t.abs() <= limit));
    }

    #[test]
    fn gk15_adaptive_handles_peaks() {
        let (v, e) = adaptive_gk15(|x| 1.0 / (1e-4 + x * x), -1.0, 1.0, 1e-10, 1e-12, 500);
        let want = 2.0 * (1.0f64 / 1e-2).atan() / 1e-2;
        assert!((v - want).abs() < 1e-8, "{v} vs {want}, est {e}");
    }
}
