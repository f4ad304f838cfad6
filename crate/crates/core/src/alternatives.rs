//! Laws to draw samples from: the null, a handful of fixed alternatives, and
//! the contiguous family `f_n(x) = φ(x)(1 + g(x)/√n)`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal, StudentT};

use crate::error::{Error, Result};
use crate::rng::replicate_rng;
use crate::sample::Sample;

/// Saturation level of the clamped Hermite perturbation.
pub const HERMITE3_CLAMP: f64 = 5.0;

/// Bounded perturbations `g` with `∫ g φ = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ContiguousG {
    /// `g ≡ 0`.
    Zero,
    /// `g(x) = sin x` (odd, so centred under φ).
    Sine,
    /// `g(x) = scale · clamp(x³ - 3x, ±HERMITE3_CLAMP)`, odd and bounded.
    Hermite3 { scale: f64 },
}

impl ContiguousG {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            ContiguousG::Zero => 0.0,
            ContiguousG::Sine => x.sin(),
            ContiguousG::Hermite3 { scale } => {
                scale * (x * x * x - 3.0 * x).clamp(-HERMITE3_CLAMP, HERMITE3_CLAMP)
            }
        }
    }

    pub fn sup_abs(&self) -> f64 {
        match *self {
            ContiguousG::Zero => 0.0,
            ContiguousG::Sine => 1.0,
            ContiguousG::Hermite3 { scale } => scale.abs() * HERMITE3_CLAMP,
        }
    }

    fn name(&self) -> String {
        match self {
            ContiguousG::Zero => "zero".into(),
            ContiguousG::Sine => "sin".into(),
            ContiguousG::Hermite3 { scale } => format!("hermite3:{scale}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlternativeSpec {
    Normal,
    /// Uniform on `[-√3, √3]`.
    Uniform,
    /// `Exp(1) - 1`.
    ExponentialStandardized,
    StudentT { df: f64 },
    /// `p·N(μ₁, σ₁²) + (1-p)·N(μ₂, σ₂²)`.
    NormalMixture {
        p: f64,
        mu1: f64,
        mu2: f64,
        sigma1: f64,
        sigma2: f64,
    },
    Contiguous { g: ContiguousG },
}

impl AlternativeSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::DomainError(m));
        match *self {
            AlternativeSpec::StudentT { df } if !(df > 0.0 && df.is_finite()) => {
                bad(format!("student-t needs df > 0, got {df}"))
            }
            AlternativeSpec::NormalMixture {
                p,
                mu1,
                mu2,
                sigma1,
                sigma2,
            } => {
                if !(p > 0.0 && p < 1.0) {
                    bad(format!("mixture weight must be in (0,1), got {p}"))
                } else if !(sigma1 > 0.0 && sigma2 > 0.0) {
                    bad("mixture scales must be positive".into())
                } else if !(mu1.is_finite() && mu2.is_finite() && sigma1.is_finite() && sigma2.is_finite()) {
                    bad("mixture parameters must be finite".into())
                } else {
                    Ok(())
                }
            }
            AlternativeSpec::Contiguous {
                g: ContiguousG::Hermite3 { scale },
            } if !scale.is_finite() => bad("hermite3 scale must be finite".into()),
            _ => Ok(()),
        }
    }

    /// Checks `1 + g(x)/√n >= 0` on `[-10, 10]` with step 0.001.
    fn check_density(&self, n: usize) -> Result<()> {
        if let AlternativeSpec::Contiguous { g } = self {
            let root_n = (n as f64).sqrt();
            for k in 0..=20_000 {
                let x = -10.0 + k as f64 * 1e-3;
                if 1.0 + g.eval(x) / root_n < 0.0 {
                    return Err(Error::InvalidDensity(format!(
                        "1 + g(x)/√n < 0 at x = {x:.3} for n = {n}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Draws `n` values from stream `index` of the seeded generator.
    pub fn draw(&self, n: usize, seed: u64, index: u64) -> Result<Vec<f64>> {
        self.validate()?;
        self.check_density(n)?;
        let mut rng = replicate_rng(seed, index);
        let normal = |rng: &mut rand_chacha::ChaCha8Rng| -> f64 { StandardNormal.sample(rng) };
        let out = match *self {
            AlternativeSpec::Normal => (0..n).map(|_| normal(&mut rng)).collect(),
            AlternativeSpec::Uniform => {
                let r3 = 3f64.sqrt();
                (0..n).map(|_| rng.random_range(-r3..r3)).collect()
            }
            AlternativeSpec::ExponentialStandardized => (0..n)
                .map(|_| {
                    let e: f64 = Exp1.sample(&mut rng);
                    e - 1.0
                })
                .collect(),
            AlternativeSpec::StudentT { df } => {
                let t = StudentT::new(df).map_err(|e| Error::DomainError(e.to_string()))?;
                (0..n).map(|_| t.sample(&mut rng)).collect()
            }
            AlternativeSpec::NormalMixture {
                p,
                mu1,
                mu2,
                sigma1,
                sigma2,
            } => (0..n)
                .map(|_| {
                    let first = rng.random::<f64>() < p;
                    let z = normal(&mut rng);
                    if first {
                        mu1 + sigma1 * z
                    } else {
                        mu2 + sigma2 * z
                    }
                })
                .collect(),
            AlternativeSpec::Contiguous { g } => {
                let root_n = (n as f64).sqrt();
                let envelope = 1.0 + g.sup_abs() / root_n;
                let mut out = Vec::with_capacity(n);
                while out.len() < n {
                    let x = normal(&mut rng);
                    if g.sup_abs() == 0.0 {
                        out.push(x);
                        continue;
                    }
                    let u: f64 = rng.random();
                    if u * envelope <= 1.0 + g.eval(x) / root_n {
                        out.push(x);
                    }
                }
                out
            }
        };
        Ok(out)
    }
}

impl fmt::Display for AlternativeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlternativeSpec::Normal => write!(f, "normal"),
            AlternativeSpec::Uniform => write!(f, "uniform"),
            AlternativeSpec::ExponentialStandardized => write!(f, "exponential"),
            AlternativeSpec::StudentT { df } => write!(f, "t:{df}"),
            AlternativeSpec::NormalMixture {
                p,
                mu1,
                mu2,
                sigma1,
                sigma2,
            } => write!(f, "mixture:{p},{mu1},{mu2},{sigma1},{sigma2}"),
            AlternativeSpec::Contiguous { g } => write!(f, "contiguous:{}", g.name()),
        }
    }
}

impl FromStr for AlternativeSpec {
    type Err = Error;

    /// `normal`, `uniform`, `exponential`, `t:DF`, `mixture:P,MU1,MU2,S1,S2`,
    /// `contiguous:zero`, `contiguous:sin`, `contiguous:hermite3:SCALE`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::DomainError(format!("unknown alternative '{s}'"));
        let num = |v: &str| v.trim().parse::<f64>().map_err(|_| bad());
        let (name, params) = match s.split_once(':') {
            Some((a, b)) => (a, Some(b)),
            None => (s, None),
        };
        let spec = match (name.trim(), params) {
            ("normal", None) => AlternativeSpec::Normal,
            ("uniform", None) => AlternativeSpec::Uniform,
            ("exponential" | "exponential-standardized", None) => AlternativeSpec::ExponentialStandardized,
            ("t" | "student-t", Some(df)) => AlternativeSpec::StudentT { df: num(df)? },
            ("mixture" | "normal-mixture", Some(p)) => {
                let v: Vec<f64> = p.split(',').map(num).collect::<Result<_>>()?;
                if v.len() != 5 {
                    return Err(bad());
                }
                AlternativeSpec::NormalMixture {
                    p: v[0],
                    mu1: v[1],
                    mu2: v[2],
                    sigma1: v[3],
                    sigma2: v[4],
                }
            }
            ("contiguous", Some(g)) => {
                let g = match g.split_once(':') {
                    None if g == "zero" => ContiguousG::Zero,
                    None if g == "sin" => ContiguousG::Sine,
                    Some(("hermite3", c)) => ContiguousG::Hermite3 { scale: num(c)? },
                    _ => return Err(bad()),
                };
                AlternativeSpec::Contiguous { g }
            }
            _ => return Err(bad()),
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// `n` draws from `a` as a validated sample.
pub fn sample_alternative(a: &AlternativeSpec, n: usize, seed: u64) -> Result<Sample> {
    Sample::new(a.draw(n, seed, 0)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::standard_normals;
    use crate::stat::sample_skewness;

    #[test]
    fn parse_and_display_round_trip() {
        for s in [
            "normal",
            "uniform",
            "exponential",
            "t:5",
            "mixture:0.3,-1,1,0.5,2",
            "contiguous:zero",
            "contiguous:sin",
            "contiguous:hermite3:0.25",
        ] {
            let a: AlternativeSpec = s.parse().unwrap();
            assert_eq!(a.to_string(), s);
        }
        assert!("t:0".parse::<AlternativeSpec>().is_err());
        assert!("mixture:1.5,0,0,1,1".parse::<AlternativeSpec>().is_err());
        assert!("mixture:0.5,0,0,-1,1".parse::<AlternativeSpec>().is_err());
        assert!("cauchy".parse::<AlternativeSpec>().is_err());
    }

    #[test]
    fn zero_perturbation_is_exact_normal_sampling() {
        let a = AlternativeSpec::Contiguous { g: ContiguousG::Zero };
        assert_eq!(a.draw(100, 5, 3).unwrap(), standard_normals(5, 3, 100));
    }

    #[test]
    fn uniform_support_and_mean() {
        let x = AlternativeSpec::Uniform.draw(100_000, 1, 0).unwrap();
        let r3 = 3f64.sqrt();
        assert!(x.iter().all(|v| v.abs() <= r3));
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        assert!(mean.abs() < 0.02);
    }

    #[test]
    fn exponential_skewness_is_two() {
        let s = sample_alternative(&AlternativeSpec::ExponentialStandardized, 100_000, 11).unwrap();
        let b1 = sample_skewness(&s).unwrap();
        assert!((b1 - 2.0).abs() < 0.1, "{b1}");
    }

    #[test]
    fn contiguous_density_must_be_nonnegative() {
        let a = AlternativeSpec::Contiguous {
            g: ContiguousG::Hermite3 { scale: 2.0 },
        };
        // sup|g| = 10 requires n >= 100
        assert!(matches!(a.draw(50, 1, 0), Err(Error::InvalidDensity(_))));
        assert_eq!(a.draw(100, 1, 0).unwrap().len(), 100);
    }

    #[test]
    fn sine_perturbation_shifts_odd_moments() {
        // E_f[X] = ∫ x sin(x) φ(x) dx / √n = e^{-1/2}/√n
        let n = 4;
        let a = AlternativeSpec::Contiguous { g: ContiguousG::Sine };
        let mut sum = 0.0;
        let reps = 50_000;
        for i in 0..reps {
            sum += a.draw(n, 77, i).unwrap().iter().sum::<f64>();
        }
        let mean = sum / (reps as f64 * n as f64);
        let want = (-0.5f64).exp() / 2.0;
        assert!((mean - want).abs() < 4.0 * (1.0 / (reps as f64 * n as f64)).sqrt(), "{mean}");
    }
}
