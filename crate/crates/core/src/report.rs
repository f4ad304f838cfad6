//! Running the test on a data file and reporting the outcome.
//!
//! Exit-code convention for command-line use: `0` when the null is not
//! rejected at the smallest requested level, `2` when it is, `1` on error.
//! The decision uses the Monte Carlo p-value when one was computed and the
//! spectral p-value otherwise.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{format_sig17, ingest, sig17, OutputFormat, SCHEMA, VERSION};
use crate::limit_null::{nystrom_spectrum, spectral_quantile, tail_or_simulate, KernelParams};
use crate::mc::simulate_null;
use crate::rng::GENERATOR_NAME;
use crate::sample::TestConfig;
use crate::stat::statistic;
use crate::tolerances::{DEFAULT_BETA, MIN_REPS, TABLE_NYSTROM_NODES};

pub const EXIT_NOT_REJECTED: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_REJECTED: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Finite-sample null law by simulation.
    Mc,
    /// Limit null law from the Nystrom spectrum.
    Spectral,
    Both,
}

impl Method {
    pub fn uses_mc(self) -> bool {
        matches!(self, Method::Mc | Method::Both)
    }

    pub fn uses_spectral(self) -> bool {
        matches!(self, Method::Spectral | Method::Both)
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mc" => Ok(Method::Mc),
            "spectral" => Ok(Method::Spectral),
            "both" => Ok(Method::Both),
            _ => Err(Error::DomainError(format!("unknown method '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub input: PathBuf,
    /// 0-based field index for delimited input.
    pub column: usize,
    pub beta: f64,
    pub method: Method,
    pub alphas: Vec<f64>,
    pub reps: usize,
    pub seed: u64,
    pub format: OutputFormat,
    pub output: Option<PathBuf>,
    pub spectral_nodes: usize,
}

impl RunConfig {
    pub fn new(input: PathBuf) -> Self {
        RunConfig {
            input,
            column: 0,
            beta: DEFAULT_BETA,
            method: Method::Both,
            alphas: vec![0.05],
            reps: 10_000,
            seed: 1,
            format: OutputFormat::Json,
            output: None,
            spectral_nodes: TABLE_NYSTROM_NODES,
        }
    }

    pub fn validate(&self) -> Result<()> {
        TestConfig::new(self.beta)?;
        if self.method.uses_mc() && self.reps < MIN_REPS {
            return Err(Error::DomainError(format!(
                "method {:?} needs reps >= {MIN_REPS}, got {}",
                self.method, self.reps
            )));
        }
        if self.alphas.is_empty() {
            return Err(Error::DomainError("at least one alpha is required".into()));
        }
        if let Some(a) = self.alphas.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
            return Err(Error::DomainError(format!("alpha must lie in (0,1), got {a}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalValue {
    #[serde(serialize_with = "sig17::serialize")]
    pub alpha: f64,
    #[serde(serialize_with = "sig17::option::serialize")]
    pub mc: Option<f64>,
    #[serde(serialize_with = "sig17::option::serialize")]
    pub spectral: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub schema: String,
    pub version: String,
    #[serde(serialize_with = "sig17::serialize")]
    pub statistic: f64,
    pub n: usize,
    #[serde(serialize_with = "sig17::serialize")]
    pub beta: f64,
    #[serde(serialize_with = "sig17::option::serialize")]
    pub p_mc: Option<f64>,
    #[serde(serialize_with = "sig17::option::serialize")]
    pub p_spectral: Option<f64>,
    pub critical_values: Vec<CriticalValue>,
    pub rejected: bool,
    pub method: Method,
    pub seed: u64,
    pub generator: String,
    pub config: RunConfig,
}

impl TestReport {
    pub fn exit_code(&self) -> i32 {
        if self.rejected {
            EXIT_REJECTED
        } else {
            EXIT_NOT_REJECTED
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn to_text(&self) -> String {
        let opt = |x: Option<f64>| x.map(format_sig17).unwrap_or_else(|| "-".into());
        let mut out = String::new();
        let _ = writeln!(out, "{:<12} {}", "statistic", format_sig17(self.statistic));
        let _ = writeln!(out, "{:<12} {}", "n", self.n);
        let _ = writeln!(out, "{:<12} {}", "beta", format_sig17(self.beta));
        let _ = writeln!(out, "{:<12} {}", "p_mc", opt(self.p_mc));
        let _ = writeln!(out, "{:<12} {}", "p_spectral", opt(self.p_spectral));
        let _ = writeln!(out, "{:<12} {:<24} {:<24}", "alpha", "crit_mc", "crit_spectral");
        for c in &self.critical_values {
            let _ = writeln!(out, "{:<12} {:<24} {:<24}", c.alpha, opt(c.mc), opt(c.spectral));
        }
        let _ = writeln!(out, "{:<12} {}", "rejected", self.rejected);
        let _ = writeln!(out, "{:<12} {}", "seed", self.seed);
        out
    }

    pub fn render(&self) -> String {
        match self.config.format {
            OutputFormat::Json => self.to_json(),
            OutputFormat::Text => self.to_text(),
        }
    }
}

/// Reads the sample, computes the statistic and the requested p-values and
/// critical values.
pub fn run(cfg: &RunConfig) -> Result<TestReport> {
    cfg.validate()?;
    let sample = ingest(&cfg.input, cfg.column)?;
    let test_cfg = TestConfig::new(cfg.beta)?;
    let t = statistic(&sample, &test_cfg)?;
    let n = sample.len();

    let null = if cfg.method.uses_mc() {
        Some(simulate_null(n, &test_cfg, cfg.reps, cfg.seed)?)
    } else {
        None
    };
    let spectrum = if cfg.method.uses_spectral() {
        Some(nystrom_spectrum(&KernelParams::new(cfg.beta)?, cfg.spectral_nodes)?)
    } else {
        None
    };

    let p_mc = null.as_ref().map(|d| d.p_value(t)).transpose()?;
    let p_spectral = spectrum
        .as_ref()
        .map(|s| tail_or_simulate(s, t, cfg.seed))
        .transpose()?;
    let critical_values = cfg
        .alphas
        .iter()
        .map(|&alpha| {
            Ok(CriticalValue {
                alpha,
                mc: null.as_ref().map(|d| d.critical_value(alpha)).transpose()?,
                spectral: spectrum.as_ref().map(|s| spectral_quantile(s, alpha)).transpose()?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let smallest = cfg.alphas.iter().copied().fold(f64::INFINITY, f64::min);
    let decisive = p_mc.or(p_spectral).expect("at least one method runs");
    Ok(TestReport {
        schema: SCHEMA.into(),
        version: VERSION.into(),
        statistic: t,
        n,
        beta: cfg.beta,
        p_mc,
        p_spectral,
        critical_values,
        rejected: decisive <= smallest,
        method: cfg.method,
        seed: cfg.seed,
        generator: GENERATOR_NAME.into(),
        config: cfg.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alternatives::AlternativeSpec;
    use crate::rng::standard_normals;
    use std::fs;

    fn write_sample(name: &str, values: &[f64]) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("mgfnorm-report-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let p = dir.join(name);
        let text: String = values.iter().map(|v| format!("{v:e}\n")).collect();
        fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn config_validation() {
        let mut c = RunConfig::new("x".into());
        assert!(c.validate().is_ok());
        c.reps = 10;
        assert!(c.validate().is_err());
        c.method = Method::Spectral;
        assert!(c.validate().is_ok());
        c.alphas = vec![0.0];
        assert!(c.validate().is_err());
        c.alphas = vec![0.05];
        c.beta = 2.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn uniform_data_is_rejected_and_report_round_trips() {
        let x = AlternativeSpec::Uniform.draw(1000, 17, 0).unwrap();
        let mut cfg = RunConfig::new(write_sample("uniform.txt", &x));
        cfg.reps = 1000;
        cfg.alphas = vec![0.1, 0.05];
        let r = run(&cfg).unwrap();
        assert!(r.p_mc.unwrap() < 0.05 && r.p_spectral.unwrap() < 0.05, "{r:?}");
        assert_eq!(r.exit_code(), EXIT_REJECTED);

        let back: TestReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
        assert_eq!(run(&back.config).unwrap(), r);
    }

    #[test]
    fn spectral_only_normal_data() {
        let x = standard_normals(5, 0, 200);
        let mut cfg = RunConfig::new(write_sample("normal.txt", &x));
        cfg.method = Method::Spectral;
        cfg.spectral_nodes = 64;
        let r = run(&cfg).unwrap();
        assert!(r.p_mc.is_none());
        let p = r.p_spectral.unwrap();
        assert!((0.0..=1.0).contains(&p));
        assert!(r.critical_values[0].mc.is_none());
        assert!(r.to_text().contains("p_spectral"));
    }
}
