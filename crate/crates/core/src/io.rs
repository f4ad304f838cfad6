//! Data ingestion and plot-ready exports.
//!
//! Numbers are written with 17 significant digits so that every `f64`
//! survives a text round trip.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize, Serializer};
use serde_json::Number;

use crate::error::{Error, Result};
use crate::limit_null::{limit_moments, SpectralApprox};
use crate::sample::Sample;

/// Library version recorded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Schema tag of every JSON document this crate writes.
pub const SCHEMA: &str = "mgfnorm/1";

/// `x` with 17 significant digits.
pub fn format_sig17(x: f64) -> String {
    format!("{x:.16e}")
}

/// JSON number with 17 significant digits, `null` if not finite.
pub fn json_number(x: f64) -> serde_json::Value {
    if !x.is_finite() {
        return serde_json::Value::Null;
    }
    Number::from_str(&format_sig17(x))
        .map(serde_json::Value::Number)
        .unwrap_or(serde_json::Value::Null)
}

/// Serde helpers writing `f64` fields with 17 significant digits.
pub mod sig17 {
    use super::*;

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        json_number(*x).serialize(s)
    }

    pub mod option {
        use super::*;

        pub fn serialize<S: Serializer>(x: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
            match x {
                Some(v) => json_number(*v).serialize(s),
                None => s.serialize_none(),
            }
        }
    }

    pub mod vec {
        use super::*;

        pub fn serialize<S: Serializer>(x: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
            let v: Vec<serde_json::Value> = x.iter().map(|&v| json_number(v)).collect();
            v.serialize(s)
        }
    }
}

fn split_fields(line: &str) -> Vec<&str> {
    if line.contains(',') {
        line.split(',').map(str::trim).collect()
    } else if line.contains('\t') {
        line.split('\t').map(str::trim).collect()
    } else {
        line.split_whitespace().collect()
    }
}

/// Parses one value per line, or field `column` (0-based) of comma, tab or
/// whitespace delimited lines. Blank lines are ignored. A first line whose
/// selected field is not a number is treated as a header and skipped.
pub fn parse_values(text: &str, column: usize) -> Result<Vec<f64>> {
    let mut values = Vec::new();
    let mut first = true;
    for (k, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let fields = split_fields(line);
        let field = fields.get(column).copied().ok_or_else(|| Error::ParseError {
            line: k + 1,
            message: format!("column {column} missing ({} fields)", fields.len()),
        })?;
        match field.parse::<f64>() {
            Ok(v) => values.push(v),
            Err(_) if first => {}
            Err(_) => {
                return Err(Error::ParseError {
                    line: k + 1,
                    message: format!("'{field}' is not a number"),
                })
            }
        }
        first = false;
    }
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(values)
}

/// Reads a sample from a file; see [`parse_values`] for the format.
pub fn ingest(path: &Path, column: usize) -> Result<Sample> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Sample::new(parse_values(&text, column)?)
}

/// Writes to `path`, or standard output when `path` is `None`.
pub fn write_output(path: Option<&Path>, content: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, content).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

/// Eigenvalues and moment checks of a Nystrom spectrum.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumExport {
    pub schema: &'static str,
    pub version: &'static str,
    #[serde(serialize_with = "sig17::serialize")]
    pub beta: f64,
    pub nodes: usize,
    #[serde(serialize_with = "sig17::serialize")]
    pub trace: f64,
    #[serde(serialize_with = "sig17::serialize")]
    pub sq_trace: f64,
    #[serde(serialize_with = "sig17::serialize")]
    pub limit_mean: f64,
    #[serde(serialize_with = "sig17::serialize")]
    pub limit_variance: f64,
    pub clamped: usize,
    #[serde(serialize_with = "sig17::vec::serialize")]
    pub eigenvalues: Vec<f64>,
}

impl SpectrumExport {
    pub fn new(spec: &SpectralApprox) -> Result<Self> {
        let m = limit_moments(spec.beta())?;
        Ok(SpectrumExport {
            schema: SCHEMA,
            version: VERSION,
            beta: spec.beta(),
            nodes: spec.node_count(),
            trace: spec.trace(),
            sq_trace: spec.sq_trace(),
            limit_mean: m.mean,
            limit_variance: m.variance,
            clamped: spec.clamped(),
            eigenvalues: spec.eigenvalues().to_vec(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spectrum export serializes") + "\n"
    }
}

/// Structured error object for standard error.
pub fn error_json(e: &Error) -> String {
    serde_json::json!({
        "schema": SCHEMA,
        "error": { "kind": e.kind(), "message": e.to_string() },
    })
    .to_string()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Text,
}

impl FromStr for OutputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "text" => Ok(OutputFormat::Text),
            _ => Err(Error::DomainError(format!("unknown output format '{s}'"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::limit_null::{nystrom_spectrum, KernelParams};

    #[test]
    fn newline_delimited() {
        assert_eq!(parse_values("1\n2\n3\n", 0).unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(parse_values("\n 1.5 \n\n-2e3\n", 0).unwrap(), vec![1.5, -2000.0]);
    }

    #[test]
    fn delimited_with_header() {
        assert_eq!(parse_values("x,y\n1,9\n2,8\n3,7\n", 0).unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(parse_values("x\ty\n1\t9\n2\t8\n", 1).unwrap(), vec![9.0, 8.0]);
        assert_eq!(parse_values("a b\n1 9\n2 8\n", 1).unwrap(), vec![9.0, 8.0]);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        assert_eq!(
            parse_values("1\nabc\n3\n", 0),
            Err(Error::ParseError {
                line: 2,
                message: "'abc' is not a number".into()
            })
        );
        assert!(matches!(parse_values("1,2\n3\n", 1), Err(Error::ParseError { line: 2, .. })));
        assert_eq!(parse_values("header\n", 0), Err(Error::EmptyInput));
        assert_eq!(parse_values("", 0), Err(Error::EmptyInput));
    }

    #[test]
    fn ingest_enforces_sample_rules() {
        let dir = std::env::temp_dir().join(format!("mgfnorm-io-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let p = dir.join("const.txt");
        fs::write(&p, "2\n2\n2\n").unwrap();
        assert!(matches!(ingest(&p, 0), Err(Error::DegenerateSample(_))));
        fs::write(&p, "1\n2\n3\n").unwrap();
        assert_eq!(ingest(&p, 0).unwrap().values(), &[1.0, 2.0, 3.0]);
        assert!(matches!(ingest(&dir.join("missing"), 0), Err(Error::Io(_))));
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn numbers_keep_seventeen_digits() {
        let x = 0.1 + 0.2;
        let s = json_number(x).to_string();
        assert_eq!(s, "3.0000000000000004e-1");
        assert_eq!(s.parse::<f64>().unwrap(), x);
        assert_eq!(json_number(f64::NAN), serde_json::Value::Null);
    }

    #[test]
    fn json_parse_is_correctly_rounded() {
        let x = 0.0023578218570620146;
        let back: f64 = serde_json::from_str(&json_number(x).to_string()).unwrap();
        assert_eq!(back.to_bits(), x.to_bits());
    }

    #[test]
    fn spectrum_export_round_trips() {
        let spec = nystrom_spectrum(&KernelParams::new(3.0).unwrap(), 64).unwrap();
        let v: serde_json::Value = serde_json::from_str(&SpectrumExport::new(&spec).unwrap().to_json()).unwrap();
        assert_eq!(v["schema"], "mgfnorm/1");
        assert_eq!(v["trace"].as_f64().unwrap(), spec.trace());
        assert_eq!(v["eigenvalues"].as_array().unwrap().len(), spec.eigenvalues().len());
    }

    #[test]
    fn error_objects_are_json() {
        let v: serde_json::Value = serde_json::from_str(&error_json(&Error::EmptyInput)).unwrap();
        assert_eq!(v["error"]["kind"], "EmptyInput");
    }
}
