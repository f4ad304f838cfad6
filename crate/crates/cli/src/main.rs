//! `mgfnorm` command-line tool.
//!
//! Exit codes: 0 = not rejected (or subcommand succeeded), 2 = rejected at
//! the smallest requested alpha, 1 = error. Errors are written to standard
//! error as JSON objects `{"schema": "mgfnorm/1", "error": {"kind", "message"}}`.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use mgfnorm::alternatives::AlternativeSpec;
use mgfnorm::asymptotics::skewness_limit_scaled;
use mgfnorm::io::{error_json, format_sig17, ingest, write_output, OutputFormat, SpectrumExport, SCHEMA};
use mgfnorm::limit_null::{limit_moments, nystrom_spectrum, KernelParams};
use mgfnorm::mc::{
    crit_table_csv, critical_value_table, power_estimate, simulate_null, DEFAULT_ALPHA_GRID,
    DEFAULT_BETA_GRID, DEFAULT_N_GRID, DEFAULT_REPS,
};
use mgfnorm::report::{self, Method, RunConfig, EXIT_ERROR};
use mgfnorm::rng::derive_seed;
use mgfnorm::stat::sample_skewness;
use mgfnorm::tolerances::{DEFAULT_BETA, TABLE_NYSTROM_NODES};
use mgfnorm::{Error, TestConfig};

#[derive(Parser)]
#[command(name = "mgfnorm", version, about = "Normality test based on the empirical moment generating function")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Mc,
    Spectral,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Test a sample for normality.
    Run {
        #[arg(long)]
        input: PathBuf,
        /// 0-based field index for delimited input.
        #[arg(long, default_value_t = 0)]
        column: usize,
        #[arg(long, default_value_t = DEFAULT_BETA)]
        beta: f64,
        #[arg(long, value_enum, default_value = "both")]
        method: MethodArg,
        #[arg(long, value_delimiter = ',', default_value = "0.05")]
        alpha: Vec<f64>,
        #[arg(long, default_value_t = DEFAULT_REPS)]
        reps: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, value_enum, default_value = "json")]
        format: FormatArg,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, default_value_t = TABLE_NYSTROM_NODES)]
        spectral_nodes: usize,
    },
    /// Monte Carlo critical values as CSV (n, beta, alpha, crit, reps, seed).
    Critvals {
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_N_GRID)]
        n_list: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_BETA_GRID)]
        beta_list: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_ALPHA_GRID)]
        alpha_list: Vec<f64>,
        #[arg(long, default_value_t = DEFAULT_REPS)]
        reps: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Eigenvalues of the limit null law as JSON.
    Spectrum {
        #[arg(long, default_value_t = DEFAULT_BETA)]
        beta: f64,
        #[arg(long, default_value_t = TABLE_NYSTROM_NODES)]
        nodes: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Monte Carlo power against one or more alternatives, as CSV.
    Power {
        /// NAME[:params], e.g. uniform, t:5, mixture:0.5,-1,1,0.5,0.5, contiguous:sin.
        #[arg(long, required = true)]
        alt: Vec<String>,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = DEFAULT_BETA)]
        beta: f64,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value_t = 1000)]
        reps: usize,
        #[arg(long, default_value_t = DEFAULT_REPS)]
        null_reps: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Mean and variance of the limit null law, as CSV.
    LimitMoments {
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_BETA_GRID)]
        beta_list: Vec<f64>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Large-beta scaled statistic next to the squared sample skewness, as CSV.
    SkewLimit {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 0)]
        column: usize,
        #[arg(long, value_delimiter = ',', default_values_t = [1e2, 1e3, 1e4])]
        beta_grid: Vec<f64>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

/// Salt separating the power simulation streams from the null streams.
const POWER_STREAM: u64 = 0x706f776572;

fn dispatch(command: Command) -> Result<u8, Error> {
    match command {
        Command::Run {
            input,
            column,
            beta,
            method,
            alpha,
            reps,
            seed,
            format,
            output,
            spectral_nodes,
        } => {
            let cfg = RunConfig {
                input,
                column,
                beta,
                method: match method {
                    MethodArg::Mc => Method::Mc,
                    MethodArg::Spectral => Method::Spectral,
                    MethodArg::Both => Method::Both,
                },
                alphas: alpha,
                reps,
                seed,
                format: match format {
                    FormatArg::Json => OutputFormat::Json,
                    FormatArg::Text => OutputFormat::Text,
                },
                output,
                spectral_nodes,
            };
            let r = report::run(&cfg)?;
            write_output(cfg.output.as_deref(), &r.render())?;
            Ok(r.exit_code() as u8)
        }
        Command::Critvals {
            n_list,
            beta_list,
            alpha_list,
            reps,
            seed,
            output,
        } => {
            let rows = critical_value_table(&n_list, &beta_list, &alpha_list, reps, seed)?;
            write_output(output.as_deref(), &crit_table_csv(&rows))?;
            Ok(0)
        }
        Command::Spectrum { beta, nodes, output } => {
            let spec = nystrom_spectrum(&KernelParams::new(beta)?, nodes)?;
            write_output(output.as_deref(), &SpectrumExport::new(&spec)?.to_json())?;
            Ok(0)
        }
        Command::Power {
            alt,
            n,
            beta,
            alpha,
            reps,
            null_reps,
            seed,
            output,
        } => {
            let alts: Vec<AlternativeSpec> = alt.iter().map(|a| a.parse()).collect::<Result<_, _>>()?;
            let cfg = TestConfig::new(beta)?;
            let null = simulate_null(n, &cfg, null_reps, seed)?;
            let power_seed = derive_seed(seed, POWER_STREAM);
            let mut out = String::from("alternative,n,beta,alpha,power,reps,null_reps,seed\n");
            for a in &alts {
                let p = power_estimate(a, n, &cfg, alpha, reps, power_seed, &null)?;
                let _ = writeln!(out, "\"{a}\",{n},{beta},{alpha},{},{reps},{null_reps},{seed}", format_sig17(p));
            }
            write_output(output.as_deref(), &out)?;
            Ok(0)
        }
        Command::LimitMoments { beta_list, output } => {
            let mut out = String::from("beta,mean,variance\n");
            for beta in beta_list {
                let m = limit_moments(beta)?;
                let _ = writeln!(out, "{beta},{},{}", format_sig17(m.mean), format_sig17(m.variance));
            }
            write_output(output.as_deref(), &out)?;
            Ok(0)
        }
        Command::SkewLimit {
            input,
            column,
            beta_grid,
            output,
        } => {
            let s = ingest(&input, column)?;
            let b2 = sample_skewness(&s)?.powi(2);
            let mut out = String::from("beta,scaled,skewness_squared\n");
            for beta in beta_grid {
                let v = skewness_limit_scaled(&s, beta)?;
                let _ = writeln!(out, "{beta},{},{}", format_sig17(v), format_sig17(b2));
            }
            write_output(output.as_deref(), &out)?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.render().to_string();
            eprintln!("{}", usage_error_json(msg.lines().next().unwrap_or("invalid arguments")));
            return ExitCode::from(EXIT_ERROR as u8);
        }
    };
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("{}", error_json(&e));
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}

fn usage_error_json(message: &str) -> String {
    serde_json::json!({
        "schema": SCHEMA,
        "error": { "kind": "UsageError", "message": message.trim() },
    })
    .to_string()
}
