//! `cubic-lab`: command-line front end for the circle-method laboratory.
//!
//! Exit codes: 0 on success, 2 on a negative mathematical result (NCC
//! violation, no solution found, failed assumption check), 1 on any
//! operational error.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use commands::Output;

#[derive(Parser, Debug)]
#[command(name = "cubic-lab", version, about = "Circle-method laboratory for cubic Diophantine equations")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Seed for Monte Carlo paths.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Emit CSV instead of JSON where the report is tabular.
    #[arg(long, global = true)]
    pub csv: bool,
    /// Enumeration budget in lattice points (overrides CUBIC_LAB_BUDGET).
    #[arg(long, global = true)]
    pub budget: Option<u64>,
    /// Write the report to a file instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Record a run manifest that `replay` can re-run.
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
    /// Keep wall-clock fields in the report (they break byte-identical replay).
    #[arg(long, global = true)]
    pub timings: bool,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Invariants of a polynomial: Delta(C), Delta(phi), normalization.
    Analyze(PolyArg),
    /// Certify the necessary congruence condition for primes up to P0.
    Ncc {
        #[command(flatten)]
        poly: PolyArg,
        #[arg(long)]
        p0: u64,
    },
    /// rho(p^k), rho*(p^k) and the lifting threshold at one prime.
    Densities {
        #[command(flatten)]
        poly: PolyArg,
        #[arg(long)]
        p: u64,
        #[arg(long, default_value_t = 100)]
        p0: u64,
        #[arg(long, default_value_t = 3)]
        k_max: u32,
    },
    /// Truncated singular series: Euler product and q-sum.
    Series {
        #[command(flatten)]
        poly: PolyArg,
        #[arg(long)]
        p0: u64,
    },
    /// Singular integral on an explicit box or on a box built from a real point.
    Integral(IntegralArgs),
    /// Count integer zeros in a box.
    Count(CountArgs),
    /// Smallest solution by sup-norm shells.
    Search {
        #[command(flatten)]
        poly: PolyArg,
        #[arg(long)]
        max_shell: u64,
    },
    /// Exponent bookkeeping for the parameter choices.
    Exponents(ExponentArgs),
    /// Hessian rank census over |x| < H.
    Census {
        #[command(flatten)]
        poly: PolyArg,
        #[arg(long = "H", alias = "h")]
        h: u64,
        /// Rank modulo this prime instead of over the rationals.
        #[arg(long)]
        p: Option<u64>,
        /// Run the psi-good census for H = 1, 2, 4, .., H_max instead.
        #[arg(long)]
        h_max: Option<u64>,
        #[arg(long, default_value_t = 4.0)]
        constant: f64,
    },
    /// Numerical probes of the exponential-sum lemmas.
    #[command(subcommand)]
    Probe(Probe),
    /// Re-run the command recorded in a manifest.
    Replay {
        #[arg(value_name = "MANIFEST")]
        path: PathBuf,
    },
}

#[derive(Args, Debug, Clone)]
pub struct PolyArg {
    /// Polynomial in the JSON format (see README).
    #[arg(long = "poly", value_name = "FILE")]
    pub path: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Method {
    Auto,
    Coarea,
}

#[derive(Args, Debug)]
pub struct IntegralArgs {
    #[command(flatten)]
    pub poly: PolyArg,
    #[arg(long = "Z", alias = "z")]
    pub z: f64,
    /// Lower corner, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub lo: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub hi: Vec<f64>,
    /// Build the box from a real point of the cubic form instead of --lo/--hi.
    #[arg(long)]
    pub from_point: bool,
    /// Locate the point with h-invariant this size (default: n-variable mode).
    #[arg(long)]
    pub h: Option<usize>,
    #[arg(long, value_enum, default_value = "auto")]
    pub method: Method,
    #[arg(long, default_value_t = 1e-7)]
    pub tol: f64,
    /// Also report the slice volume V(0) (n <= 3).
    #[arg(long)]
    pub volume: bool,
}

#[derive(Args, Debug)]
pub struct CountArgs {
    #[command(flatten)]
    pub poly: PolyArg,
    /// Cube [-P, P]^n, or the scale of --lo/--hi.
    #[arg(long = "P", alias = "p")]
    pub p: Option<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub lo: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub hi: Vec<f64>,
    /// Cross-check against naive enumeration.
    #[arg(long)]
    pub naive: bool,
    /// Compare counts with the predicted main term at these scales.
    #[arg(long, value_delimiter = ',')]
    pub compare: Vec<f64>,
    #[arg(long, default_value_t = 20)]
    pub p0: u64,
    /// Singular-integral parameter for the comparison.
    #[arg(long, default_value_t = 16.0)]
    pub u: f64,
}

#[derive(Args, Debug)]
pub struct ExponentArgs {
    /// T as an integer; ignored with --theorem.
    #[arg(long = "T", alias = "t", default_value_t = 84)]
    pub t: i64,
    #[arg(long, default_value_t = 14)]
    pub n: i64,
    /// psi as a decimal or `p/q`; omitted or `inf` means psi = infinity.
    #[arg(long)]
    pub psi: Option<String>,
    #[arg(long)]
    pub delta: Option<String>,
    /// Check the symbolic choice T = 292(n^2 - 1) instead.
    #[arg(long, value_parser = ["h14"])]
    pub theorem: Option<String>,
    #[arg(long, default_value_t = 14)]
    pub n_from: i64,
    #[arg(long, default_value_t = 100)]
    pub n_to: i64,
    /// Threshold profile at these r values (decimals or `p/q`).
    #[arg(long, value_delimiter = ',')]
    pub thresholds: Vec<String>,
}

#[derive(Subcommand, Debug)]
pub enum Probe {
    /// Shrinking factors and the mean-square window of the minor-arc analysis.
    Minor {
        #[arg(long)]
        q: u64,
        #[arg(long)]
        a: u64,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
        theta: f64,
        #[arg(long = "P", alias = "p")]
        p: f64,
        #[arg(long = "H", alias = "h")]
        h: f64,
        /// Height M of the polynomial.
        #[arg(long = "M", alias = "height")]
        height: f64,
    },
    /// |S(alpha)| against the Weyl-type bound.
    Weyl {
        #[command(flatten)]
        poly: PolyArg,
        #[arg(long)]
        q: u64,
        #[arg(long, allow_hyphen_values = true)]
        a: i64,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
        theta: f64,
        #[arg(long = "P", alias = "p")]
        p: u64,
        #[arg(long, default_value_t = 1.0)]
        psi: f64,
    },
    /// Complete exponential sum S(q, a) by two evaluation routes.
    Gauss {
        #[command(flatten)]
        poly: PolyArg,
        #[arg(long)]
        q: u64,
        #[arg(long)]
        a: u64,
    },
    /// Exhaustive check of the divisibility lemma on a rational grid.
    Bootstrap {
        #[arg(long, default_value_t = 10)]
        q_max: u64,
        #[arg(long, default_value_t = 20)]
        m_max: u64,
    },
    /// Shrinking-lemma ratios over random symmetric matrices.
    Shrinking {
        #[arg(long)]
        n: usize,
        #[arg(long = "Z", alias = "z")]
        z: f64,
        #[arg(long, default_value_t = 2.0)]
        a: f64,
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    match run(&args) {
        Ok(negative) => ExitCode::from(if negative { 2 } else { 0 }),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

/// Parse and execute; returns whether the result was mathematically negative.
fn run(args: &[String]) -> Result<bool> {
    let cli = match Cli::try_parse_from(std::iter::once("cubic-lab".to_string()).chain(args.iter().cloned())) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return Ok(false);
        }
        Err(e) => bail!("{}", e.to_string().trim_end()),
    };
    if let Command::Replay { path } = &cli.command {
        let recorded = manifest::Manifest::load(path)?;
        return run(&recorded.args);
    }
    if let Some(k) = cli.global.threads {
        if k == 0 {
            bail!("field `threads`: must be at least 1");
        }
        // a pool may already exist when replaying; the results do not depend on it
        let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
    }
    let output = commands::execute(&cli)?;
    let text = render(&output, &cli.global)?;
    match &cli.global.out {
        Some(path) => std::fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    if let Some(path) = &cli.global.manifest {
        manifest::Manifest::record(&cli, args).save(path)?;
    }
    Ok(output.negative)
}

fn render(output: &Output, global: &Global) -> Result<String> {
    if global.csv {
        return match &output.csv {
            Some(csv) => Ok(csv.clone()),
            None => bail!("field `csv`: this command has no tabular output"),
        };
    }
    let mut value = output.json.clone();
    if !global.timings {
        strip_timings(&mut value);
    }
    Ok(serde_json::to_string_pretty(&value)? + "\n")
}

fn strip_timings(v: &mut serde_json::Value) {
    match v {
        serde_json::Value::Object(map) => {
            map.remove("elapsed");
            map.values_mut().for_each(strip_timings);
        }
        serde_json::Value::Array(items) => items.iter_mut().for_each(strip_timings),
        _ => {}
    }
}
