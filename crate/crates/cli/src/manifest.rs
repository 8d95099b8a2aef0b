use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use crate::{Cli, Command, PolyArg, Probe};

/// Everything needed to re-run a command and compare its output.
#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    /// Arguments after the program name, without `--manifest`.
    pub args: Vec<String>,
    pub inputs: Vec<String>,
    pub seed: u64,
    pub versions: BTreeMap<String, String>,
    pub outputs: Vec<String>,
}

fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Analyze(_) => "analyze",
        Command::Ncc { .. } => "ncc",
        Command::Densities { .. } => "densities",
        Command::Series { .. } => "series",
        Command::Integral(_) => "integral",
        Command::Count(_) => "count",
        Command::Search { .. } => "search",
        Command::Exponents(_) => "exponents",
        Command::Census { .. } => "census",
        Command::Probe(_) => "probe",
        Command::Replay { .. } => "replay",
    }
}

fn poly_input(cmd: &Command) -> Option<&PolyArg> {
    match cmd {
        Command::Analyze(p) => Some(p),
        Command::Ncc { poly, .. }
        | Command::Densities { poly, .. }
        | Command::Series { poly, .. }
        | Command::Search { poly, .. }
        | Command::Census { poly, .. } => Some(poly),
        Command::Integral(a) => Some(&a.poly),
        Command::Count(a) => Some(&a.poly),
        Command::Probe(Probe::Weyl { poly, .. } | Probe::Gauss { poly, .. }) => Some(poly),
        _ => None,
    }
}

fn without_manifest(args: &[String]) -> Vec<String> {
    let mut out = Vec::new();
    let mut skip = false;
    for a in args {
        if skip {
            skip = false;
        } else if a == "--manifest" {
            skip = true;
        } else if !a.starts_with("--manifest=") {
            out.push(a.clone());
        }
    }
    out
}

impl Manifest {
    pub fn record(cli: &Cli, args: &[String]) -> Manifest {
        let mut versions = BTreeMap::new();
        versions.insert("cubic-lab".to_string(), env!("CARGO_PKG_VERSION").to_string());
        Manifest {
            command: command_name(&cli.command).to_string(),
            args: without_manifest(args),
            inputs: poly_input(&cli.command).map(|p| p.path.display().to_string()).into_iter().collect(),
            seed: cli.global.seed,
            versions,
            outputs: vec![cli.global.out.as_ref().map_or("stdout".to_string(), |p| p.display().to_string())],
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n").with_context(|| format!("writing {}", path.display()))
    }

    pub fn load(path: &Path) -> Result<Manifest> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("manifest {}", path.display()))
    }
}
