//! Run configuration: flags layered over an optional JSON file.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "entrenet", version, about = "Ridge entropy network reconstruction and analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Reconstruct,
    Analyze,
    Validate,
    Sweep,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a reconstruction from balance sheets or a trade matrix.
    Reconstruct(Flags),
    /// Truncate a weighted matrix to a binary network and compute its metrics.
    Analyze(Flags),
    /// Density table and fit reports for the four trade-matrix scenarios.
    Validate(Flags),
    /// Fit statistics of a trade-matrix reconstruction across a beta grid.
    Sweep(Flags),
}

impl Command {
    pub fn split(self) -> (CommandKind, Flags) {
        match self {
            Command::Reconstruct(f) => (CommandKind::Reconstruct, f),
            Command::Analyze(f) => (CommandKind::Analyze, f),
            Command::Validate(f) => (CommandKind::Validate, f),
            Command::Sweep(f) => (CommandKind::Sweep, f),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    #[default]
    NoCut,
    Q2Cut,
}

/// Every field is optional so a config file can be partial; flags win.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Flags {
    /// Input CSV: balance sheets or a labeled weighted matrix.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// JSON file with any of these settings; flags override it.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Ridge penalty.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Comma-separated beta grid for `sweep`.
    #[arg(long, value_delimiter = ',')]
    pub betas: Option<Vec<f64>>,
    /// Balance-sheet year to reconstruct.
    #[arg(long)]
    pub year: Option<i32>,
    /// Category rules (JSON); defaults to the bank rules.
    #[arg(long)]
    pub rules: Option<PathBuf>,
    /// Truncation percentile for `analyze`.
    #[arg(long)]
    pub percentile: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Randomized networks in the null ensemble.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub swaps_per_edge: Option<usize>,
    /// Force zero data cells to zero in trade reconstructions.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub link_constraints: Option<bool>,
    /// Trade-matrix variant for `reconstruct` and `sweep`.
    #[arg(long, value_enum)]
    pub variant: Option<Variant>,
    /// Fit a relative threshold to this density in `validate`.
    #[arg(long)]
    pub target_density: Option<f64>,
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
}

macro_rules! overlay {
    ($base:ident, $top:ident, $($field:ident),*) => {
        $( if $top.$field.is_some() { $base.$field = $top.$field.clone(); } )*
    };
}

/// Fully resolved settings of one run; hashed into the provenance block.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: &'static str,
    pub input: PathBuf,
    pub out: PathBuf,
    pub format: Format,
    pub beta: f64,
    pub betas: Vec<f64>,
    pub year: Option<i32>,
    pub rules: Option<PathBuf>,
    pub percentile: f64,
    pub seed: u64,
    pub samples: usize,
    pub swaps_per_edge: usize,
    pub link_constraints: bool,
    pub variant: Variant,
    pub target_density: Option<f64>,
    pub tolerance: f64,
    pub max_iterations: usize,
}

fn load_file(path: &Path) -> Result<Flags, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::usage(format!("invalid config {}: {e}", path.display())))
}

impl RunConfig {
    pub fn resolve(kind: CommandKind, flags: Flags) -> Result<Self, CliError> {
        let mut merged = match &flags.config {
            Some(path) => load_file(path)?,
            None => Flags::default(),
        };
        overlay!(
            merged, flags, input, out, format, beta, betas, year, rules, percentile, seed, samples,
            swaps_per_edge, link_constraints, variant, target_density, tolerance, max_iterations
        );
        let defaults = entrenet_core::SolverConfig64::default();
        let cfg = RunConfig {
            command: match kind {
                CommandKind::Reconstruct => "reconstruct",
                CommandKind::Analyze => "analyze",
                CommandKind::Validate => "validate",
                CommandKind::Sweep => "sweep",
            },
            input: merged.input.ok_or_else(|| CliError::usage("--input is required"))?,
            out: merged.out.unwrap_or_else(|| PathBuf::from(".")),
            format: merged.format.unwrap_or_default(),
            beta: merged.beta.unwrap_or(100.0),
            betas: merged
                .betas
                .unwrap_or_else(|| entrenet_core::evaluation::DEFAULT_BETA_GRID.to_vec()),
            year: merged.year,
            rules: merged.rules,
            percentile: merged.percentile.unwrap_or(80.0),
            seed: merged.seed.unwrap_or(0),
            samples: merged.samples.unwrap_or(1000),
            swaps_per_edge: merged
                .swaps_per_edge
                .unwrap_or(entrenet_core::netanalysis::DEFAULT_SWAPS_PER_EDGE),
            link_constraints: merged.link_constraints.unwrap_or(false),
            variant: merged.variant.unwrap_or_default(),
            target_density: merged.target_density,
            tolerance: merged.tolerance.unwrap_or(defaults.tolerance),
            max_iterations: merged.max_iterations.unwrap_or(defaults.max_iterations),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        if !self.input.is_file() {
            return Err(CliError::usage(format!("input {} does not exist", self.input.display())));
        }
        if let Some(r) = &self.rules {
            if !r.is_file() {
                return Err(CliError::usage(format!("rules {} does not exist", r.display())));
            }
        }
        let bad_beta = |b: f64| !b.is_finite() || b < 0.0;
        if bad_beta(self.beta) {
            return Err(CliError::usage("--beta must be finite and nonnegative"));
        }
        if self.betas.is_empty() {
            return Err(CliError::usage("--betas must list at least one value"));
        }
        if self.betas.iter().any(|&b| bad_beta(b)) {
            return Err(CliError::usage("--betas values must be finite and nonnegative"));
        }
        if !(self.percentile > 0.0 && self.percentile < 100.0) {
            return Err(CliError::usage("--percentile must lie in (0, 100)"));
        }
        if self.samples == 0 {
            return Err(CliError::usage("--samples must be at least 1"));
        }
        if let Some(d) = self.target_density {
            if !(d > 0.0 && d <= 1.0) {
                return Err(CliError::usage("--target-density must lie in (0, 1]"));
            }
        }
        if !(self.tolerance > 0.0) || self.max_iterations == 0 {
            return Err(CliError::usage("--tolerance and --max-iterations must be positive"));
        }
        Ok(())
    }

    pub fn solver(&self) -> entrenet_core::SolverConfig64 {
        entrenet_core::SolverConfig64 {
            tolerance: self.tolerance,
            max_iterations: self.max_iterations,
        }
    }
}
