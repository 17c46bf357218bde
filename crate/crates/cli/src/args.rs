use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser, Serialize)]
#[command(name = "thermoforge", version, about = "Pressure functions of locally constant potentials")]
pub struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub out: Format,

    /// Cap on worker threads.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Pressure and its derivatives on a grid of parameters.
    Pressure(PressureArgs),
    /// Fit a 1-jet (a0, a1) at t* by a window-1 potential on n symbols.
    Fit1(Fit1Args),
    /// Fit a 2-jet (a0, a1, a2) at t* by a window-1 potential on n symbols.
    Fit2(Fit2Args),
    /// Extremal two-value solutions (c_a, eta) for the listed n.
    Table3(Table3Args),
    /// Convexity, divergence and rigidity diagnostics on a grid.
    Rigidity(RigidityArgs),
    /// Monte Carlo check of the normal approximation for Birkhoff sums.
    Cltsim(CltsimArgs),
    /// Pressure of inf, mid and sup discretizations of a decaying potential.
    Approx(ApproxArgs),
    /// Run the built-in consistency checks.
    Selftest,
}

#[derive(Debug, Args, Serialize)]
#[command(group = clap::ArgGroup::new("where").required(true).args(["t", "grid"]))]
pub struct PressureArgs {
    /// Potential JSON file, or `-` for stdin.
    #[arg(long)]
    pub potential: PathBuf,
    #[arg(long, allow_negative_numbers = true)]
    pub t: Option<f64>,
    /// `start:stop:step`, both ends included.
    #[arg(long)]
    pub grid: Option<Grid>,
    /// Highest derivative to report.
    #[arg(long, default_value_t = 0)]
    pub order: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct Fit1Args {
    #[arg(long)]
    pub tstar: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub a0: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub a1: f64,
    #[arg(long)]
    pub n: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct Fit2Args {
    #[command(flatten)]
    #[serde(flatten)]
    pub germ: Fit1Args,
    #[arg(long, allow_negative_numbers = true)]
    pub a2: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct Table3Args {
    /// Comma-separated values of n; defaults to 1e1, 1e2, …, 1e40.
    #[arg(long, value_delimiter = ',')]
    pub n_list: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Fabc,
}

#[derive(Debug, Args, Serialize)]
#[command(group = clap::ArgGroup::new("candidate_source").required(true).args(["family", "potential", "candidate"]))]
pub struct RigidityArgs {
    #[arg(long, value_enum, requires_all = ["a", "b", "c"])]
    pub family: Option<Family>,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long)]
    pub c: Option<f64>,
    /// Potential JSON file, or `-` for stdin; the candidate is `t ↦ P(tφ)`.
    #[arg(long)]
    pub potential: Option<PathBuf>,
    /// Any candidate as tagged JSON (`fabc`, `potential` or `tabulated`).
    #[arg(long)]
    pub candidate: Option<PathBuf>,
    /// `start:stop:step`, both ends included.
    #[arg(long)]
    pub grid: Grid,
    #[arg(long)]
    pub mphi: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct CltsimArgs {
    /// Potential JSON file, or `-` for stdin.
    #[arg(long)]
    pub potential: PathBuf,
    #[arg(long, allow_negative_numbers = true)]
    pub tstar: f64,
    /// Comma-separated orbit lengths.
    #[arg(long, value_delimiter = ',', required = true)]
    pub m: Vec<usize>,
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    /// Overridden by `THERMOFORGE_SEED`.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct ApproxArgs {
    /// Decaying potential JSON `{"n", "ratio", "rows"}`, or `-` for stdin.
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long, allow_negative_numbers = true)]
    pub t: f64,
    /// `first:last` or a comma-separated list.
    #[arg(long, default_value = "1:12")]
    pub windows: Windows,
}

/// Inclusive arithmetic grid `start:stop:step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..count).map(|k| self.start + k as f64 * self.step).collect()
    }
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [start, stop, step] = parts[..] else {
            return Err(format!("expected start:stop:step, got {s:?}"));
        };
        let num = |p: &str| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}"));
        let grid = Grid { start: num(start)?, stop: num(stop)?, step: num(step)? };
        if !(grid.step > 0.0) || !(grid.stop >= grid.start) || !grid.start.is_finite() || !grid.stop.is_finite() {
            return Err(format!("need step > 0 and start <= stop, got {s:?}"));
        }
        if (grid.stop - grid.start) / grid.step > 1e7 {
            return Err(format!("grid {s:?} has more than 10^7 points"));
        }
        Ok(grid)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct Windows(pub Vec<usize>);

impl FromStr for Windows {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let num = |p: &str| p.trim().parse::<usize>().map_err(|e| format!("{p:?}: {e}"));
        match s.split_once(':') {
            Some((a, b)) => {
                let (a, b) = (num(a)?, num(b)?);
                if a == 0 || b < a {
                    return Err(format!("need 1 <= first <= last, got {s:?}"));
                }
                Ok(Windows((a..=b).collect()))
            }
            None => s.split(',').map(num).collect::<Result<_, _>>().map(Windows),
        }
    }
}
