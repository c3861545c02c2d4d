//! Command-line arguments.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pom_core::SamplerKind;

const SYMBOLS: &str = "\
Parameters and their symbols:
  --beta          β    inverse temperature
  --j1, --j2      J1, J2  couplings on x-edges and z-edges (--j sets J1 = J2)
  --delta         Δ    constraint radius around the constant state e(θ)
  --lambda        λ    mass regulator of the finite-lattice spin-wave sum
  --tau           τ    tolerance of the Gaussian approximation check
  --theta         θ    tilt angle of the constant state e(θ)

Every subcommand accepts --config FILE with `key = value` lines (or a
manifest.json); flags given on the command line override the file.";

#[derive(Debug, Parser)]
#[command(name = "pom", version, about = "Plaquette orbital model toolkit", after_help = SYMBOLS, args_override_self = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run Markov chains and write records.csv and manifest.json
    #[command(after_help = SYMBOLS)]
    Simulate(SimulateArgs),
    /// Tabulate the spin-wave free energy F(θ) into ftheta.csv
    #[command(after_help = SYMBOLS)]
    Spinwave(SpinwaveArgs),
    /// Run the verification suite and print a pass/fail table
    #[command(after_help = SYMBOLS)]
    Verify(VerifyArgs),
    /// Estimate a constrained (or full) partition function as JSON
    #[command(after_help = SYMBOLS)]
    Oracle(OracleArgs),
    /// Analyse a simulate run directory into report.json
    #[command(after_help = SYMBOLS)]
    Analyze(AnalyzeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Metropolis,
    Enhanced,
}

impl From<KindArg> for SamplerKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Metropolis => SamplerKind::Metropolis,
            KindArg::Enhanced => SamplerKind::Enhanced,
        }
    }
}

impl KindArg {
    pub fn name(self) -> &'static str {
        match self {
            KindArg::Metropolis => "metropolis",
            KindArg::Enhanced => "enhanced",
        }
    }
}

/// Accepts `100000`, `100_000` and `1e5`.
pub fn parse_count(s: &str) -> Result<u64, String> {
    let t = s.replace('_', "");
    if let Ok(v) = t.parse::<u64>() {
        return Ok(v);
    }
    match t.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.fract() == 0.0 && v < 1.8e19 => Ok(v as u64),
        _ => Err(format!("`{s}` is not a non-negative integer")),
    }
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Settings file (`key = value` lines or a manifest.json)
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Worker threads [default: available parallelism]
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Lattice size N (even)
    #[arg(long, default_value_t = 10)]
    pub n: usize,
    /// Inverse temperature β
    #[arg(long, default_value_t = 8.0)]
    pub beta: f64,
    /// Coupling J1 on x-edges
    #[arg(long, default_value_t = 1.0)]
    pub j1: f64,
    /// Coupling J2 on z-edges
    #[arg(long, default_value_t = 1.0)]
    pub j2: f64,
    #[arg(long, value_enum, default_value_t = KindArg::Enhanced)]
    pub kind: KindArg,
    /// Measured sweeps per chain
    #[arg(long, default_value = "10000", value_parser = parse_count)]
    pub sweeps: u64,
    /// Discarded sweeps per chain
    #[arg(long, default_value = "1000", value_parser = parse_count)]
    pub thermalization: u64,
    #[arg(long, default_value = "1", value_parser = parse_count)]
    pub measure_every: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Independent chains, each on its own random stream
    #[arg(long, default_value = "1", value_parser = parse_count)]
    pub chains: u64,
    /// Plaquette flips per sweep as a fraction of N²/4 (enhanced only)
    #[arg(long, default_value_t = 0.5)]
    pub flip_fraction: f64,
    /// Initial proposal half-width in radians
    #[arg(long, default_value_t = 1.0)]
    pub proposal_width: f64,
    /// Tune the width toward 50% acceptance during thermalization
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    pub tune_width: bool,
    /// Initial state: random, aligned-x, aligned-z, ground, or an x,y,angle CSV file
    #[arg(long, default_value = "random")]
    pub init: String,
    /// Base direction angle φ of a `ground` initial state
    #[arg(long, default_value_t = 0.0)]
    pub base_angle: f64,
    /// Flip-set CSV (x,y corners) applied to a `ground` initial state
    #[arg(long)]
    pub flips: Option<PathBuf>,
    /// Accumulate truncated [S^x]² correlations into correlation.csv
    #[arg(long, default_value_t = false, action = clap::ArgAction::Set)]
    pub correlations: bool,
    /// Write each chain's final configuration under final/
    #[arg(long, default_value_t = false, action = clap::ArgAction::Set)]
    pub save_final: bool,
    /// Run directory
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

impl SimulateArgs {
    /// Every setting that affects the records, as written to the manifest.
    pub fn to_config(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            m.insert(k.to_string(), v);
        };
        put("n", self.n.to_string());
        put("beta", self.beta.to_string());
        put("j1", self.j1.to_string());
        put("j2", self.j2.to_string());
        put("kind", self.kind.name().to_string());
        put("sweeps", self.sweeps.to_string());
        put("thermalization", self.thermalization.to_string());
        put("measure-every", self.measure_every.to_string());
        put("seed", self.seed.to_string());
        put("chains", self.chains.to_string());
        put("flip-fraction", self.flip_fraction.to_string());
        put("proposal-width", self.proposal_width.to_string());
        put("tune-width", self.tune_width.to_string());
        put("init", self.init.clone());
        put("base-angle", self.base_angle.to_string());
        if let Some(f) = &self.flips {
            put("flips", f.display().to_string());
        }
        put("correlations", self.correlations.to_string());
        put("save-final", self.save_final.to_string());
        m
    }
}

#[derive(Debug, Clone, Args)]
pub struct SpinwaveArgs {
    /// Smallest θ of the grid
    #[arg(long, default_value_t = 0.01)]
    pub theta_min: f64,
    /// Largest θ of the grid [default: π/2 - 0.01]
    #[arg(long, default_value_t = FRAC_PI_2 - 0.01)]
    pub theta_max: f64,
    #[arg(long, default_value_t = 200)]
    pub points: usize,
    /// Inverse temperature β
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    /// Coupling J (J1 = J2 = J)
    #[arg(long, default_value_t = 1.0)]
    pub j: f64,
    /// Also tabulate the finite-lattice F_N with this N (needs λ > 0)
    #[arg(long)]
    pub n: Option<usize>,
    /// Mass regulator λ of F_N
    #[arg(long, default_value_t = 0.0)]
    pub lambda: f64,
    /// Initial quadrature grid per axis
    #[arg(long, default_value_t = 256)]
    pub grid: usize,
    /// Quadrature tolerance
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Fixture {
    /// Negate one off-diagonal pair of M(k, θ)
    SignError,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// Lattice size N of the Gaussian approximation check (2 or 4)
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    /// Inverse temperature β of the Gaussian approximation check
    #[arg(long, default_value_t = 50.0)]
    pub beta: f64,
    /// Coupling J (J1 = J2 = J)
    #[arg(long, default_value_t = 1.0)]
    pub j: f64,
    /// Monte Carlo samples of the constrained partition function
    #[arg(long, default_value = "1000000", value_parser = parse_count)]
    pub samples: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Tolerance τ; the check passes within 3τ with standard error below τ/3
    #[arg(long, default_value_t = 0.1)]
    pub tau: f64,
    /// Constraint radius Δ [default: (βJ)^(-5/12)]
    #[arg(long)]
    pub delta: Option<f64>,
    /// Tilt angle θ
    #[arg(long, default_value_t = FRAC_PI_4)]
    pub theta: f64,
    /// Deliberately broken input, for testing the suite itself
    #[arg(long, value_enum)]
    pub fixture: Option<Fixture>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct OracleArgs {
    /// Tilt angle θ
    #[arg(long, default_value_t = FRAC_PI_4)]
    pub theta: f64,
    /// Constraint radius Δ [default: (βJ)^(-5/12)]
    #[arg(long)]
    pub delta: Option<f64>,
    /// Inverse temperature β
    #[arg(long, default_value_t = 50.0)]
    pub beta: f64,
    /// Coupling J (J1 = J2 = J)
    #[arg(long, default_value_t = 1.0)]
    pub j: f64,
    /// Lattice size N (2 or 4; 2 only with --full)
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    #[arg(long, default_value = "1000000", value_parser = parse_count)]
    pub samples: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Estimate the unconstrained partition function instead
    #[arg(long, default_value_t = false, action = clap::ArgAction::Set)]
    pub full: bool,
    /// Write the JSON here instead of standard output
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    /// Run directory written by `pom simulate`
    #[arg(long)]
    pub input: PathBuf,
    /// A second run directory (typically Metropolis) for the mixing comparison
    #[arg(long)]
    pub compare: Option<PathBuf>,
    /// max(q_x, q_z) at or above this counts as ordered
    #[arg(long, default_value_t = 0.9)]
    pub order_threshold: f64,
    /// Output directory [default: the input directory]
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

/// `(βJ)^(-5/12)`, the default constraint radius.
pub fn default_delta(beta_j: f64) -> f64 {
    beta_j.powf(-5.0 / 12.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn counts_accept_scientific_notation() {
        assert_eq!(parse_count("1e6"), Ok(1_000_000));
        assert_eq!(parse_count("10_000"), Ok(10_000));
        assert!(parse_count("1.5").is_err());
        assert!(parse_count("-3").is_err());
    }
}
