use std::path::PathBuf;

use bosim_core::interferometer::InterferometerKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Noisy boson sampling: probabilities, bounds, synthetic datasets and the
/// no-click distinguishing test.
#[derive(Debug, Parser)]
#[command(name = "bosim", version)]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "BOSIM_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate an interferometer and write it as JSON.
    GenUnitary(GenUnitaryArgs),
    /// Probability of one output configuration.
    Prob(ProbArgs),
    /// Probability of no boson outside a port subset.
    Noclick(NoclickArgs),
    /// Exact total-variation distance to the cycle-truncated law.
    Tvd(TvdArgs),
    /// Closed-form W1 bound and run-count plan.
    Bound(BoundArgs),
    /// Table of low-order permutation fractions.
    Census(CensusArgs),
    /// Draw a synthetic dataset.
    Sample(SampleArgs),
    /// Two-proportion test on the no-click frequency of two datasets.
    Distinguish(DistinguishArgs),
    /// Run a full experiment from a JSON config.
    Run(RunArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Haar,
    Fourier,
    Balanced,
}

impl From<KindArg> for InterferometerKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Haar => InterferometerKind::HaarRandom,
            KindArg::Fourier => InterferometerKind::Fourier,
            KindArg::Balanced => InterferometerKind::BalancedPort,
        }
    }
}

#[derive(Debug, Args)]
pub struct GenUnitaryArgs {
    #[arg(long, value_enum)]
    pub kind: KindArg,
    #[arg(long)]
    pub dim: usize,
    /// Required for `haar` and `balanced`.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

/// Interferometer and input ports.
#[derive(Debug, Args)]
pub struct InstanceArgs {
    /// Interferometer JSON file.
    #[arg(long, conflicts_with_all = ["kind", "dim", "unitary_seed"])]
    pub unitary: Option<PathBuf>,
    /// Build the interferometer inline instead of loading it.
    #[arg(long, value_enum, requires = "dim")]
    pub kind: Option<KindArg>,
    #[arg(long)]
    pub dim: Option<usize>,
    /// Seed for an inline `haar` or `balanced` interferometer.
    #[arg(long)]
    pub unitary_seed: Option<u64>,
    /// Occupied input ports, 1-based and comma-separated.
    #[arg(long, value_delimiter = ',', conflicts_with = "n")]
    pub inputs: Option<Vec<usize>>,
    /// Number of bosons, placed in the first ports.
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ProbArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    /// Output occupations, comma-separated (one entry per port).
    #[arg(long, value_delimiter = ',', required = true)]
    pub config: Vec<usize>,
    #[arg(long)]
    pub xi: f64,
    /// Cycle cutoff; omitted means exact.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NoclickMethod {
    Exact,
    Truncated,
    Estimate,
}

#[derive(Debug, Args)]
pub struct NoclickArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    /// 1-based subset such as `2..M` or `1,3..5`.
    #[arg(long)]
    pub omega: String,
    #[arg(long)]
    pub xi: f64,
    #[arg(long, default_value_t = 1.0)]
    pub eta: f64,
    #[arg(long, default_value_t = 0.0)]
    pub nu: f64,
    #[arg(long, value_enum, default_value = "exact")]
    pub method: NoclickMethod,
    /// Cycle cutoff for `truncated`.
    #[arg(long)]
    pub k: Option<usize>,
    /// Monte Carlo trials for `estimate`.
    #[arg(long, default_value_t = 100_000)]
    pub trials: usize,
    /// Seed for `estimate`.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TvdArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[arg(long)]
    pub xi: f64,
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    #[arg(long)]
    pub xi: f64,
    #[arg(long, default_value_t = 1.0)]
    pub eta: f64,
    #[arg(long, default_value_t = 0.0)]
    pub nu: f64,
    #[arg(long)]
    pub rho: f64,
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = bosim_core::bounds::DEFAULT_TARGET_SIGMAS)]
    pub sigmas: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CensusArgs {
    /// Inclusive range `a..b`.
    #[arg(long)]
    pub n_range: String,
    #[arg(long)]
    pub k: usize,
    /// Overlap as a decimal or fraction (`0.75`, `3/4`).
    #[arg(long)]
    pub xi: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Exact,
    Trunc,
    Kinterf,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[arg(long, value_enum)]
    pub model: ModelArg,
    #[arg(long)]
    pub xi: f64,
    #[arg(long, default_value_t = 1.0)]
    pub eta: f64,
    #[arg(long, default_value_t = 0.0)]
    pub nu: f64,
    /// Cutoff for `trunc`, interfering bosons for `kinterf`.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub count: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DistinguishArgs {
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
    #[arg(long, default_value = "2..M")]
    pub omega: String,
    #[arg(long, default_value_t = bosim_core::bounds::DEFAULT_TARGET_SIGMAS)]
    pub sigmas: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
}
