use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fastkm::schemes::Method;

/// Environment variable consulted when `--out` is absent.
pub const OUT_DIR_ENV: &str = "FASTKM_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "fastkm-out";

#[derive(Debug, Parser)]
#[command(
    name = "fastkm",
    version,
    about = "Fast Krasnosel'skii-Mann iterations and baselines"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run schemes on the rotation resolvent from (1_n; 0_n).
    Rotation(RotationArgs),
    /// Success-ratio batch on random nonnegative-hyperplane feasibility problems.
    Feasibility(FeasibilityArgs),
    /// Lambda window, threshold index, rate fit and energy checks.
    Diagnose(DiagnoseArgs),
    /// Cocoercivity and reduction self-checks of an operator.
    Check(CheckArgs),
}

#[derive(Debug, Args)]
pub struct OutArgs {
    /// Output directory (falls back to $FASTKM_OUT_DIR, then ./fastkm-out).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl OutArgs {
    pub fn resolve(&self) -> PathBuf {
        self.out
            .clone()
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
    }
}

#[derive(Debug, Args)]
pub struct RotationArgs {
    #[arg(long, default_value_t = 5000)]
    pub n: usize,
    /// Constant M > 1 of the skew generator.
    #[arg(long, default_value_t = 2.0)]
    pub m_const: f64,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "bp,km,halpern,appm,fast-km"
    )]
    pub methods: Vec<Method>,
    #[arg(long, default_value_t = 3.0)]
    pub alpha: f64,
    /// Step for fast-km and fast-ogda; defaults to the largest admissible value.
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long, default_value_t = 10_000)]
    pub kmax: usize,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct FeasibilityArgs {
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    #[arg(long, default_value_t = 10)]
    pub ntest: usize,
    #[arg(long, default_value_t = 100)]
    pub ninit: usize,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    #[arg(long, default_value_t = 100)]
    pub kmax: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Any of dr1..dr9, halpern, fast-km.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "dr1,dr2,dr3,dr4,dr5,dr6,dr7,dr8,dr9,halpern,fast-km"
    )]
    pub methods: Vec<String>,
    /// Momentum values; `fast-km` runs once per entry with s = 2.
    #[arg(long, value_delimiter = ',', default_value = "30")]
    pub alpha: Vec<f64>,
    /// Worker threads; 0 uses one per processor.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    #[arg(long, default_value_t = 3.0)]
    pub alpha: f64,
    /// Energy parameter; defaults to the midpoint of the admissible window.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Trace CSV to fit instead of a fresh Fast KM rotation run.
    #[arg(long, conflicts_with_all = ["n", "m_const", "kmax", "step"])]
    pub trace: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub m_const: Option<f64>,
    #[arg(long)]
    pub kmax: Option<usize>,
    #[arg(long)]
    pub step: Option<f64>,
    /// Indices skipped by the rate fit; defaults to a fifth of the trace.
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckOperator {
    Rotation,
    DrFeasibility,
    /// Negation declared ½-averaged; always fails.
    Misdeclared,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[arg(long, value_enum)]
    pub operator: CheckOperator,
    #[arg(long, default_value_t = 1000)]
    pub pairs: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Half dimension of the test operator.
    #[arg(long, default_value_t = 50)]
    pub n: usize,
    #[command(flatten)]
    pub out: OutArgs,
}
