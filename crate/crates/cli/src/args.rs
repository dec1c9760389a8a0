use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "fdmac", version, about = "Full-duplex cognitive MAC: analysis, simulation and configuration search")]
pub struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "FDMAC_WORKERS")]
    pub workers: Option<usize>,

    /// Append a wall_time_s column. Makes output run-dependent.
    #[arg(long, global = true)]
    pub wall_time: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a scenario and print derived quantities.
    Validate(ScenarioArgs),
    /// Normalized throughput from the analytical model.
    Analyze(AnalyzeArgs),
    /// Run the discrete-event simulator.
    Simulate(SimulateArgs),
    /// Search (W, T, P_s) for the largest throughput.
    Optimize(OptimizeArgs),
    /// Evaluate a grid over one parameter.
    Sweep(SweepArgs),
    /// Compare analysis and simulation, optionally over a sweep.
    Crossval(CrossvalArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ScenarioArgs {
    /// Scenario file; the reference scenario when omitted.
    #[arg(short, long)]
    pub config: Option<PathBuf>,

    /// Override one key, e.g. `--set "tx_power=12 dB"`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,

    /// Seed for every stochastic component.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// CSV destination; stdout when omitted.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProtocolArg {
    Fd,
    Hd,
    Both,
}

#[derive(Debug, Clone, Args)]
pub struct SimArgs {
    #[arg(long, value_enum, default_value_t = ProtocolArg::Fd)]
    pub protocol: ProtocolArg,

    /// Simulated time per replication after warm-up (plain seconds or with unit).
    #[arg(long, default_value = "1000 s")]
    pub horizon: String,

    #[arg(long, default_value_t = 4)]
    pub replications: usize,

    /// HD sensing time. When omitted it is chosen from an even grid over (0, T).
    #[arg(long)]
    pub sensing_time: Option<String>,

    /// Interior grid points for the HD sensing-time search.
    #[arg(long, default_value_t = 9)]
    pub sensing_grid: usize,
}

#[derive(Debug, Clone, Args)]
pub struct OptimizerArgs {
    /// Contention windows to search, comma separated; powers of two up to
    /// the maximum window when omitted.
    #[arg(long, value_delimiter = ',')]
    pub windows: Option<Vec<usize>>,

    /// Fragment-time resolution of the search.
    #[arg(long, default_value = "0.5 ms")]
    pub t_resolution: String,
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Also write the per-backoff-slot breakdown here.
    #[arg(long)]
    pub terms: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub sim: SimArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub search: OptimizerArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Also write every evaluated point here.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepMode {
    Analysis,
    Simulation,
    Both,
    Optimize,
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    /// Scenario key to vary.
    #[arg(long)]
    pub param: Option<String>,

    /// Values, `;` or `,` separated, with units where the key needs them.
    #[arg(long, default_value = "", allow_hyphen_values = true)]
    pub values: String,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long, value_enum, default_value_t = SweepMode::Analysis)]
    pub mode: SweepMode,
    #[command(flatten)]
    pub sim: SimArgs,
    #[command(flatten)]
    pub search: OptimizerArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CrossvalArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub sim: SimArgs,
    /// Relative agreement threshold.
    #[arg(long, default_value_t = 0.05)]
    pub tolerance: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}
