use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pauli_channel::diamond::DiamondMethod;
use pauli_channel::PNorm;

#[derive(Debug, Parser)]
#[command(
    name = "paulictl",
    version,
    about = "Learn, test and estimate properties of Pauli channels from Bell-sampling queries",
    arg_required_else_help = true
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOptions,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalOptions {
    /// Master seed for every random draw. Drawn from the OS when omitted and
    /// echoed in the output either way.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output format on stdout.
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Json)]
    pub output: OutputFormat,
    /// Suppress warnings and notes on stderr.
    #[arg(long, short, global = true)]
    pub quiet: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample-size plan for ℓp learning.
    Plan {
        /// Norm exponent p ≥ 1, or `inf`.
        #[arg(long, short = 'p', value_parser = parse_p)]
        p: PNorm,
        /// Number of qubits.
        #[arg(long, short = 'n')]
        n: usize,
        /// Target accuracy; decimal or a ratio such as `1/10`.
        #[arg(long, value_parser = parse_ratio)]
        eps: f64,
        /// Failure probability; decimal or a ratio such as `1/3`.
        #[arg(long, value_parser = parse_ratio)]
        delta: f64,
    },
    /// Learn a channel empirically over seeded trials and score each run.
    Learn {
        /// Channel file (JSON).
        #[arg(long)]
        channel: PathBuf,
        /// Norm exponent p ≥ 1, or `inf`.
        #[arg(long, short = 'p', value_parser = parse_p)]
        p: PNorm,
        /// Target accuracy; decimal or a ratio such as `1/10`.
        #[arg(long, value_parser = parse_ratio)]
        eps: f64,
        /// Failure probability; decimal or a ratio such as `1/3`.
        #[arg(long, value_parser = parse_ratio)]
        delta: f64,
        /// Independent trials, each on its own RNG stream.
        #[arg(long, default_value_t = 1)]
        trials: u64,
        /// Median-combine this many independent batches per trial.
        #[arg(long, default_value_t = 1)]
        boost: usize,
    },
    /// Test whether a channel is the completely depolarizing channel.
    TestUniformity {
        /// Channel file (JSON).
        #[arg(long)]
        channel: PathBuf,
        /// Norm exponent p ≥ 1, or `inf`.
        #[arg(long, short = 'p', value_parser = parse_p)]
        p: PNorm,
        /// Target accuracy; decimal or a ratio such as `1/10`.
        #[arg(long, value_parser = parse_ratio)]
        eps: f64,
        /// Independent trials, each on its own RNG stream.
        #[arg(long, default_value_t = 1)]
        trials: u64,
        /// Multiplier on the planned sample count [default: calibrated value 4].
        #[arg(long)]
        cplan: Option<f64>,
    },
    /// Estimate the Shannon entropy of the error distribution.
    EstimateEntropy(EstimateArgs),
    /// Estimate the support size of the error distribution.
    EstimateSupport(EstimateArgs),
    /// Diamond distance between two Pauli channels.
    EstimateDiamond {
        /// First channel file.
        #[arg(long)]
        channel1: PathBuf,
        /// Second channel file, on the same number of qubits.
        #[arg(long)]
        channel2: PathBuf,
        /// Target accuracy; decimal or a ratio such as `1/10`.
        #[arg(long, value_parser = parse_ratio)]
        eps: f64,
        /// `exact` needs the full distributions; the others sample both channels.
        #[arg(long, value_enum)]
        method: MethodArg,
        /// Constant γ in the recommended sample count ⌈γ/ε² · 4^n/n⌉.
        #[arg(long, default_value_t = pauli_channel::bench::DEFAULT_GAMMA)]
        gamma: f64,
        /// Failure probability of the plugin method, split over both channels.
        #[arg(long, value_parser = parse_ratio, default_value = "1/3")]
        delta: f64,
    },
    /// Check the Bell-sampling identity by exact simulation.
    VerifyBell {
        /// Channel file; repeat for several.
        #[arg(long, required = true)]
        channel: Vec<PathBuf>,
        /// Largest qubit count simulated exactly.
        #[arg(long, default_value_t = pauli_channel::sim::N_MAX_EXACT)]
        nmax: usize,
        /// Largest accepted ℓ∞ deviation.
        #[arg(long, default_value_t = pauli_channel::bench::BELL_TOLERANCE)]
        tol: f64,
    },
    /// Run an experiment sweep from a JSON config.
    Bench {
        /// Experiment config (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Directory for report.json and records.csv; created if missing.
        #[arg(long)]
        out: PathBuf,
        /// Worker threads; all cores when omitted. Results do not depend on it.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Draw Bell-sampling outcomes from a channel.
    Sample {
        /// Channel file (JSON).
        #[arg(long)]
        channel: PathBuf,
        /// Number of channel uses.
        #[arg(short = 'N', long = "count")]
        count: u64,
    },
    /// Write a preset channel as a channel file (to stdout without --out).
    MakeChannel {
        #[arg(long, value_enum)]
        preset: PresetArg,
        /// Number of qubits.
        #[arg(long, short = 'n')]
        n: usize,
        /// Error probability for depolarizing, bit-flip and dephasing.
        #[arg(long)]
        q: Option<f64>,
        /// Support size for sparse-random.
        #[arg(long)]
        support: Option<u64>,
        /// Seed of the sparse-random weights.
        #[arg(long, default_value_t = 0)]
        preset_seed: u64,
        /// Also save the channel file here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Channel file (JSON).
    #[arg(long)]
    pub channel: PathBuf,
    /// Channel uses to spend.
    #[arg(long)]
    pub samples: u64,
    /// Accuracy used for the sample-size recommendation.
    #[arg(long, value_parser = parse_ratio, default_value = "0.5")]
    pub eps: f64,
    /// Constant γ in the recommended sample count ⌈γ/ε² · 4^n/n⌉.
    #[arg(long, default_value_t = pauli_channel::bench::DEFAULT_GAMMA)]
    pub gamma: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Exact,
    Plugin,
    Unseen,
}

impl From<MethodArg> for DiamondMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Exact => DiamondMethod::Exact,
            MethodArg::Plugin => DiamondMethod::Plugin,
            MethodArg::Unseen => DiamondMethod::Unseen,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PresetArg {
    Identity,
    Depolarizing,
    BitFlip,
    Dephasing,
    SparseRandom,
}

fn parse_p(s: &str) -> Result<PNorm, String> {
    s.parse().map_err(|e: pauli_channel::Error| e.to_string())
}

/// A decimal like `0.25` or an exact ratio like `1/3`.
pub fn parse_ratio(s: &str) -> Result<f64, String> {
    let value = match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|_| format!("bad numerator in {s:?}"))?;
            let b: f64 = b.trim().parse().map_err(|_| format!("bad denominator in {s:?}"))?;
            if b == 0.0 {
                return Err(format!("zero denominator in {s:?}"));
            }
            a / b
        }
        None => s.trim().parse().map_err(|_| format!("cannot parse {s:?} as a number"))?,
    };
    if !value.is_finite() {
        return Err(format!("{s:?} is not finite"));
    }
    Ok(value)
}
