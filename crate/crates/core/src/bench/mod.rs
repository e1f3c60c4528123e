//! Seeded experiment sweeps.
//!
//! An [`ExperimentConfig`] names a task, the channels to run it on, a
//! parameter grid and a trial count. Cells are the cartesian product of
//! channels and grid values; every `(cell, trial)` pair draws from its own
//! stream `cell << 32 | trial` of the master seed, so the report is a pure
//! function of the config apart from timing fields. Failures are recorded
//! per trial and the sweep continues.

mod fit;
mod report;

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{make_channel, ChannelPreset};
use crate::diamond::{
    diamond_estimate_plugin, diamond_estimate_unseen, diamond_exact, diamond_unseen_with_queries, DiamondMethod,
};
use crate::distribution::PauliDistribution;
use crate::error::{Error, Result};
use crate::learner::{checked_batch_len, learn_empirical, plan_sample_size};
use crate::metrics::{lp_distance, shannon_entropy, support_size, PNorm};
use crate::rng::{stream_id, StreamSeed};
use crate::sim::{bell_circuit_distribution, bell_outcome_distribution, draw_samples};
use crate::tester::{plan_test_samples, test_against_plan, CALIBRATED_C_PLAN};
use crate::unseen::{estimate_entropy_unseen, estimate_support_unseen, plugin_entropy, recommended_samples};

pub use fit::{fit_power_law, fit_scaling, ScalingField, ScalingFit};
pub use report::{
    write_outputs, CellSummary, CsvRow, ExperimentReport, ReportStatus, TrialRecord, FORMAT_VERSION, RECORDS_FILE,
    REPORT_FILE,
};

/// Default `γ` of the unseen sample recommendation.
pub const DEFAULT_GAMMA: f64 = 2.0;

/// Deviation below which the exact Bell-sampling check counts as passing.
pub const BELL_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Learn,
    Test,
    Entropy,
    Support,
    Diamond,
    VerifyBell,
}

/// A channel given inline as a preset, or as a path to a channel file.
/// Presets are instantiated at every `n` of the grid; a file fixes its own
/// `n` and ignores the grid's.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ChannelSpec {
    File { file: PathBuf },
    Preset(ChannelPreset),
}

impl ChannelSpec {
    pub fn label(&self) -> String {
        match self {
            ChannelSpec::File { file } => file.display().to_string(),
            ChannelSpec::Preset(p) => match p {
                ChannelPreset::Identity => "identity".into(),
                ChannelPreset::Depolarizing { q } => format!("depolarizing(q={q})"),
                ChannelPreset::BitFlip { q } => format!("bit_flip(q={q})"),
                ChannelPreset::Dephasing { q } => format!("dephasing(q={q})"),
                ChannelPreset::SparseRandom { support, seed } => {
                    format!("sparse_random(support={support},seed={seed})")
                }
            },
        }
    }

    fn fixed_qubits(&self) -> Result<Option<(usize, PauliDistribution)>> {
        match self {
            ChannelSpec::File { file } => {
                let p = PauliDistribution::load(file)
                    .map_err(|e| Error::Config(format!("channel file {}: {e}", file.display())))?;
                Ok(Some((p.num_qubits(), p)))
            }
            ChannelSpec::Preset(_) => Ok(None),
        }
    }

    fn build(&self, n: usize) -> Result<PauliDistribution> {
        match self {
            ChannelSpec::File { file } => PauliDistribution::load(file),
            ChannelSpec::Preset(p) => make_channel(p, n),
        }
        .map_err(|e| Error::Config(format!("channel {}: {e}", self.label())))
    }
}

/// Values swept by the experiment. An empty axis the task does not use is
/// simply absent from the cells.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParameterGrid {
    pub p: Vec<PNorm>,
    pub n: Vec<usize>,
    pub epsilon: Vec<f64>,
    pub delta: Vec<f64>,
    /// Per-trial sample counts overriding the planners.
    pub samples: Vec<u64>,
}

fn default_c_plan() -> f64 {
    CALIBRATED_C_PLAN
}

fn default_gamma() -> f64 {
    DEFAULT_GAMMA
}

fn default_method() -> DiamondMethod {
    DiamondMethod::Unseen
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: Task,
    pub channels: Vec<ChannelSpec>,
    /// Second channel of each pair, diamond task only.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub partners: Vec<ChannelSpec>,
    pub grid: ParameterGrid,
    pub trials: u32,
    pub master_seed: u64,
    #[serde(default = "default_c_plan")]
    pub c_plan: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_method")]
    pub diamond_method: DiamondMethod,
}

impl ExperimentConfig {
    /// Reads a JSON config. Relative channel-file paths are taken relative
    /// to the config file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let mut cfg: Self =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for spec in cfg.channels.iter_mut().chain(cfg.partners.iter_mut()) {
            if let ChannelSpec::File { file } = spec {
                if file.is_relative() {
                    *file = base.join(&*file);
                }
            }
        }
        Ok(cfg)
    }

    /// Expands the grid into cells with their channels. Fails on anything
    /// that would make every cell fail.
    pub fn cells(&self) -> Result<Vec<PreparedCell>> {
        self.check_scalars()?;
        let g = &self.grid;
        let need = |axis: &str, empty: bool| -> Result<()> {
            if empty {
                return Err(Error::Config(format!("grid axis `{axis}` is empty but {:?} needs it", self.task)));
            }
            Ok(())
        };
        match self.task {
            Task::Learn => {
                need("p", g.p.is_empty())?;
                need("epsilon", g.epsilon.is_empty())?;
                need("delta", g.delta.is_empty())?;
            }
            Task::Test => {
                need("p", g.p.is_empty())?;
                need("epsilon", g.epsilon.is_empty())?;
            }
            Task::Entropy | Task::Support => need("epsilon", g.epsilon.is_empty())?,
            Task::Diamond => {
                need("epsilon", g.epsilon.is_empty())?;
                if self.diamond_method == DiamondMethod::Plugin {
                    need("delta", g.delta.is_empty())?;
                    if !g.samples.is_empty() {
                        return Err(Error::Config("the plugin diamond method plans its own samples".into()));
                    }
                }
            }
            Task::VerifyBell => {}
        }
        if self.task == Task::Diamond {
            if self.partners.len() != self.channels.len() {
                return Err(Error::Config(format!(
                    "diamond needs one partner per channel, got {} channels and {} partners",
                    self.channels.len(),
                    self.partners.len()
                )));
            }
        } else if !self.partners.is_empty() {
            return Err(Error::Config("partners are only used by the diamond task".into()));
        }
        if self.channels.is_empty() {
            return Err(Error::Config("no channels given".into()));
        }

        let opt = |v: &[f64]| -> Vec<Option<f64>> {
            if v.is_empty() {
                vec![None]
            } else {
                v.iter().copied().map(Some).collect()
            }
        };
        let ps: Vec<Option<PNorm>> = if g.p.is_empty() {
            vec![None]
        } else {
            g.p.iter().copied().map(Some).collect()
        };
        let samples: Vec<Option<u64>> = if g.samples.is_empty() {
            vec![None]
        } else {
            g.samples.iter().copied().map(Some).collect()
        };
        let mut out = Vec::new();
        for (ci, spec) in self.channels.iter().enumerate() {
            let partner = self.partners.get(ci);
            let fixed = spec.fixed_qubits()?;
            let ns: Vec<usize> = match &fixed {
                Some((n, _)) => vec![*n],
                None => {
                    need("n", g.n.is_empty())?;
                    g.n.clone()
                }
            };
            for &n in &ns {
                let first = match &fixed {
                    Some((_, p)) => p.clone(),
                    None => spec.build(n)?,
                };
                let second = match partner {
                    Some(s) => {
                        let q = s.build(n)?;
                        if q.num_qubits() != n {
                            return Err(Error::Config(format!(
                                "partner {} acts on {} qubits, channel on {n}",
                                s.label(),
                                q.num_qubits()
                            )));
                        }
                        Some(q)
                    }
                    None => None,
                };
                for &p in &ps {
                    for eps in opt(&g.epsilon) {
                        for delta in opt(&g.delta) {
                            for &s in &samples {
                                let index = u32::try_from(out.len())
                                    .map_err(|_| Error::Config("more than 2^32 cells".into()))?;
                                out.push(PreparedCell {
                                    cell: Cell {
                                        index,
                                        channel: spec.label(),
                                        partner: partner.map(ChannelSpec::label),
                                        p,
                                        n,
                                        epsilon: eps,
                                        delta,
                                        samples: s,
                                    },
                                    first: first.clone(),
                                    second: second.clone(),
                                });
                            }
                        }
                    }
                }
            }
        }
        if out.is_empty() {
            return Err(Error::Config("the grid has no cells".into()));
        }
        Ok(out)
    }

    fn check_scalars(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if !(self.c_plan.is_finite() && self.c_plan > 0.0) {
            return Err(Error::Config(format!("c_plan must be positive, got {}", self.c_plan)));
        }
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return Err(Error::Config(format!("gamma must be positive, got {}", self.gamma)));
        }
        let g = &self.grid;
        if let Some(e) = g.epsilon.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
            return Err(Error::Config(format!("epsilon must be positive, got {e}")));
        }
        if let Some(d) = g.delta.iter().find(|d| !(**d > 0.0 && **d < 1.0)) {
            return Err(Error::Config(format!("delta must lie in (0, 1), got {d}")));
        }
        if g.samples.contains(&0) {
            return Err(Error::Config("sample overrides must be at least 1".into()));
        }
        Ok(())
    }
}

/// Grid coordinates of one cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub index: u32,
    pub channel: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub partner: Option<String>,
    pub p: Option<PNorm>,
    pub n: usize,
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    /// Sample override; `None` means the task's planner decides.
    pub samples: Option<u64>,
}

#[derive(Clone, Debug)]
pub struct PreparedCell {
    pub cell: Cell,
    pub first: PauliDistribution,
    pub second: Option<PauliDistribution>,
}

/// What one trial measured. `queries` counts every channel use.
#[derive(Clone, Debug, Default, PartialEq)]
struct Outcome {
    queries: u64,
    estimate: Option<f64>,
    error: Option<f64>,
    baseline_error: Option<f64>,
    success: Option<bool>,
    reject: Option<bool>,
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    run_experiment_with_workers(config, None)
}

/// Runs every `(cell, trial)` on a pool of `workers` threads (the global
/// pool when `None`). Records come back in `(cell, trial)` order.
pub fn run_experiment_with_workers(config: &ExperimentConfig, workers: Option<usize>) -> Result<ExperimentReport> {
    let cells = config.cells()?;
    let started = Instant::now();
    let jobs: Vec<(usize, u32)> = (0..cells.len())
        .flat_map(|c| (0..config.trials).map(move |t| (c, t)))
        .collect();
    let run = || -> Vec<TrialRecord> {
        jobs.par_iter()
            .map(|&(c, t)| run_trial(config, &cells[c], t))
            .collect()
    };
    let records = match workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| Error::Internal(format!("worker pool: {e}")))?
            .install(run),
        None => run(),
    };
    let cells: Vec<Cell> = cells.into_iter().map(|c| c.cell).collect();
    Ok(ExperimentReport::assemble(
        config.clone(),
        cells,
        records,
        started.elapsed().as_secs_f64() * 1e3,
    ))
}

fn run_trial(config: &ExperimentConfig, cell: &PreparedCell, trial: u32) -> TrialRecord {
    let seed = StreamSeed::new(config.master_seed, stream_id(cell.cell.index, trial));
    let started = Instant::now();
    let result = trial_outcome(config, cell, seed);
    let wall_time_ms = started.elapsed().as_secs_f64() * 1e3;
    let (outcome, failure) = match result {
        Ok(o) => (o, None),
        Err(e) => (Outcome::default(), Some(e.to_string())),
    };
    TrialRecord {
        cell: cell.cell.index,
        trial,
        seed,
        queries: outcome.queries,
        estimate: outcome.estimate,
        error: outcome.error,
        baseline_error: outcome.baseline_error,
        success: outcome.success,
        reject: outcome.reject,
        failure,
        wall_time_ms,
    }
}

fn trial_outcome(config: &ExperimentConfig, prepared: &PreparedCell, seed: StreamSeed) -> Result<Outcome> {
    let cell = &prepared.cell;
    let channel = &prepared.first;
    let n = cell.n;
    // Axes required by the task were checked when the cells were built.
    let p = || cell.p.expect("p axis present");
    let eps = || cell.epsilon.expect("epsilon axis present");
    let delta = || cell.delta.expect("delta axis present");
    match config.task {
        Task::Learn => {
            let plan = plan_sample_size(p(), n, eps(), delta())?;
            let queries = cell.samples.unwrap_or(plan.n_upper);
            let batch = draw_samples(channel, checked_batch_len(queries)?, seed);
            let error = lp_distance(&learn_empirical(&batch)?, channel, p())?;
            Ok(Outcome {
                queries,
                error: Some(error),
                success: Some(error <= eps()),
                ..Outcome::default()
            })
        }
        Task::Test => {
            let mut plan = plan_test_samples(p(), n, eps(), config.c_plan)?;
            if let Some(s) = cell.samples {
                plan.samples = s;
            }
            let batch = draw_samples(channel, checked_batch_len(plan.samples)?, seed);
            let verdict = test_against_plan(&batch, &plan)?;
            let distance = lp_distance(channel, &PauliDistribution::uniform(n)?, p())?;
            let success = if distance < 1e-12 {
                Some(!verdict.reject)
            } else if distance > eps() {
                Some(verdict.reject)
            } else {
                None
            };
            Ok(Outcome {
                queries: plan.samples,
                estimate: Some(verdict.statistic),
                success,
                reject: Some(verdict.reject),
                ..Outcome::default()
            })
        }
        Task::Entropy | Task::Support => {
            let queries = match cell.samples {
                Some(s) => s,
                None => recommended_samples(n, eps(), config.gamma)?,
            };
            let batch = draw_samples(channel, checked_batch_len(queries)?, seed);
            let k = channel.domain_size();
            let (estimate, error, baseline) = if config.task == Task::Entropy {
                let truth = shannon_entropy(channel);
                let est = estimate_entropy_unseen(&batch, k)?;
                (est, (est - truth).abs(), (plugin_entropy(&batch)? - truth).abs())
            } else {
                let truth = support_size(channel) as f64;
                let est = estimate_support_unseen(&batch, k)? as f64;
                let distinct = batch.counts().len() as f64;
                (est, (est - truth).abs() / truth, (distinct - truth).abs() / truth)
            };
            Ok(Outcome {
                queries,
                estimate: Some(estimate),
                error: Some(error),
                baseline_error: Some(baseline),
                success: Some(error < eps()),
                ..Outcome::default()
            })
        }
        Task::Diamond => {
            let partner = prepared.second.as_ref().expect("diamond cells carry a partner");
            let truth = diamond_exact(channel, partner)?;
            let est = match (config.diamond_method, cell.samples) {
                (DiamondMethod::Exact, _) => crate::diamond::diamond_exact_estimate(channel, partner)?,
                (DiamondMethod::Plugin, _) => diamond_estimate_plugin(channel, partner, eps(), delta(), seed)?,
                (DiamondMethod::Unseen, Some(q)) => diamond_unseen_with_queries(channel, partner, q, eps(), seed)?,
                (DiamondMethod::Unseen, None) => diamond_estimate_unseen(channel, partner, eps(), config.gamma, seed)?,
            };
            let error = (est.value - truth).abs();
            let success = match est.method {
                DiamondMethod::Exact => error < 1e-12,
                _ => error < est.epsilon_target,
            };
            Ok(Outcome {
                queries: 2 * est.queries_per_channel,
                estimate: Some(est.value),
                error: Some(error),
                success: Some(success),
                ..Outcome::default()
            })
        }
        Task::VerifyBell => {
            let projector = lp_distance(&bell_outcome_distribution(channel)?, channel, PNorm::Infinity)?;
            let circuit = lp_distance(&bell_circuit_distribution(channel)?, channel, PNorm::Infinity)?;
            let error = projector.max(circuit);
            Ok(Outcome {
                error: Some(error),
                success: Some(error < BELL_TOLERANCE),
                ..Outcome::default()
            })
        }
    }
}
