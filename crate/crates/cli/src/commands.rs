use std::path::Path;

use pauli_channel::bench::{self, ExperimentConfig, ReportStatus};
use pauli_channel::diamond::{diamond_estimate_plugin, diamond_estimate_unseen, diamond_exact_estimate, DiamondMethod};
use pauli_channel::learner::{plan_sample_size, regime_threshold, run_learning_trial_boosted};
use pauli_channel::rng::entropy_seed;
use pauli_channel::sim::{bell_circuit_distribution, bell_outcome_distribution, draw_samples};
use pauli_channel::tester::{plan_test_samples, test_against_plan, CALIBRATED_C_PLAN};
use pauli_channel::unseen::{
    estimate_entropy_unseen, estimate_support_unseen, plugin_entropy, recommended_samples,
};
use pauli_channel::{
    decode, lp_distance, make_channel, shannon_entropy, support_size, ChannelPreset, Error, PNorm,
    PauliDistribution, Result, StreamSeed,
};
use serde_json::{json, Value};

use crate::args::{Command, EstimateArgs, MethodArg, PresetArg};
use crate::render::Rendered;

/// Result of a command: the document to print and the exit code to use
/// when the command itself ran (0 unless a check or sweep failed).
pub struct Outcome {
    pub rendered: Rendered,
    pub code: u8,
    /// Messages for stderr, suppressed by `--quiet`.
    pub notes: Vec<String>,
}

impl Outcome {
    fn ok(rendered: Rendered) -> Self {
        Self { rendered, code: 0, notes: Vec::new() }
    }
}

/// The explicit seed, or a fresh one that is announced on stderr.
fn resolve(seed: Option<u64>, notes: &mut Vec<String>) -> u64 {
    seed.unwrap_or_else(|| {
        let s = entropy_seed();
        notes.push(format!("note: using seed {s}"));
        s
    })
}

pub fn run(cmd: Command, explicit_seed: Option<u64>) -> Result<Outcome> {
    let mut notes = Vec::new();
    let stochastic = !matches!(
        cmd,
        Command::Plan { .. }
            | Command::VerifyBell { .. }
            | Command::MakeChannel { .. }
            | Command::Bench { .. }
            | Command::EstimateDiamond { method: MethodArg::Exact, .. }
    );
    let seed = if stochastic { resolve(explicit_seed, &mut notes) } else { 0 };
    let mut outcome = dispatch(cmd, seed, explicit_seed)?;
    notes.append(&mut outcome.notes);
    outcome.notes = notes;
    Ok(outcome)
}

fn dispatch(cmd: Command, seed: u64, explicit_seed: Option<u64>) -> Result<Outcome> {
    match cmd {
        Command::Plan { p, n, eps, delta } => plan(p, n, eps, delta),
        Command::Learn { channel, p, eps, delta, trials, boost } => {
            learn(&load(&channel)?, p, eps, delta, trials, boost, seed)
        }
        Command::TestUniformity { channel, p, eps, trials, cplan } => {
            test_uniformity(&load(&channel)?, p, eps, trials, cplan.unwrap_or(CALIBRATED_C_PLAN), seed)
        }
        Command::EstimateEntropy(a) => estimate(a, Property::Entropy, seed),
        Command::EstimateSupport(a) => estimate(a, Property::Support, seed),
        Command::EstimateDiamond { channel1, channel2, eps, method, gamma, delta } => {
            diamond(&load(&channel1)?, &load(&channel2)?, eps, method.into(), gamma, delta, seed)
        }
        Command::VerifyBell { channel, nmax, tol } => verify_bell(&channel, nmax, tol),
        Command::Bench { config, out, workers } => bench_cmd(&config, &out, workers, explicit_seed),
        Command::Sample { channel, count } => sample(&load(&channel)?, count, seed),
        Command::MakeChannel { preset, n, q, support, preset_seed, out } => {
            make(preset, n, q, support, preset_seed, out.as_deref())
        }
    }
}

fn load(path: &Path) -> Result<PauliDistribution> {
    PauliDistribution::load(path).map_err(|e| match e {
        Error::Io(io) => Error::Io(std::io::Error::new(io.kind(), format!("{}: {io}", path.display()))),
        other => other,
    })
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable output")
}

fn plan(p: PNorm, n: usize, eps: f64, delta: f64) -> Result<Outcome> {
    let plan = plan_sample_size(p, n, eps, delta)?;
    let mut doc = to_value(&plan);
    doc["threshold"] = json!(regime_threshold(p, n));
    Ok(Outcome::ok(Rendered::doc(doc)))
}

fn learn(
    channel: &PauliDistribution,
    p: PNorm,
    eps: f64,
    delta: f64,
    trials: u64,
    boost: usize,
    seed: u64,
) -> Result<Outcome> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let plan = plan_sample_size(p, channel.num_qubits(), eps, delta)?;
    let records = (0..trials)
        .map(|t| run_learning_trial_boosted(channel, &plan, boost, StreamSeed::new(seed, t)).map(|(_, r)| r))
        .collect::<Result<Vec<_>>>()?;
    let successes = records.iter().filter(|r| r.success).count() as u64;
    let rows: Vec<Value> = records
        .iter()
        .enumerate()
        .map(|(t, r)| json!({"trial": t, "samples": r.samples, "error": r.error, "success": r.success}))
        .collect();
    let doc = json!({
        "seed": seed,
        "plan": plan,
        "boost": boost,
        "trials": trials,
        "successes": successes,
        "failure_rate": (trials - successes) as f64 / trials as f64,
        "records": rows,
    });
    Ok(Outcome::ok(Rendered::with_table(doc, rows)))
}

fn test_uniformity(
    channel: &PauliDistribution,
    p: PNorm,
    eps: f64,
    trials: u64,
    c_plan: f64,
    seed: u64,
) -> Result<Outcome> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let plan = plan_test_samples(p, channel.num_qubits(), eps, c_plan)?;
    let len = usize::try_from(plan.samples)
        .map_err(|_| Error::ResourceLimit(format!("{} samples do not fit in memory", plan.samples)))?;
    let mut rows = Vec::new();
    let mut rejections = 0u64;
    for t in 0..trials {
        let v = test_against_plan(&draw_samples(channel, len, StreamSeed::new(seed, t)), &plan)?;
        rejections += v.reject as u64;
        let mut row = json!({"trial": t});
        row.as_object_mut().unwrap().extend(to_value(&v).as_object().unwrap().clone());
        rows.push(row);
    }
    let distance = lp_distance(channel, &PauliDistribution::uniform(channel.num_qubits())?, p)?;
    let rate = rejections as f64 / trials as f64;
    let doc = json!({
        "seed": seed,
        "plan": plan,
        "trials": trials,
        "rejections": rejections,
        "rejection_rate": rate,
        "distance_to_uniform": distance,
        "type_i_rate": (distance < 1e-12).then_some(rate),
        "type_ii_rate": (distance > eps).then_some(1.0 - rate),
        "verdicts": rows,
    });
    Ok(Outcome::ok(Rendered::with_table(doc, rows)))
}

#[derive(Clone, Copy, PartialEq)]
enum Property {
    Entropy,
    Support,
}

fn estimate(a: EstimateArgs, what: Property, seed: u64) -> Result<Outcome> {
    let channel = load(&a.channel)?;
    let n = channel.num_qubits();
    let k = channel.domain_size();
    let len = usize::try_from(a.samples)
        .map_err(|_| Error::ResourceLimit(format!("{} samples do not fit in memory", a.samples)))?;
    let batch = draw_samples(&channel, len, StreamSeed::new(seed, 0));
    let recommendation = if n >= 1 { Some(recommended_samples(n, a.eps, a.gamma)?) } else { None };
    let mut notes = Vec::new();
    let doc = match what {
        Property::Entropy => json!({
            "seed": seed,
            "samples": a.samples,
            "estimate_bits": estimate_entropy_unseen(&batch, k)?,
            "plugin_bits": plugin_entropy(&batch)?,
            "true_bits": shannon_entropy(&channel),
            "recommended_samples": recommendation,
            "epsilon": a.eps,
            "gamma": a.gamma,
        }),
        Property::Support => {
            // The support guarantee needs every nonzero weight to be at least 1/k.
            let promise = channel.nonzero().all(|(_, w)| w >= 1.0 / k as f64);
            if !promise {
                notes.push("warning: some nonzero weight is below 1/4^n; the support estimate carries no guarantee".into());
            }
            json!({
                "seed": seed,
                "samples": a.samples,
                "estimate": estimate_support_unseen(&batch, k)?,
                "distinct_observed": batch.counts().len(),
                "true_support": support_size(&channel),
                "promise_holds": promise,
                "recommended_samples": recommendation,
                "epsilon": a.eps,
                "gamma": a.gamma,
            })
        }
    };
    Ok(Outcome { rendered: Rendered::doc(doc), code: 0, notes })
}

fn diamond(
    p1: &PauliDistribution,
    p2: &PauliDistribution,
    eps: f64,
    method: DiamondMethod,
    gamma: f64,
    delta: f64,
    seed: u64,
) -> Result<Outcome> {
    let s = StreamSeed::new(seed, 0);
    let est = match method {
        DiamondMethod::Exact => diamond_exact_estimate(p1, p2)?,
        DiamondMethod::Plugin => diamond_estimate_plugin(p1, p2, eps, delta, s)?,
        DiamondMethod::Unseen => diamond_estimate_unseen(p1, p2, eps, gamma, s)?,
    };
    let mut doc = to_value(&est);
    if method != DiamondMethod::Exact {
        doc["seed"] = json!(seed);
    }
    Ok(Outcome::ok(Rendered::doc(doc)))
}

fn verify_bell(paths: &[std::path::PathBuf], nmax: usize, tol: f64) -> Result<Outcome> {
    let mut rows = Vec::new();
    let mut all_pass = true;
    for path in paths {
        let channel = load(path)?;
        let n = channel.num_qubits();
        let row = if n > nmax {
            all_pass = false;
            json!({"channel": path.display().to_string(), "n": n, "max_deviation": null,
                   "pass": false, "reason": format!("n exceeds --nmax {nmax}")})
        } else {
            let projector = lp_distance(&bell_outcome_distribution(&channel)?, &channel, PNorm::Infinity)?;
            let circuit = lp_distance(&bell_circuit_distribution(&channel)?, &channel, PNorm::Infinity)?;
            let dev = projector.max(circuit);
            let pass = dev < tol;
            all_pass &= pass;
            json!({"channel": path.display().to_string(), "n": n, "max_deviation": dev,
                   "projector_deviation": projector, "circuit_deviation": circuit, "pass": pass})
        };
        rows.push(row);
    }
    let doc = json!({"tolerance": tol, "nmax": nmax, "channels": rows, "all_pass": all_pass});
    Ok(Outcome {
        rendered: Rendered::with_table(doc, rows),
        code: if all_pass { 0 } else { 2 },
        notes: Vec::new(),
    })
}

/// `--seed` overrides the config's master seed.
fn bench_cmd(config: &Path, out: &Path, workers: Option<usize>, seed: Option<u64>) -> Result<Outcome> {
    let mut cfg = ExperimentConfig::load(config)?;
    if let Some(s) = seed {
        cfg.master_seed = s;
    }
    let seed = cfg.master_seed;
    let report = bench::run_experiment_with_workers(&cfg, workers)?;
    let (json_path, csv_path) = bench::write_outputs(&report, out)?;
    let code = match report.status {
        ReportStatus::Clean => 0,
        ReportStatus::Partial => 3,
        ReportStatus::Failed => 2,
    };
    let mut notes: Vec<String> = report
        .records
        .iter()
        .filter_map(|r| r.failure.as_ref().map(|f| format!("cell {} trial {}: {f}", r.cell, r.trial)))
        .collect();
    notes.push(format!("wrote {} and {}", json_path.display(), csv_path.display()));
    let cells: Vec<Value> = report.cells.iter().map(to_value).collect();
    let doc = json!({
        "seed": seed,
        "format_version": report.format_version,
        "status": report.status,
        "records": report.records.len(),
        "total_queries": report.total_queries,
        "cells": cells,
    });
    Ok(Outcome { rendered: Rendered::with_table(doc, cells), code, notes })
}

fn sample(channel: &PauliDistribution, count: u64, seed: u64) -> Result<Outcome> {
    let len = usize::try_from(count)
        .map_err(|_| Error::ResourceLimit(format!("{count} samples do not fit in memory")))?;
    let batch = draw_samples(channel, len, StreamSeed::new(seed, 0));
    let n = channel.num_qubits();
    let rows = batch
        .outcomes
        .iter()
        .map(|&i| Ok(json!({"index": i, "label": decode(i, n)?.label()})))
        .collect::<Result<Vec<Value>>>()?;
    let doc = json!({"seed": seed, "n": n, "count": count, "outcomes": rows});
    Ok(Outcome::ok(Rendered::with_table(doc, rows)))
}

fn make(
    preset: PresetArg,
    n: usize,
    q: Option<f64>,
    support: Option<u64>,
    preset_seed: u64,
    out: Option<&Path>,
) -> Result<Outcome> {
    let need_q = || q.ok_or_else(|| Error::InvalidParameter("this preset needs --q".into()));
    let preset = match preset {
        PresetArg::Identity => ChannelPreset::Identity,
        PresetArg::Depolarizing => ChannelPreset::Depolarizing { q: need_q()? },
        PresetArg::BitFlip => ChannelPreset::BitFlip { q: need_q()? },
        PresetArg::Dephasing => ChannelPreset::Dephasing { q: need_q()? },
        PresetArg::SparseRandom => ChannelPreset::SparseRandom {
            support: support.ok_or_else(|| Error::InvalidParameter("sparse-random needs --support".into()))?,
            seed: preset_seed,
        },
    };
    let channel = make_channel(&preset, n)?;
    let mut notes = Vec::new();
    if let Some(path) = out {
        channel.save(path)?;
        notes.push(format!("wrote {}", path.display()));
    }
    Ok(Outcome { rendered: Rendered::doc(to_value(&channel.to_channel_file())), code: 0, notes })
}
