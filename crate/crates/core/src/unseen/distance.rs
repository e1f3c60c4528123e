//! ℓ1 distance between two distributions from independent sample batches.
//!
//! The joint fingerprint `F_{a,b}` counts elements seen `a` times in the
//! first batch and `b` times in the second. Elements seen more than `T`
//! times in either batch keep their empirical frequencies. The rest are
//! described by a histogram over pairs `(x, y)` of probabilities drawn from
//! `{0} ∪ geometric grid`, with variables `u = h · (x + y)`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{bracket_functional, with_grid_fallback, geometric_grid, poisson_pmf, UnseenConfig, COEFFICIENT_FLOOR};
use crate::error::{Error, Result};
use crate::lp::{LinearProgram, Relation};
use crate::sim::SampleBatch;

/// Light mass at or below this counts as none.
const EMPTY_MASS: f64 = 1e-12;

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct JointFingerprint {
    pub samples: (u64, u64),
    /// `(a, b) → number of elements seen a times in batch 1 and b in batch 2`.
    pub counts: BTreeMap<(u64, u64), u64>,
}

impl JointFingerprint {
    pub fn new(first: &SampleBatch, second: &SampleBatch) -> Self {
        let mut per: BTreeMap<u64, (u64, u64)> = BTreeMap::new();
        for (i, c) in first.counts() {
            per.entry(i).or_default().0 = c;
        }
        for (i, c) in second.counts() {
            per.entry(i).or_default().1 = c;
        }
        let mut counts = BTreeMap::new();
        for pair in per.into_values() {
            *counts.entry(pair).or_insert(0) += 1;
        }
        Self {
            samples: (first.len() as u64, second.len() as u64),
            counts,
        }
    }
}

pub fn estimate_l1_unseen(first: &SampleBatch, second: &SampleBatch, k: u64) -> Result<f64> {
    estimate_l1_unseen_with(first, second, k, &UnseenConfig::distance())
}

/// Estimate of `Σ_i |P1(i) − P2(i)|`, clamped to `[0, 2]`.
pub fn estimate_l1_unseen_with(
    first: &SampleBatch,
    second: &SampleBatch,
    k: u64,
    cfg: &UnseenConfig,
) -> Result<f64> {
    cfg.validate()?;
    if first.n != second.n {
        return Err(Error::Shape(format!(
            "batches act on {} and {} qubits",
            first.n, second.n
        )));
    }
    if first.len() < 2 || second.len() < 2 {
        return Err(Error::Precondition(format!(
            "distance estimation needs at least 2 samples per batch, got {} and {}",
            first.len(),
            second.len()
        )));
    }
    let fp = JointFingerprint::new(first, second);
    with_grid_fallback(cfg, |c| l1_program(&fp, k, c))
}

fn l1_program(fp: &JointFingerprint, k: u64, cfg: &UnseenConfig) -> Result<f64> {
    let (n1, n2) = (fp.samples.0 as f64, fp.samples.1 as f64);
    let nmax = n1.max(n2);
    let t = cfg.cut(nmax);
    let kf = k as f64;

    let mut heavy_l1 = 0.0;
    let (mut heavy1, mut heavy2) = (0.0, 0.0);
    let mut light: BTreeMap<(u64, u64), u64> = BTreeMap::new();
    for (&(a, b), &f) in &fp.counts {
        if a > t || b > t {
            let (p, q) = (a as f64 / n1, b as f64 / n2);
            heavy_l1 += f as f64 * (p - q).abs();
            heavy1 += f as f64 * p;
            heavy2 += f as f64 * q;
        } else {
            light.insert((a, b), f);
        }
    }
    let mass1 = (1.0 - heavy1).max(0.0);
    let mass2 = (1.0 - heavy2).max(0.0);
    if mass1 <= EMPTY_MASS && mass2 <= EMPTY_MASS {
        return Ok(heavy_l1.clamp(0.0, 2.0));
    }

    let x_min = (1.0 / (cfg.x_min_domain_factor * kf)).max(1.0 / (nmax * nmax));
    let x_max = t as f64 / nmax;
    let mut values = vec![0.0];
    values.extend(geometric_grid(x_min.min(x_max), x_max, cfg.grid_ratio));
    // A side with no light mass forces every cell that gives it weight to
    // zero; dropping those cells up front leaves an equivalent, far less
    // degenerate program.
    let (keep1, keep2) = (mass1 > EMPTY_MASS, mass2 > EMPTY_MASS);
    let cells: Vec<(f64, f64)> = values
        .iter()
        .flat_map(|&x| values.iter().map(move |&y| (x, y)))
        .filter(|&(x, y)| x + y > 0.0 && (keep1 || x == 0.0) && (keep2 || y == 0.0))
        .collect();
    let m = cells.len();

    // Per-cell Poisson tables, indexed [cell][count].
    let pois = |rate: f64, x: f64| -> Vec<f64> { (0..=t).map(|j| poisson_pmf(rate * x, j)).collect() };
    let p1: Vec<Vec<f64>> = cells.iter().map(|&(x, _)| pois(n1, x)).collect();
    let p2: Vec<Vec<f64>> = cells.iter().map(|&(_, y)| pois(n2, y)).collect();

    let pairs: Vec<(u64, u64)> = (0..=t)
        .flat_map(|a| (0..=t).map(move |b| (a, b)))
        .filter(|&ab| ab != (0, 0))
        .collect();
    let mut lp = LinearProgram::new(m + 2 * pairs.len());
    let mut discrepancy = Vec::with_capacity(2 * pairs.len());
    for (r, &(a, b)) in pairs.iter().enumerate() {
        let f = light.get(&(a, b)).copied().unwrap_or(0) as f64;
        let sp = m + 2 * r;
        let mut coeffs: Vec<(usize, f64)> = cells
            .iter()
            .enumerate()
            .map(|(c, &(x, y))| (c, p1[c][a as usize] * p2[c][b as usize] / ((x + y) * nmax)))
            .filter(|&(_, v)| v > COEFFICIENT_FLOOR)
            .collect();
        coeffs.push((sp, -1.0));
        coeffs.push((sp + 1, 1.0));
        lp.add_constraint(coeffs, Relation::Eq, f / nmax);
        let w = nmax / (1.0 + f).sqrt();
        discrepancy.push((sp, w));
        discrepancy.push((sp + 1, w));
    }
    let share = |pick: fn(f64, f64) -> f64| -> Vec<(usize, f64)> {
        cells
            .iter()
            .enumerate()
            .map(|(c, &(x, y))| (c, pick(x, y) / (x + y)))
            .filter(|&(_, v)| v > 0.0)
            .collect()
    };
    for (row, mass) in [share(|x, _| x), share(|_, y| y)].into_iter().zip([mass1, mass2]) {
        if !row.is_empty() {
            lp.add_constraint(row, Relation::Eq, mass);
        }
    }

    let target = share(|x, y| (x - y).abs());
    let solved = bracket_functional(lp, &discrepancy, &target, cfg.slack_alpha)?;
    let light_l1: f64 = target.iter().map(|&(c, v)| v * solved.x[c].max(0.0)).sum();
    Ok((heavy_l1 + light_l1).clamp(0.0, 2.0))
}
