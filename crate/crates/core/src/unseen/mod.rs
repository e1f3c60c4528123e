//! Entropy, support-size and ℓ1-distance estimation from fingerprints.
//!
//! The fingerprint `F_j` counts domain elements seen exactly `j` times.
//! Elements seen more than `T` times keep their empirical frequency. The rest
//! of the distribution is recovered as a histogram on a geometric probability
//! grid by a linear program:
//!
//! 1. minimize `Σ_j |F_j − E_j(h)| / √(1 + F_j)`, where `E_j(h)` is the
//!    expected fingerprint of histogram `h` under Poisson sampling;
//! 2. among histograms within `α` of that optimum, find the smallest and
//!    largest value of the target functional and return the midpoint
//!    histogram (feasible by convexity).
//!
//! Variables are probability masses `z_i = h_i · x_i` rather than element
//! counts `h_i`, which keeps the constraint coefficients of order one.

mod distance;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::lp::{LinearProgram, LpError, Relation};
use crate::sim::SampleBatch;

pub use distance::{estimate_l1_unseen, estimate_l1_unseen_with, JointFingerprint};

/// Constants of the histogram program. Every default was checked against
/// uniform and two-level distributions on 4^4 to 4^6 elements.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnseenConfig {
    /// Ratio between consecutive grid probabilities.
    pub grid_ratio: f64,
    /// Smallest grid probability is `max(1/(factor·k), 1/N²)`.
    pub x_min_domain_factor: f64,
    /// `T = floor(max(cut_min, N^cut_exponent))`.
    pub cut_exponent: f64,
    pub cut_min: f64,
    /// Extra discrepancy tolerated in the second stage, in fingerprint units.
    pub slack_alpha: f64,
}

impl UnseenConfig {
    /// Defaults for the single-distribution histogram.
    pub fn histogram() -> Self {
        Self {
            grid_ratio: 1.05,
            x_min_domain_factor: 50.0,
            cut_exponent: 0.4,
            cut_min: 10.0,
            slack_alpha: 0.5,
        }
    }

    /// Defaults for the two-distribution program, whose grid is squared.
    pub fn distance() -> Self {
        Self {
            grid_ratio: 1.2,
            x_min_domain_factor: 50.0,
            cut_exponent: 0.3,
            cut_min: 10.0,
            slack_alpha: 0.5,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = self.grid_ratio > 1.0
            && self.x_min_domain_factor > 0.0
            && self.cut_exponent > 0.0
            && self.cut_min >= 1.0
            && self.slack_alpha >= 0.0;
        if !ok {
            return Err(Error::Config(format!("invalid unseen configuration {self:?}")));
        }
        Ok(())
    }

    /// Counts above this are treated empirically.
    pub fn cut(&self, samples: f64) -> u64 {
        self.cut_min.max(samples.powf(self.cut_exponent)).floor() as u64
    }
}

impl Default for UnseenConfig {
    fn default() -> Self {
        Self::histogram()
    }
}

/// `F_j` for `j ≥ 1`; `Σ_j j·F_j = samples`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fingerprint {
    pub samples: u64,
    pub counts: BTreeMap<u64, u64>,
}

impl Fingerprint {
    /// Builds the fingerprint from per-element occurrence counts.
    pub fn from_element_counts(counts: impl IntoIterator<Item = u64>) -> Self {
        let mut fp = Fingerprint::default();
        for c in counts.into_iter().filter(|&c| c > 0) {
            *fp.counts.entry(c).or_insert(0) += 1;
            fp.samples += c;
        }
        fp
    }

    pub fn distinct(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn get(&self, j: u64) -> u64 {
        self.counts.get(&j).copied().unwrap_or(0)
    }
}

pub fn fingerprint(samples: &SampleBatch) -> Fingerprint {
    Fingerprint::from_element_counts(samples.counts().into_iter().map(|(_, c)| c))
}

/// Poisson probability `e^(−λ) λ^j / j!`, evaluated in log space.
pub fn poisson_pmf(lambda: f64, j: u64) -> f64 {
    if lambda <= 0.0 {
        return if j == 0 { 1.0 } else { 0.0 };
    }
    let jf = j as f64;
    (jf * lambda.ln() - lambda - ln_gamma(jf + 1.0)).exp()
}

/// `x_min · r^i` for `i = 0, 1, …` up to and including the first point at
/// or beyond `x_max`, capped to `x_max`.
pub(crate) fn geometric_grid(x_min: f64, x_max: f64, ratio: f64) -> Vec<f64> {
    let mut grid = vec![x_min];
    let mut x = x_min;
    while x < x_max * (1.0 - 1e-12) {
        x = (x * ratio).min(x_max);
        grid.push(x);
    }
    grid
}

/// Fingerprint-row coefficients below this are dropped; they move expected
/// counts by less than `1e-10 · N`.
pub(crate) const COEFFICIENT_FLOOR: f64 = 1e-10;

/// Which quantity the second LP stage brackets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HistogramFunctional {
    Entropy,
    /// Assumes every nonzero probability is at least `1/k`, so the grid
    /// starts at `1/k`.
    Support,
}

/// Latent histogram: `masses[i]` domain elements at probability `grid[i]`,
/// plus elements seen often enough to keep their empirical frequency.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramEstimate {
    pub grid: Vec<f64>,
    pub masses: Vec<f64>,
    /// `(probability, multiplicity)`.
    pub empirical_part: Vec<(f64, u64)>,
    /// Optimal fingerprint discrepancy of the first stage.
    pub discrepancy: f64,
    /// Range of the functional over near-optimal histograms, LP part only.
    pub bracket: [f64; 2],
    pub functional: HistogramFunctional,
    pub domain_size: f64,
    pub samples: u64,
    pub distinct_observed: u64,
}

impl HistogramEstimate {
    pub fn total_mass(&self) -> f64 {
        let lp: f64 = self.grid.iter().zip(&self.masses).map(|(x, h)| x * h).sum();
        lp + self.empirical_part.iter().map(|&(p, m)| p * m as f64).sum::<f64>()
    }

    pub fn implied_support(&self) -> f64 {
        self.masses.iter().sum::<f64>() + self.empirical_part.iter().map(|&(_, m)| m as f64).sum::<f64>()
    }

    /// Entropy in bits, clamped to `[0, log2 k]`.
    pub fn entropy_bits(&self) -> f64 {
        let term = |p: f64| if p > 0.0 { -p * p.log2() } else { 0.0 };
        let lp: f64 = self.grid.iter().zip(&self.masses).map(|(&x, &h)| h * term(x)).sum();
        let emp: f64 = self.empirical_part.iter().map(|&(p, m)| m as f64 * term(p)).sum();
        (lp + emp).clamp(0.0, self.domain_size.log2())
    }

    /// Support size rounded half-up, clamped to `[distinct observed, k]`.
    pub fn support_estimate(&self) -> u64 {
        let rounded = (self.implied_support() + 0.5).floor();
        let upper = self.domain_size;
        rounded.clamp(self.distinct_observed as f64, upper) as u64
    }
}

/// Two-stage program outcome: first-stage optimum, functional bracket and the
/// midpoint solution.
pub(crate) struct Bracketed {
    pub discrepancy: f64,
    pub lo: f64,
    pub hi: f64,
    pub x: Vec<f64>,
}

/// Solves the fit stage with objective `discrepancy`, then minimizes and
/// maximizes `functional` subject to staying within `alpha` of the fit.
pub(crate) fn bracket_functional(
    mut lp: LinearProgram,
    discrepancy: &[(usize, f64)],
    functional: &[(usize, f64)],
    alpha: f64,
) -> Result<Bracketed> {
    let nv = lp.num_vars();
    let dense = |terms: &[(usize, f64)], sign: f64| {
        let mut c = vec![0.0; nv];
        for &(j, a) in terms {
            c[j] += sign * a;
        }
        c
    };
    lp.set_objective(dense(discrepancy, 1.0));
    let fit = lp.solve()?;
    let opt = fit.objective;
    lp.add_constraint(discrepancy.to_vec(), Relation::Le, opt + alpha);
    lp.set_objective(dense(functional, 1.0));
    let low = lp.solve()?;
    lp.set_objective(dense(functional, -1.0));
    let high = lp.solve()?;
    let x: Vec<f64> = low.x.iter().zip(&high.x).map(|(a, b)| 0.5 * (a + b)).collect();
    Ok(Bracketed {
        discrepancy: opt,
        lo: low.objective,
        hi: -high.objective,
        x,
    })
}

/// Recovers the latent histogram behind `fp` on a domain of `k` elements.
pub fn estimate_unseen(fp: &Fingerprint, k: u64, functional: HistogramFunctional) -> Result<HistogramEstimate> {
    estimate_unseen_with(fp, k, functional, &UnseenConfig::histogram())
}

pub fn estimate_unseen_with(
    fp: &Fingerprint,
    k: u64,
    functional: HistogramFunctional,
    cfg: &UnseenConfig,
) -> Result<HistogramEstimate> {
    cfg.validate()?;
    with_grid_fallback(cfg, |c| histogram_program(fp, k, functional, c))
}

/// Times a numerically failed program is retried on a coarser grid.
pub const GRID_RETRIES: usize = 2;

/// Runs `solve` on `cfg`; if the solver fails, retries with the grid ratio
/// squared. Every program built here is feasible and bounded by
/// construction (slack columns absorb any fingerprint), so solver failures
/// are numerical: adjacent grid columns are nearly collinear. Input errors
/// pass through untouched, as does the last failure.
pub(crate) fn with_grid_fallback<T>(cfg: &UnseenConfig, mut solve: impl FnMut(&UnseenConfig) -> Result<T>) -> Result<T> {
    let mut c = *cfg;
    let mut attempt = 0;
    loop {
        match solve(&c) {
            Err(Error::Estimation(e)) if attempt < GRID_RETRIES && !matches!(e, LpError::InvalidInput(_)) => {
                attempt += 1;
                c.grid_ratio *= c.grid_ratio;
            }
            other => return other,
        }
    }
}

fn histogram_program(
    fp: &Fingerprint,
    k: u64,
    functional: HistogramFunctional,
    cfg: &UnseenConfig,
) -> Result<HistogramEstimate> {
    if fp.samples < 2 {
        return Err(Error::Precondition(format!(
            "unseen estimation needs at least 2 samples, got {}",
            fp.samples
        )));
    }
    if k == 0 || fp.distinct() > k {
        return Err(Error::InvalidParameter(format!(
            "domain size {k} is smaller than the {} distinct observed elements",
            fp.distinct()
        )));
    }
    let kf = k as f64;
    let n = fp.samples as f64;
    let t = cfg.cut(n);

    let empirical_part: Vec<(f64, u64)> = fp.counts.range(t + 1..).map(|(&j, &f)| (j as f64 / n, f)).collect();
    let emp_mass: f64 = empirical_part.iter().map(|&(p, m)| p * m as f64).sum();
    let emp_count: u64 = empirical_part.iter().map(|&(_, m)| m).sum();
    let lp_mass = 1.0 - emp_mass;

    let mut estimate = HistogramEstimate {
        grid: Vec::new(),
        masses: Vec::new(),
        empirical_part,
        discrepancy: 0.0,
        bracket: [0.0, 0.0],
        functional,
        domain_size: kf,
        samples: fp.samples,
        distinct_observed: fp.distinct(),
    };
    if lp_mass <= 1e-12 {
        return Ok(estimate);
    }

    let x_max = t as f64 / n;
    let x_min = match functional {
        HistogramFunctional::Support => 1.0 / kf,
        HistogramFunctional::Entropy => (1.0 / (cfg.x_min_domain_factor * kf)).max(1.0 / (n * n)),
    };
    let grid = geometric_grid(x_min.min(x_max), x_max, cfg.grid_ratio);
    let m = grid.len();

    // Rows beyond T carry zero targets so light elements stay light.
    let pad = (t as f64).sqrt().ceil() as u64;
    let rows = t + pad;
    let mut lp = LinearProgram::new(m + 2 * rows as usize);
    let mut discrepancy = Vec::with_capacity(2 * rows as usize);
    for j in 1..=rows {
        let f = if j <= t { fp.get(j) } else { 0 };
        let sp = m + 2 * (j as usize - 1);
        let mut coeffs: Vec<(usize, f64)> = grid
            .iter()
            .enumerate()
            .map(|(i, &x)| (i, poisson_pmf(n * x, j) / (n * x)))
            .filter(|&(_, a)| a > COEFFICIENT_FLOOR)
            .collect();
        coeffs.push((sp, -1.0));
        coeffs.push((sp + 1, 1.0));
        lp.add_constraint(coeffs, Relation::Eq, f as f64 / n);
        let w = n / (1.0 + f as f64).sqrt();
        discrepancy.push((sp, w));
        discrepancy.push((sp + 1, w));
    }
    lp.add_constraint((0..m).map(|i| (i, 1.0)).collect(), Relation::Eq, lp_mass);
    lp.add_constraint(
        grid.iter().enumerate().map(|(i, &x)| (i, 1.0 / (x * kf))).collect(),
        Relation::Le,
        (kf - emp_count as f64) / kf,
    );

    let target: Vec<(usize, f64)> = grid
        .iter()
        .enumerate()
        .map(|(i, &x)| match functional {
            HistogramFunctional::Entropy => (i, -x.log2()),
            HistogramFunctional::Support => (i, 1.0 / x),
        })
        .collect();
    let solved = bracket_functional(lp, &discrepancy, &target, cfg.slack_alpha)?;

    estimate.masses = grid
        .iter()
        .zip(&solved.x)
        .map(|(&x, &z)| z.max(0.0) / x)
        .collect();
    estimate.grid = grid;
    estimate.discrepancy = solved.discrepancy;
    estimate.bracket = [solved.lo, solved.hi];
    Ok(estimate)
}

/// Entropy estimate in bits, in `[0, log2 k]`.
pub fn estimate_entropy_unseen(samples: &SampleBatch, k: u64) -> Result<f64> {
    estimate_entropy_unseen_with(samples, k, &UnseenConfig::histogram())
}

pub fn estimate_entropy_unseen_with(samples: &SampleBatch, k: u64, cfg: &UnseenConfig) -> Result<f64> {
    Ok(estimate_unseen_with(&fingerprint(samples), k, HistogramFunctional::Entropy, cfg)?.entropy_bits())
}

/// Support-size estimate, valid when every nonzero probability is at least
/// `1/k`; the promise is not checked.
pub fn estimate_support_unseen(samples: &SampleBatch, k: u64) -> Result<u64> {
    estimate_support_unseen_with(samples, k, &UnseenConfig::histogram())
}

pub fn estimate_support_unseen_with(samples: &SampleBatch, k: u64, cfg: &UnseenConfig) -> Result<u64> {
    Ok(estimate_unseen_with(&fingerprint(samples), k, HistogramFunctional::Support, cfg)?.support_estimate())
}

/// Entropy of the empirical distribution, in bits.
pub fn plugin_entropy(samples: &SampleBatch) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Precondition("plug-in entropy of an empty batch".into()));
    }
    let n = samples.len() as f64;
    Ok(samples
        .counts()
        .into_iter()
        .map(|(_, c)| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum::<f64>()
        .max(0.0))
}

/// `ceil(γ/ε² · 4^n/n)` channel uses, the order at which the estimators
/// reach additive error `ε` (`n ≥ 1`).
pub fn recommended_samples(n: usize, epsilon: f64, gamma: f64) -> Result<u64> {
    crate::pauli::check_qubits(n)?;
    if n == 0 {
        return Err(Error::InvalidParameter("recommendation needs n >= 1".into()));
    }
    crate::metrics::check_open_unit("epsilon", epsilon)?;
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::InvalidParameter(format!("gamma must be positive, got {gamma}")));
    }
    crate::learner::ceil_count(gamma / (epsilon * epsilon) * 4f64.powi(n as i32) / n as f64, "recommendation")
}
