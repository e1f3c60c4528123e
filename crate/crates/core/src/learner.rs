//! Empirical learning of Pauli error distributions.
//!
//! The learner draws `N` samples and returns observed frequencies. The
//! planner picks `N` from closed-form sufficient sample sizes with a `1/δ`
//! confidence prefactor, and also reports the matching order-of-magnitude
//! lower bound (constant 1).

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distribution::PauliDistribution;
use crate::error::{Error, Result};
use crate::metrics::{lp_distance, LpParams, PNorm};
use crate::pauli::check_qubits;
use crate::rng::StreamSeed;
use crate::sim::{SampleBatch, Sampler};

/// Which branch of the sample-complexity formula applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LearningRegime {
    /// `1 ≤ p < 2` and `ε ≤ t` with `t = 4^(−n(p−1)/p)`.
    SmallEps,
    /// `1 ≤ p < 2` and `t < ε ≤ 2t`; both orders are `Θ(4^n)`.
    Crossover,
    /// `1 ≤ p < 2` and `ε > 2t`.
    LargeEps,
    /// `p ≥ 2`: dimension-free.
    PGe2,
}

impl LearningRegime {
    pub fn tag(self) -> &'static str {
        match self {
            LearningRegime::SmallEps => "small-eps",
            LearningRegime::Crossover => "crossover",
            LearningRegime::LargeEps => "large-eps",
            LearningRegime::PGe2 => "p-ge-2",
        }
    }
}

impl fmt::Display for LearningRegime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplePlan {
    #[serde(flatten)]
    pub params: LpParams,
    pub n: usize,
    /// Sufficient sample count.
    pub n_upper: u64,
    /// Lower-bound formula with constant 1; an order-of-magnitude floor only.
    pub n_lower: u64,
    pub regime: LearningRegime,
}

/// Regime threshold `t = 4^(−n(p−1)/p)`. Equals 1 at `p = 1`.
pub fn regime_threshold(p: PNorm, n: usize) -> f64 {
    let exponent = match p {
        PNorm::Finite(p) => -(n as f64) * (p - 1.0) / p,
        PNorm::Infinity => -(n as f64),
    };
    4f64.powf(exponent)
}

/// Ceiling that ignores floating-point noise just above an integer.
pub(crate) fn ceil_count(x: f64, what: &str) -> Result<u64> {
    if !x.is_finite() || x >= u64::MAX as f64 {
        return Err(Error::ResourceLimit(format!("{what} overflows a 64-bit count ({x:e})")));
    }
    let nearest = x.round();
    let c = if (x - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest
    } else {
        x.ceil()
    };
    Ok((c as u64).max(1))
}

/// Largest batch materialized in memory at once.
pub const MAX_BATCH_SAMPLES: u64 = 1 << 30;

pub(crate) fn checked_batch_len(count: u64) -> Result<usize> {
    if count > MAX_BATCH_SAMPLES {
        return Err(Error::ResourceLimit(format!(
            "{count} samples exceed the per-batch limit of {MAX_BATCH_SAMPLES}"
        )));
    }
    Ok(count as usize)
}

/// Closed-form sample sizes for learning within `ε` in ℓp with probability
/// at least `1 − δ`.
pub fn plan_sample_size(p: PNorm, n: usize, epsilon: f64, delta: f64) -> Result<SamplePlan> {
    check_qubits(n)?;
    let params = LpParams::new(p, epsilon, delta)?;
    let nf = n as f64;
    let eps = epsilon;

    let (upper, lower, regime) = match p {
        PNorm::Finite(pv) if pv < 2.0 => {
            let t = regime_threshold(p, n);
            let dim_branch = 4f64.powf(nf * (2.0 - pv) / pv) / (eps * eps);
            // At p = 1 the exponent p/(p−1) is infinite, but ε < 1 ≤ t keeps
            // the large-ε formulas unused.
            let (large_upper, large_lower) = if pv > 1.0 {
                let e = pv / (pv - 1.0);
                (0.25 * (2.0 / eps).powf(e), (1.0 / eps).powf(e))
            } else {
                (f64::INFINITY, f64::INFINITY)
            };
            if eps <= t {
                (dim_branch, dim_branch, LearningRegime::SmallEps)
            } else if eps <= 2.0 * t {
                (dim_branch.max(large_upper), large_lower, LearningRegime::Crossover)
            } else {
                (large_upper, large_lower, LearningRegime::LargeEps)
            }
        }
        _ => {
            let v = 1.0 / (eps * eps);
            (v, v, LearningRegime::PGe2)
        }
    };

    Ok(SamplePlan {
        params,
        n,
        n_upper: ceil_count(upper / delta, "sample plan")?,
        n_lower: ceil_count(lower, "lower bound")?,
        regime,
    })
}

/// Observed frequencies `count / N`.
pub fn learn_empirical(samples: &SampleBatch) -> Result<PauliDistribution> {
    if samples.is_empty() {
        return Err(Error::Precondition("cannot learn from an empty batch".into()));
    }
    let total = samples.len() as f64;
    let entries = samples
        .counts()
        .into_iter()
        .map(|(i, c)| (i, c as f64 / total));
    PauliDistribution::from_sparse(samples.n, entries)
}

/// Coordinate-wise median of several estimates, renormalized. Falls back to
/// the mean when every median is zero.
pub fn median_of_estimates(estimates: &[PauliDistribution]) -> Result<PauliDistribution> {
    let first = estimates
        .first()
        .ok_or_else(|| Error::Precondition("no estimates to combine".into()))?;
    let n = first.num_qubits();
    if estimates.iter().any(|e| e.num_qubits() != n) {
        return Err(Error::Shape("estimates act on different qubit counts".into()));
    }
    let mut keys: Vec<u64> = estimates
        .iter()
        .flat_map(|e| e.nonzero().map(|(i, _)| i))
        .collect();
    keys.sort_unstable();
    keys.dedup();
    let k = estimates.len();
    let mut medians = Vec::with_capacity(keys.len());
    let mut means = Vec::with_capacity(keys.len());
    for &i in &keys {
        let mut v: Vec<f64> = estimates.iter().map(|e| e.prob(i)).collect();
        v.sort_by(f64::total_cmp);
        let med = if k % 2 == 1 {
            v[k / 2]
        } else {
            0.5 * (v[k / 2 - 1] + v[k / 2])
        };
        medians.push(med);
        means.push(v.iter().sum::<f64>() / k as f64);
    }
    let mut total: f64 = medians.iter().sum();
    if total <= 0.0 {
        medians = means;
        total = medians.iter().sum();
    }
    PauliDistribution::from_sparse(
        n,
        keys.into_iter()
            .zip(medians)
            .filter(|&(_, w)| w > 0.0)
            .map(|(i, w)| (i, w / total)),
    )
}

/// Outcome of one learning run against a known channel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearningRecord {
    pub seed: StreamSeed,
    /// Channel uses spent, including every boost repetition.
    pub samples: u64,
    pub error: f64,
    pub success: bool,
}

/// Draws `plan.n_upper` samples, learns, and scores the estimate in the
/// plan's norm. With `boost = k > 1`, `k` consecutive batches from the same
/// stream are combined by coordinate-wise median.
pub fn run_learning_trial_boosted(
    p: &PauliDistribution,
    plan: &SamplePlan,
    boost: usize,
    seed: StreamSeed,
) -> Result<(PauliDistribution, LearningRecord)> {
    if plan.n != p.num_qubits() {
        return Err(Error::Shape(format!(
            "plan is for {} qubits, channel acts on {}",
            plan.n,
            p.num_qubits()
        )));
    }
    if boost == 0 {
        return Err(Error::InvalidParameter("boost must be at least 1".into()));
    }
    let per_batch = checked_batch_len(plan.n_upper)?;
    let sampler = Sampler::new(p);
    let mut rng = seed.rng();
    let mut estimates = Vec::with_capacity(boost);
    for _ in 0..boost {
        let outcomes = (0..per_batch).map(|_| sampler.sample(&mut rng)).collect();
        let batch = SampleBatch::new(p.num_qubits(), outcomes, seed)?;
        estimates.push(learn_empirical(&batch)?);
    }
    let estimate = if boost == 1 {
        estimates.pop().expect("one estimate")
    } else {
        median_of_estimates(&estimates)?
    };
    let error = lp_distance(&estimate, p, plan.params.p)?;
    let record = LearningRecord {
        seed,
        samples: plan.n_upper * boost as u64,
        error,
        success: error <= plan.params.epsilon,
    };
    Ok((estimate, record))
}

pub fn run_learning_trial(
    p: &PauliDistribution,
    plan: &SamplePlan,
    seed: StreamSeed,
) -> Result<LearningRecord> {
    run_learning_trial_boosted(p, plan, 1, seed).map(|(_, r)| r)
}

/// `trials` independent runs on streams `0..trials` of `master`, in trial
/// order regardless of scheduling.
pub fn run_learning_trials(
    p: &PauliDistribution,
    plan: &SamplePlan,
    trials: u64,
    master: u64,
) -> Result<Vec<LearningRecord>> {
    (0..trials)
        .into_par_iter()
        .map(|t| run_learning_trial(p, plan, StreamSeed::new(master, t)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{make_channel, ChannelPreset};
    use crate::sim::draw_samples;
    use proptest::prelude::*;

    fn inf() -> PNorm {
        PNorm::Infinity
    }

    #[test]
    fn planner_examples() {
        let a = plan_sample_size(PNorm::ONE, 2, 0.5, 1.0 / 3.0).unwrap();
        assert_eq!(a.n_upper, 192);
        assert_eq!(a.regime, LearningRegime::SmallEps);
        assert_eq!(a.n_lower, 64);

        let b = plan_sample_size(inf(), 4, 0.1, 1.0 / 3.0).unwrap();
        assert_eq!(b.n_upper, 300);
        assert_eq!(b.regime, LearningRegime::PGe2);

        let c = plan_sample_size(PNorm::TWO, 3, 0.1, 0.1).unwrap();
        assert_eq!(c.n_upper, 1000);
        assert_eq!(c.n_lower, 100);
    }

    #[test]
    fn planner_regimes_at_p_1_5() {
        // t = 4^(−n/3); at n = 3, t = 1/4.
        let p = PNorm::Finite(1.5);
        let t = regime_threshold(p, 3);
        assert!((t - 0.25).abs() < 1e-15);
        assert_eq!(plan_sample_size(p, 3, 0.25, 0.5).unwrap().regime, LearningRegime::SmallEps);
        assert_eq!(plan_sample_size(p, 3, 0.3, 0.5).unwrap().regime, LearningRegime::Crossover);
        assert_eq!(plan_sample_size(p, 3, 0.5, 0.5).unwrap().regime, LearningRegime::Crossover);
        let large = plan_sample_size(p, 3, 0.6, 0.5).unwrap();
        assert_eq!(large.regime, LearningRegime::LargeEps);
        // (1/δ)·(1/4)·(2/ε)^3 = 2·0.25·37.037… = 18.52 → 19.
        assert_eq!(large.n_upper, 19);
        // (1/ε)^3 = 4.63 → 5.
        assert_eq!(large.n_lower, 5);
    }

    #[test]
    fn crossover_takes_the_larger_branch() {
        let p = PNorm::Finite(1.5);
        let plan = plan_sample_size(p, 3, 0.3, 0.5).unwrap();
        let dim = 4f64.powf(3.0 * 0.5 / 1.5) / 0.09 / 0.5;
        let large = 0.25 * (2.0f64 / 0.3).powi(3) / 0.5;
        assert_eq!(plan.n_upper, dim.max(large).ceil() as u64);
    }

    #[test]
    fn planner_rejects_bad_parameters() {
        assert!(plan_sample_size(PNorm::ONE, 2, 0.0, 0.3).is_err());
        assert!(plan_sample_size(PNorm::ONE, 2, 1.0, 0.3).is_err());
        assert!(plan_sample_size(PNorm::ONE, 2, 0.3, 1.0).is_err());
        assert!(plan_sample_size(PNorm::ONE, 40, 0.3, 0.3).is_err());
        assert!(matches!(
            plan_sample_size(PNorm::ONE, 31, 1e-9, 1e-9),
            Err(Error::ResourceLimit(_))
        ));
    }

    #[test]
    fn empirical_examples() {
        let s = SampleBatch::new(1, vec![0, 0, 1, 3], StreamSeed::new(0, 0)).unwrap();
        let d = learn_empirical(&s).unwrap();
        assert_eq!(
            (0..4).map(|i| d.prob(i)).collect::<Vec<_>>(),
            vec![0.5, 0.25, 0.0, 0.25]
        );
        let s = SampleBatch::new(1, vec![0; 4], StreamSeed::new(0, 0)).unwrap();
        assert_eq!(learn_empirical(&s).unwrap().prob(0), 1.0);
        let empty = SampleBatch::new(1, vec![], StreamSeed::new(0, 0)).unwrap();
        assert!(matches!(learn_empirical(&empty), Err(Error::Precondition(_))));
    }

    #[test]
    fn identity_channel_learns_exactly() {
        let id = make_channel(&ChannelPreset::Identity, 3).unwrap();
        let plan = plan_sample_size(PNorm::ONE, 3, 0.3, 0.3).unwrap();
        let r = run_learning_trial(&id, &plan, StreamSeed::new(1, 2)).unwrap();
        assert_eq!(r.error, 0.0);
        assert!(r.success);
        assert_eq!(r.samples, plan.n_upper);
        assert_eq!(r, run_learning_trial(&id, &plan, StreamSeed::new(1, 2)).unwrap());
    }

    #[test]
    fn depolarizing_learning_rate() {
        let p = make_channel(&ChannelPreset::Depolarizing { q: 0.5 }, 2).unwrap();
        let plan = plan_sample_size(PNorm::ONE, 2, 0.3, 1.0 / 3.0).unwrap();
        let records = run_learning_trials(&p, &plan, 200, 11).unwrap();
        let ok = records.iter().filter(|r| r.success).count();
        assert!(ok * 3 >= 2 * 200, "{ok} successes");
    }

    #[test]
    fn boosted_estimate_spends_k_batches() {
        let p = make_channel(&ChannelPreset::Depolarizing { q: 0.3 }, 2).unwrap();
        let plan = plan_sample_size(PNorm::TWO, 2, 0.2, 0.5).unwrap();
        let (est, rec) = run_learning_trial_boosted(&p, &plan, 5, StreamSeed::new(3, 0)).unwrap();
        assert_eq!(rec.samples, 5 * plan.n_upper);
        let total: f64 = est.iter().map(|(_, w)| w).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn median_of_identical_estimates_is_that_estimate() {
        let p = make_channel(&ChannelPreset::Depolarizing { q: 0.4 }, 1).unwrap();
        let m = median_of_estimates(&[p.clone(), p.clone(), p.clone()]).unwrap();
        assert!(lp_distance(&m, &p, PNorm::Infinity).unwrap() < 1e-15);
    }

    #[test]
    fn more_samples_reduce_median_error() {
        let p = make_channel(&ChannelPreset::Depolarizing { q: 0.3 }, 2).unwrap();
        let median_at = |count: usize| {
            let mut errs: Vec<f64> = (0..100)
                .map(|t| {
                    let b = draw_samples(&p, count, StreamSeed::new(5, t));
                    lp_distance(&learn_empirical(&b).unwrap(), &p, PNorm::ONE).unwrap()
                })
                .collect();
            errs.sort_by(f64::total_cmp);
            errs[50]
        };
        assert!(median_at(1600) < median_at(400));
    }

    proptest! {
        #[test]
        fn empirical_sums_to_one(outcomes in prop::collection::vec(0u64..16, 1..200)) {
            let s = SampleBatch::new(2, outcomes.clone(), StreamSeed::new(0, 0)).unwrap();
            let d = learn_empirical(&s).unwrap();
            let total: f64 = d.iter().map(|(_, w)| w).sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
            for (i, w) in d.nonzero() {
                prop_assert!(outcomes.contains(&i));
                let c = outcomes.iter().filter(|&&o| o == i).count();
                prop_assert!((w - c as f64 / outcomes.len() as f64).abs() < 1e-15);
            }
        }

        #[test]
        fn plan_is_monotone_in_epsilon(e1 in 0.01f64..0.99, e2 in 0.01f64..0.99, n in 1usize..6, p in 1.0f64..4.0) {
            let (lo, hi) = if e1 < e2 { (e1, e2) } else { (e2, e1) };
            let norm = PNorm::new(p).unwrap();
            let a = plan_sample_size(norm, n, lo, 0.2).unwrap();
            let b = plan_sample_size(norm, n, hi, 0.2).unwrap();
            // The band's max-of-branches rule is not monotone near its lower edge.
            prop_assume!(a.regime != LearningRegime::Crossover && b.regime != LearningRegime::Crossover);
            prop_assert!(a.n_upper >= b.n_upper);
        }
    }
}
