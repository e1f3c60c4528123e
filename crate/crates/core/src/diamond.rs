//! Diamond distance between Pauli channels.
//!
//! For Pauli channels the diamond distance equals the ℓ1 distance between
//! their error distributions. It is computed exactly from known
//! distributions, or estimated from channel queries in one of two ways:
//!
//! - `plugin`: learn both distributions to ℓ1 accuracy `ε`, each at
//!   confidence `1 − δ/2`, and take the ℓ1 distance of the estimates. By the
//!   triangle inequality the error is below `2ε` whenever both learners
//!   succeed.
//! - `unseen`: draw `⌈γ/ε² · 4^n/n⌉` samples per channel and run the
//!   two-sample histogram estimator. Here `ε` targets the error of the
//!   distance estimate itself.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::distribution::PauliDistribution;
use crate::error::{Error, Result};
use crate::learner::{checked_batch_len, learn_empirical, plan_sample_size};
use crate::metrics::{check_open_unit, lp_distance, PNorm};
use crate::rng::StreamSeed;
use crate::sim::{SampleBatch, Sampler};
use crate::unseen::{estimate_l1_unseen, recommended_samples};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiamondMethod {
    Exact,
    Plugin,
    Unseen,
}

impl DiamondMethod {
    pub fn tag(self) -> &'static str {
        match self {
            DiamondMethod::Exact => "exact",
            DiamondMethod::Plugin => "plugin",
            DiamondMethod::Unseen => "unseen",
        }
    }
}

impl fmt::Display for DiamondMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiamondEstimate {
    /// In `[0, 2]`.
    pub value: f64,
    pub method: DiamondMethod,
    /// Identical for both channels; 0 for the exact method.
    pub queries_per_channel: u64,
    /// Accuracy target: `2ε` bound for plugin, `ε` for unseen, 0 for exact.
    pub epsilon_target: f64,
}

/// `‖Φ1 − Φ2‖⋄ = Σ_i |P1(i) − P2(i)|`.
pub fn diamond_exact(p1: &PauliDistribution, p2: &PauliDistribution) -> Result<f64> {
    lp_distance(p1, p2, PNorm::ONE)
}

pub fn diamond_exact_estimate(p1: &PauliDistribution, p2: &PauliDistribution) -> Result<DiamondEstimate> {
    Ok(DiamondEstimate {
        value: diamond_exact(p1, p2)?,
        method: DiamondMethod::Exact,
        queries_per_channel: 0,
        epsilon_target: 0.0,
    })
}

/// Plugin estimate together with the two learned distributions, so callers
/// holding the truth can check the per-channel learning errors.
#[derive(Clone, Debug)]
pub struct PluginDiamond {
    pub estimate: DiamondEstimate,
    pub learned: [PauliDistribution; 2],
}

pub fn diamond_estimate_plugin(
    p1: &PauliDistribution,
    p2: &PauliDistribution,
    epsilon: f64,
    delta: f64,
    seed: StreamSeed,
) -> Result<DiamondEstimate> {
    diamond_plugin_detailed(p1, p2, epsilon, delta, seed).map(|d| d.estimate)
}

pub fn diamond_plugin_detailed(
    p1: &PauliDistribution,
    p2: &PauliDistribution,
    epsilon: f64,
    delta: f64,
    seed: StreamSeed,
) -> Result<PluginDiamond> {
    check_pair(p1, p2)?;
    check_open_unit("epsilon", epsilon)?;
    check_open_unit("delta", delta)?;
    // Union bound: each learner fails with probability at most δ/2.
    let plan = plan_sample_size(PNorm::ONE, p1.num_qubits(), epsilon, delta / 2.0)?;
    let (a, b) = draw_pair(p1, p2, plan.n_upper, seed)?;
    let learned = [learn_empirical(&a)?, learn_empirical(&b)?];
    let value = diamond_exact(&learned[0], &learned[1])?.clamp(0.0, 2.0);
    Ok(PluginDiamond {
        estimate: DiamondEstimate {
            value,
            method: DiamondMethod::Plugin,
            queries_per_channel: plan.n_upper,
            epsilon_target: 2.0 * epsilon,
        },
        learned,
    })
}

pub fn diamond_estimate_unseen(
    p1: &PauliDistribution,
    p2: &PauliDistribution,
    epsilon: f64,
    gamma: f64,
    seed: StreamSeed,
) -> Result<DiamondEstimate> {
    check_open_unit("epsilon", epsilon)?;
    let queries = recommended_samples(p1.num_qubits(), epsilon, gamma)?;
    diamond_unseen_with_queries(p1, p2, queries, epsilon, seed)
}

/// Unseen estimate from a fixed number of queries per channel; `epsilon`
/// is recorded as the target only.
pub fn diamond_unseen_with_queries(
    p1: &PauliDistribution,
    p2: &PauliDistribution,
    queries: u64,
    epsilon: f64,
    seed: StreamSeed,
) -> Result<DiamondEstimate> {
    check_pair(p1, p2)?;
    let (a, b) = draw_pair(p1, p2, queries, seed)?;
    let value = estimate_l1_unseen(&a, &b, p1.domain_size())?;
    Ok(DiamondEstimate {
        value,
        method: DiamondMethod::Unseen,
        queries_per_channel: queries,
        epsilon_target: epsilon,
    })
}

fn check_pair(p1: &PauliDistribution, p2: &PauliDistribution) -> Result<()> {
    if p1.num_qubits() != p2.num_qubits() {
        return Err(Error::Shape(format!(
            "channels act on {} and {} qubits",
            p1.num_qubits(),
            p2.num_qubits()
        )));
    }
    Ok(())
}

/// `count` queries to each channel from one stream: all of the first
/// channel's outcomes, then all of the second's.
fn draw_pair(
    p1: &PauliDistribution,
    p2: &PauliDistribution,
    count: u64,
    seed: StreamSeed,
) -> Result<(SampleBatch, SampleBatch)> {
    let len = checked_batch_len(count)?;
    let mut rng = seed.rng();
    let mut batch = |p: &PauliDistribution| {
        let sampler = Sampler::new(p);
        let outcomes = (0..len).map(|_| sampler.sample(&mut rng)).collect();
        SampleBatch::new(p.num_qubits(), outcomes, seed)
    };
    let a = batch(p1)?;
    let b = batch(p2)?;
    Ok((a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{make_channel, ChannelPreset};
    use proptest::prelude::*;

    fn dist(n: usize, w: &[f64]) -> PauliDistribution {
        PauliDistribution::from_dense(n, w.to_vec()).unwrap()
    }

    #[test]
    fn exact_examples() {
        let id2 = make_channel(&ChannelPreset::Identity, 2).unwrap();
        let dep = make_channel(&ChannelPreset::Depolarizing { q: 1.0 }, 2).unwrap();
        assert_eq!(diamond_exact(&id2, &id2).unwrap(), 0.0);
        assert!((diamond_exact(&id2, &dep).unwrap() - 1.875).abs() < 1e-12);

        let id1 = make_channel(&ChannelPreset::Identity, 1).unwrap();
        let flip = make_channel(&ChannelPreset::BitFlip { q: 0.25 }, 1).unwrap();
        assert!((diamond_exact(&flip, &id1).unwrap() - 0.5).abs() < 1e-12);

        assert!(matches!(diamond_exact(&id1, &id2), Err(Error::Shape(_))));
    }

    #[test]
    fn plugin_on_identical_identity_channels_is_zero() {
        let id = make_channel(&ChannelPreset::Identity, 3).unwrap();
        let d = diamond_estimate_plugin(&id, &id, 0.2, 1.0 / 3.0, StreamSeed::new(3, 0)).unwrap();
        assert_eq!(d.value, 0.0);
        assert_eq!(d.method, DiamondMethod::Plugin);
        assert!((d.epsilon_target - 0.4).abs() < 1e-15);
    }

    #[test]
    fn plugin_uses_half_delta_plan_and_is_deterministic() {
        let id = make_channel(&ChannelPreset::Identity, 2).unwrap();
        let dep = make_channel(&ChannelPreset::Depolarizing { q: 1.0 }, 2).unwrap();
        let seed = StreamSeed::new(11, 4);
        let a = diamond_estimate_plugin(&id, &dep, 0.2, 1.0 / 3.0, seed).unwrap();
        let b = diamond_estimate_plugin(&id, &dep, 0.2, 1.0 / 3.0, seed).unwrap();
        assert_eq!(a, b);
        let plan = plan_sample_size(PNorm::ONE, 2, 0.2, 1.0 / 6.0).unwrap();
        assert_eq!(a.queries_per_channel, plan.n_upper);
    }

    #[test]
    fn plugin_accuracy_rate() {
        let id = make_channel(&ChannelPreset::Identity, 2).unwrap();
        let dep = make_channel(&ChannelPreset::Depolarizing { q: 1.0 }, 2).unwrap();
        let good = (0..100)
            .filter(|&s| {
                let d = diamond_estimate_plugin(&id, &dep, 0.2, 1.0 / 3.0, StreamSeed::new(50, s)).unwrap();
                (d.value - 1.875).abs() < 0.4
            })
            .count();
        assert!(good >= 67, "{good}/100");
    }

    #[test]
    fn plugin_triangle_bound_holds_when_learners_succeed() {
        let p1 = make_channel(&ChannelPreset::Depolarizing { q: 0.3 }, 2).unwrap();
        let p2 = make_channel(&ChannelPreset::SparseRandom { support: 6, seed: 9 }, 2).unwrap();
        let truth = diamond_exact(&p1, &p2).unwrap();
        let eps = 0.3;
        for s in 0..40 {
            let d = diamond_plugin_detailed(&p1, &p2, eps, 0.2, StreamSeed::new(8, s)).unwrap();
            let e1 = diamond_exact(&d.learned[0], &p1).unwrap();
            let e2 = diamond_exact(&d.learned[1], &p2).unwrap();
            if e1 < eps && e2 < eps {
                assert!((d.estimate.value - truth).abs() < 2.0 * eps);
            }
        }
    }

    #[test]
    fn unseen_uses_fewer_queries_than_plugin() {
        let u = PauliDistribution::uniform(5).unwrap();
        let d = diamond_estimate_unseen(&u, &u, 0.25, 2.0, StreamSeed::new(1, 0)).unwrap();
        assert_eq!(d.queries_per_channel, 6554);
        assert!(d.value < 0.25, "{}", d.value);
        let plan = plan_sample_size(PNorm::ONE, 5, 0.25, 1.0 / 6.0).unwrap();
        assert!(d.queries_per_channel < plan.n_upper);
    }

    #[test]
    fn unseen_handles_a_fully_heavy_side() {
        // Every identity sample is the same string, so that side has no light
        // mass; this seed once made the solver report infeasibility.
        let id = PauliDistribution::point_mass(5, 0).unwrap();
        let dep = make_channel(&ChannelPreset::Depolarizing { q: 1.0 }, 5).unwrap();
        let d = diamond_unseen_with_queries(&id, &dep, 6554, 0.25, StreamSeed::new(801, 3)).unwrap();
        assert!((d.value - diamond_exact(&id, &dep).unwrap()).abs() < 0.25, "{}", d.value);
    }

    #[test]
    fn rejects_bad_parameters() {
        let id = make_channel(&ChannelPreset::Identity, 1).unwrap();
        let seed = StreamSeed::new(0, 0);
        for eps in [0.0, 1.0, -0.1] {
            assert!(matches!(
                diamond_estimate_plugin(&id, &id, eps, 0.3, seed),
                Err(Error::InvalidParameter(_))
            ));
            assert!(matches!(
                diamond_estimate_unseen(&id, &id, eps, 2.0, seed),
                Err(Error::InvalidParameter(_))
            ));
        }
    }

    fn arb_dist(n: usize) -> impl Strategy<Value = PauliDistribution> {
        prop::collection::vec(0.0f64..1.0, 1usize << (2 * n)).prop_filter_map("zero mass", move |w| {
            let s: f64 = w.iter().sum();
            (s > 1e-6).then(|| dist(n, &w.iter().map(|v| v / s).collect::<Vec<_>>()))
        })
    }

    /// Total variation as half the ℓ1 gap of the dense weight vectors.
    fn tv_oracle(p: &PauliDistribution, q: &PauliDistribution) -> f64 {
        let k = p.domain_size();
        0.5 * (0..k).map(|i| (p.prob(i) - q.prob(i)).abs()).sum::<f64>()
    }

    proptest! {
        #[test]
        fn exact_is_a_metric(a in arb_dist(2), b in arb_dist(2), c in arb_dist(2)) {
            let ab = diamond_exact(&a, &b).unwrap();
            let ba = diamond_exact(&b, &a).unwrap();
            let bc = diamond_exact(&b, &c).unwrap();
            let ac = diamond_exact(&a, &c).unwrap();
            prop_assert!((ab - ba).abs() < 1e-12);
            prop_assert!(ac <= ab + bc + 1e-12);
            prop_assert!(diamond_exact(&a, &a).unwrap() < 1e-12);
            prop_assert!((0.0..=2.0 + 1e-12).contains(&ab));
        }

        #[test]
        fn exact_is_twice_total_variation(a in arb_dist(2), b in arb_dist(2)) {
            prop_assert!((diamond_exact(&a, &b).unwrap() - 2.0 * tv_oracle(&a, &b)).abs() < 1e-12);
        }
    }
}
