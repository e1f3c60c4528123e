use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{apply_pauli_channel_on, check_exact_size, DensityMatrix, N_MAX_EXACT};
use crate::distribution::PauliDistribution;
use crate::error::{Error, Result};
use crate::rng::StreamSeed;

/// Outcomes of `count` independent channel uses. Each use yields exactly one
/// sample, so `count` is also the number of channel queries spent.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleBatch {
    pub n: usize,
    pub outcomes: Vec<u64>,
    pub seed: StreamSeed,
    pub count: u64,
}

impl SampleBatch {
    pub fn new(n: usize, outcomes: Vec<u64>, seed: StreamSeed) -> Result<Self> {
        crate::pauli::check_qubits(n)?;
        let size = 1u64 << (2 * n);
        if let Some(bad) = outcomes.iter().find(|&&o| o >= size) {
            return Err(Error::Shape(format!("outcome {bad} out of range for {n} qubits")));
        }
        Ok(Self {
            n,
            count: outcomes.len() as u64,
            outcomes,
            seed,
        })
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn channel_uses(&self) -> u64 {
        self.count
    }

    /// Per-element counts, sorted by index.
    pub fn counts(&self) -> Vec<(u64, u64)> {
        let mut sorted = self.outcomes.clone();
        sorted.sort_unstable();
        let mut out: Vec<(u64, u64)> = Vec::new();
        for o in sorted {
            match out.last_mut() {
                Some(last) if last.0 == o => last.1 += 1,
                _ => out.push((o, 1)),
            }
        }
        out
    }
}

/// Inverse-CDF sampler over the positive weights of a distribution.
#[derive(Clone, Debug)]
pub struct Sampler {
    n: usize,
    indices: Vec<u64>,
    cumulative: Vec<f64>,
}

impl Sampler {
    pub fn new(p: &PauliDistribution) -> Self {
        let mut indices = Vec::new();
        let mut cumulative = Vec::new();
        let mut acc = 0.0;
        for (i, w) in p.nonzero() {
            acc += w;
            indices.push(i);
            cumulative.push(acc);
        }
        Self {
            n: p.num_qubits(),
            indices,
            cumulative,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let total = *self.cumulative.last().expect("distribution has positive mass");
        let u = rng.random::<f64>() * total;
        let pos = self.cumulative.partition_point(|&c| c <= u);
        self.indices[pos.min(self.indices.len() - 1)]
    }

    pub fn batch(&self, count: usize, seed: StreamSeed) -> SampleBatch {
        let mut rng = seed.rng();
        let outcomes = (0..count).map(|_| self.sample(&mut rng)).collect();
        SampleBatch {
            n: self.n,
            outcomes,
            seed,
            count: count as u64,
        }
    }
}

/// `count` i.i.d. draws from the channel's error distribution.
pub fn draw_samples(p: &PauliDistribution, count: usize, seed: StreamSeed) -> SampleBatch {
    Sampler::new(p).batch(count, seed)
}

/// Simulates one use of the channel by drawing a single error string and
/// applying it to `rho`.
pub fn simulate_channel_with_rng<R: Rng + ?Sized>(
    sampler: &Sampler,
    rho: &DensityMatrix,
    rng: &mut R,
) -> Result<DensityMatrix> {
    let n = sampler.n;
    check_exact_size(n, N_MAX_EXACT)?;
    if rho.num_qubits() != n {
        return Err(Error::Shape(format!(
            "channel acts on {n} qubits, state has {}",
            rho.num_qubits()
        )));
    }
    let drawn = sampler.sample(rng);
    let point = PauliDistribution::point_mass(n, drawn)?;
    let qubits: Vec<usize> = (0..n).collect();
    Ok(apply_pauli_channel_on(&point, rho, &qubits))
}

pub fn simulate_channel_from_samples(
    p: &PauliDistribution,
    rho: &DensityMatrix,
    seed: StreamSeed,
) -> Result<DensityMatrix> {
    simulate_channel_with_rng(&Sampler::new(p), rho, &mut seed.rng())
}
