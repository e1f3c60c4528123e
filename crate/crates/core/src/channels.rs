//! Standard channel constructors.

use rand::distr::Open01;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::distribution::PauliDistribution;
use crate::error::{Error, Result};
use crate::pauli::{check_qubits, domain_size, Pauli};
use crate::rng::StreamSeed;

/// Largest `n` for which the product presets enumerate their `2^n` support.
const PRODUCT_PRESET_QUBIT_CAP: usize = 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChannelPreset {
    Identity,
    /// `(1−q)` on the identity plus `q` spread uniformly over all strings.
    Depolarizing { q: f64 },
    /// Independent X errors with probability `q` on every qubit.
    BitFlip { q: f64 },
    /// Independent Z errors with probability `q` on every qubit.
    Dephasing { q: f64 },
    /// Uniformly random support of size `support` with flat-Dirichlet weights.
    SparseRandom { support: u64, seed: u64 },
}

pub fn make_channel(preset: &ChannelPreset, n: usize) -> Result<PauliDistribution> {
    check_qubits(n)?;
    match *preset {
        ChannelPreset::Identity => PauliDistribution::point_mass(n, 0),
        ChannelPreset::Depolarizing { q } => {
            check_prob(q)?;
            let uniform = PauliDistribution::uniform(n)?;
            let share = q / uniform.domain_size() as f64;
            let mut w: Vec<f64> = vec![share; uniform.domain_size() as usize];
            w[0] += 1.0 - q;
            PauliDistribution::from_dense(n, w)
        }
        ChannelPreset::BitFlip { q } => product_channel(n, q, Pauli::X),
        ChannelPreset::Dephasing { q } => product_channel(n, q, Pauli::Z),
        ChannelPreset::SparseRandom { support, seed } => sparse_random(n, support, seed),
    }
}

fn check_prob(q: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidParameter(format!("q must lie in [0, 1], got {q}")));
    }
    Ok(())
}

fn product_channel(n: usize, q: f64, error: Pauli) -> Result<PauliDistribution> {
    check_prob(q)?;
    if n > PRODUCT_PRESET_QUBIT_CAP {
        return Err(Error::ResourceLimit(format!(
            "product presets enumerate 2^n strings; n = {n} exceeds {PRODUCT_PRESET_QUBIT_CAP}"
        )));
    }
    let mut entries = Vec::with_capacity(1 << n);
    for mask in 0u64..(1 << n) {
        let hits = mask.count_ones() as i32;
        let w = q.powi(hits) * (1.0 - q).powi(n as i32 - hits);
        if w == 0.0 {
            continue;
        }
        // Bit k of the mask (counting from the most significant qubit) marks an error.
        let index = (0..n)
            .filter(|k| mask >> (n - 1 - k) & 1 == 1)
            .fold(0u64, |acc, k| acc | (error.digit() as u64) << (2 * (n - 1 - k)));
        entries.push((index, w));
    }
    PauliDistribution::from_sparse(n, entries)
}

fn sparse_random(n: usize, support: u64, seed: u64) -> Result<PauliDistribution> {
    let size = domain_size(n)?;
    if support == 0 || support > size {
        return Err(Error::InvalidParameter(format!(
            "support must lie in 1..=4^{n}, got {support}"
        )));
    }
    if support > 1 << 22 {
        return Err(Error::ResourceLimit(format!("support {support} too large")));
    }
    let mut rng = StreamSeed::new(seed, 0).rng();
    let mut indices: Vec<u64> = if size <= usize::MAX as u64 {
        rand::seq::index::sample(&mut rng, size as usize, support as usize)
            .into_iter()
            .map(|i| i as u64)
            .collect()
    } else {
        unreachable!("4^31 fits in usize on supported targets")
    };
    indices.sort_unstable();
    // Normalized i.i.d. Exp(1) variables are flat-Dirichlet distributed.
    let raw: Vec<f64> = indices
        .iter()
        .map(|_| -rng.sample::<f64, _>(Open01).ln())
        .collect();
    let total: f64 = raw.iter().sum();
    PauliDistribution::from_sparse(n, indices.into_iter().zip(raw.into_iter().map(|w| w / total)))
}
