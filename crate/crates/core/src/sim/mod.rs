//! Exact small-system simulation of Pauli channels and the Bell-pair sampling
//! protocol, plus the classical sampler that replaces it in production.
//!
//! One channel use on one half of `n` Bell pairs, followed by Bell
//! measurements, produces exactly one sample of the error distribution. The
//! exact oracles here check that claim numerically; everything downstream draws
//! samples classically with [`draw_samples`].

mod bell;
mod density;
mod sampler;

pub use bell::{
    bell_circuit_distribution, bell_outcome_distribution, bell_pair_vector, choi_state,
    outcome_bits_to_digit,
};
pub use density::{hadamard, pauli_matrix, DensityMatrix, STATE_TOLERANCE};
pub use sampler::{
    draw_samples, simulate_channel_from_samples, simulate_channel_with_rng, SampleBatch, Sampler,
};

use crate::distribution::PauliDistribution;
use crate::error::{Error, Result};
use crate::pauli::PauliString;

/// Largest number of channel qubits handled by the dense oracles. The Choi
/// state needs `16^n` complex entries (16 MiB at n = 5).
pub const N_MAX_EXACT: usize = 5;

pub(crate) fn check_exact_size(n: usize, n_max: usize) -> Result<()> {
    if n > n_max.min(N_MAX_EXACT) {
        return Err(Error::ResourceLimit(format!(
            "exact simulation is limited to {} qubits, channel has {n}",
            n_max.min(N_MAX_EXACT)
        )));
    }
    Ok(())
}

/// `ρ ← Σ_i P(i) τ_i ρ τ_i†` with `τ_i` acting on the listed qubits of `rho`.
pub(crate) fn apply_pauli_channel_on(
    p: &PauliDistribution,
    rho: &DensityMatrix,
    qubits: &[usize],
) -> DensityMatrix {
    debug_assert_eq!(qubits.len(), p.num_qubits());
    let mut out = DensityMatrix::zeroed(rho.num_qubits());
    for (index, weight) in p.nonzero() {
        let tau = PauliString::from_index(index, p.num_qubits()).expect("index in range");
        let mut term = rho.clone();
        for (&q, &pauli) in qubits.iter().zip(tau.digits()) {
            term.apply_pauli(pauli, q);
        }
        out.accumulate(weight, &term);
    }
    out
}

/// Action of the Pauli channel on an `n`-qubit state.
pub fn apply_channel(p: &PauliDistribution, rho: &DensityMatrix) -> Result<DensityMatrix> {
    let n = p.num_qubits();
    check_exact_size(n, N_MAX_EXACT)?;
    if rho.num_qubits() != n {
        return Err(Error::Shape(format!(
            "channel acts on {n} qubits, state has {}",
            rho.num_qubits()
        )));
    }
    let qubits: Vec<usize> = (0..n).collect();
    Ok(apply_pauli_channel_on(p, rho, &qubits))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{make_channel, ChannelPreset};
    use nalgebra::DVector;
    use num_complex::Complex64;

    fn plus_state() -> DensityMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        DensityMatrix::from_pure(&DVector::from_vec(vec![
            Complex64::new(s, 0.0),
            Complex64::new(s, 0.0),
        ]))
        .unwrap()
    }

    #[test]
    fn identity_channel_leaves_state() {
        let rho = plus_state();
        let id = make_channel(&ChannelPreset::Identity, 1).unwrap();
        let out = apply_channel(&id, &rho).unwrap();
        assert!(out.max_deviation(&rho).unwrap() < 1e-12);
    }

    #[test]
    fn x_flips_zero() {
        let x = PauliDistribution::point_mass(1, 1).unwrap();
        let out = apply_channel(&x, &DensityMatrix::zero_state(1)).unwrap();
        let one = DensityMatrix::basis_state(1, 1);
        assert!(out.max_deviation(&one).unwrap() < 1e-15);
    }

    #[test]
    fn full_depolarizing_gives_maximally_mixed() {
        // Brute-force oracle: average the four explicit conjugations.
        let psi = DVector::from_vec(vec![Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)]);
        let rho = DensityMatrix::from_pure(&psi).unwrap();
        let mut expect = nalgebra::DMatrix::<Complex64>::zeros(2, 2);
        for p in crate::pauli::Pauli::ALL {
            let m = pauli_matrix(p);
            let m = nalgebra::DMatrix::from_iterator(2, 2, m.iter().copied());
            expect += (&m * rho.matrix() * m.adjoint()).scale(0.25);
        }
        let dep = make_channel(&ChannelPreset::Depolarizing { q: 1.0 }, 1).unwrap();
        let out = apply_channel(&dep, &rho).unwrap();
        assert!((out.matrix() - &expect).camax() < 1e-15);
        assert!((out.matrix()[(0, 0)].re - 0.5).abs() < 1e-15);
        assert!(out.matrix()[(0, 1)].norm() < 1e-15);
    }

    #[test]
    fn shape_and_size_errors() {
        let p = PauliDistribution::uniform(2).unwrap();
        assert!(matches!(
            apply_channel(&p, &DensityMatrix::zero_state(1)),
            Err(Error::Shape(_))
        ));
        let big = PauliDistribution::point_mass(6, 0).unwrap();
        assert!(matches!(
            apply_channel(&big, &DensityMatrix::zero_state(6)),
            Err(Error::ResourceLimit(_))
        ));
    }

    #[test]
    fn preserves_trace_and_positivity() {
        let p = make_channel(&ChannelPreset::SparseRandom { support: 9, seed: 11 }, 2).unwrap();
        let psi = DVector::from_vec(vec![
            Complex64::new(0.5, 0.5),
            Complex64::new(0.5, 0.0),
            Complex64::new(0.0, -0.5),
            Complex64::new(0.0, 0.0),
        ]);
        let rho = DensityMatrix::from_pure(&psi).unwrap();
        apply_channel(&p, &rho).unwrap().validate(1e-10).unwrap();
    }
}
