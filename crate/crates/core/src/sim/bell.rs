use nalgebra::DVector;
use num_complex::Complex64;

use super::{apply_pauli_channel_on, check_exact_size, hadamard, DensityMatrix, N_MAX_EXACT};
use crate::distribution::PauliDistribution;
use crate::error::{Error, Result};

/// Two-qubit Bell state `|σ_k⟩ = (I ⊗ σ_k)|Φ⁺⟩` (up to phase) in the basis
/// `|ab⟩`, index `2a + b`: Φ⁺, Ψ⁺, Ψ⁻, Φ⁻ for I, X, Y, Z.
pub fn bell_pair_vector(digit: u8) -> [f64; 4] {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    match digit {
        0 => [s, 0.0, 0.0, s],
        1 => [0.0, s, s, 0.0],
        2 => [0.0, s, -s, 0.0],
        3 => [s, 0.0, 0.0, -s],
        _ => panic!("Pauli digit out of range: {digit}"),
    }
}

/// Maps the measured bits of one pair after the uncompute circuit to a Pauli
/// digit. `phase` is the control (Hadamard) qubit, `flip` the target.
/// (0,0)→I, (0,1)→X, (1,1)→Y, (1,0)→Z.
pub fn outcome_bits_to_digit(phase: bool, flip: bool) -> u8 {
    match (phase, flip) {
        (false, false) => 0,
        (false, true) => 1,
        (true, true) => 2,
        (true, false) => 3,
    }
}

/// `|Φ_n⟩⟨Φ_n|` on `2n` qubits ordered `A_1..A_n, A'_1..A'_n`.
fn max_entangled(n: usize) -> DensityMatrix {
    let dim = 1usize << (2 * n);
    let amp = Complex64::new((0.5f64).powi(n as i32).sqrt(), 0.0);
    let mut psi = DVector::zeros(dim);
    for x in 0..(1usize << n) {
        psi[(x << n) | x] = amp;
    }
    DensityMatrix::from_pure(&psi).expect("normalized")
}

/// Choi state `(I ⊗ P)(|Φ_n⟩⟨Φ_n|)` of the channel, on `2n` qubits with the
/// reference system first.
pub fn choi_state(p: &PauliDistribution) -> Result<DensityMatrix> {
    let n = p.num_qubits();
    check_exact_size(n, N_MAX_EXACT)?;
    let phi = max_entangled(n);
    let channel_half: Vec<usize> = (n..2 * n).collect();
    Ok(apply_pauli_channel_on(p, &phi, &channel_half))
}

/// Product of pair Bell states for the string with the given index, reordered
/// from pair order `(A_1 A'_1)(A_2 A'_2)…` into `A_1..A_n, A'_1..A'_n`.
fn bell_basis_vector(index: u64, n: usize) -> DVector<Complex64> {
    let pairs: Vec<[f64; 4]> = (0..n)
        .map(|k| bell_pair_vector(((index >> (2 * (n - 1 - k))) & 3) as u8))
        .collect();
    let mask = (1usize << n) - 1;
    DVector::from_fn(1usize << (2 * n), |idx, _| {
        let (a, b) = (idx >> n, idx & mask);
        let amp = pairs.iter().enumerate().fold(1.0, |acc, (k, pair)| {
            let shift = n - 1 - k;
            acc * pair[2 * ((a >> shift) & 1) + ((b >> shift) & 1)]
        });
        Complex64::new(amp, 0.0)
    })
}

fn probabilities_to_distribution(n: usize, mut probs: Vec<f64>) -> Result<PauliDistribution> {
    for p in probs.iter_mut() {
        if *p < -1e-9 {
            return Err(Error::Internal(format!("negative outcome probability {p}")));
        }
        *p = p.max(0.0);
    }
    PauliDistribution::from_dense(n, probs)
}

/// Born probabilities of the `4^n` Bell-basis projectors on the Choi state.
pub fn bell_outcome_distribution(p: &PauliDistribution) -> Result<PauliDistribution> {
    let n = p.num_qubits();
    let choi = choi_state(p)?;
    let probs = (0..(1u64 << (2 * n)))
        .map(|i| {
            let v = bell_basis_vector(i, n);
            (v.adjoint() * choi.matrix() * &v)[(0, 0)].re
        })
        .collect();
    probabilities_to_distribution(n, probs)
}

/// Runs the explicit measurement circuit on `2n` qubits: pair `k` occupies
/// qubits `2k` (reference) and `2k+1` (channel input). Each pair is entangled
/// with H and CNOT, the channel acts on the odd qubits, then CNOT and H map
/// the Bell basis to the computational basis.
pub fn bell_circuit_distribution(p: &PauliDistribution) -> Result<PauliDistribution> {
    let n = p.num_qubits();
    check_exact_size(n, N_MAX_EXACT)?;
    let h = hadamard();
    let mut rho = DensityMatrix::zero_state(2 * n);
    for k in 0..n {
        rho.apply_single_qubit(&h, 2 * k);
        rho.apply_cnot(2 * k, 2 * k + 1);
    }
    let targets: Vec<usize> = (0..n).map(|k| 2 * k + 1).collect();
    let mut rho = apply_pauli_channel_on(p, &rho, &targets);
    for k in 0..n {
        rho.apply_cnot(2 * k, 2 * k + 1);
        rho.apply_single_qubit(&h, 2 * k);
    }
    let diag = rho.diagonal();
    let bits = 2 * n;
    let mut probs = vec![0.0; 1usize << (2 * n)];
    for (outcome, prob) in diag.into_iter().enumerate() {
        let bit = |q: usize| (outcome >> (bits - 1 - q)) & 1 == 1;
        let index = (0..n).fold(0usize, |acc, k| {
            (acc << 2) | outcome_bits_to_digit(bit(2 * k), bit(2 * k + 1)) as usize
        });
        probs[index] += prob;
    }
    probabilities_to_distribution(n, probs)
}
