use nalgebra::{DMatrix, DVector, Matrix2};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pauli::Pauli;

/// Tolerance used when validating density matrices.
pub const STATE_TOLERANCE: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn pauli_matrix(p: Pauli) -> Matrix2<Complex64> {
    match p {
        Pauli::I => Matrix2::new(ONE, ZERO, ZERO, ONE),
        Pauli::X => Matrix2::new(ZERO, ONE, ONE, ZERO),
        Pauli::Y => Matrix2::new(ZERO, -I, I, ZERO),
        Pauli::Z => Matrix2::new(ONE, ZERO, ZERO, -ONE),
    }
}

pub fn hadamard() -> Matrix2<Complex64> {
    let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    Matrix2::new(h, h, h, -h)
}

/// Dense density operator on `num_qubits` qubits. Qubit 0 is the most
/// significant bit of the basis index.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    num_qubits: usize,
    data: DMatrix<Complex64>,
}

impl DensityMatrix {
    /// Wraps `data` after checking it is Hermitian, unit-trace and PSD.
    pub fn new(data: DMatrix<Complex64>) -> Result<Self> {
        let rho = Self::from_matrix_unchecked(data)?;
        rho.validate(STATE_TOLERANCE)?;
        Ok(rho)
    }

    pub(crate) fn from_matrix_unchecked(data: DMatrix<Complex64>) -> Result<Self> {
        let dim = data.nrows();
        if dim != data.ncols() || dim < 2 || !dim.is_power_of_two() {
            return Err(Error::Shape(format!(
                "density matrix must be square with power-of-two dimension, got {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        Ok(Self {
            num_qubits: dim.trailing_zeros() as usize,
            data,
        })
    }

    pub fn zero_state(num_qubits: usize) -> Self {
        Self::basis_state(num_qubits, 0)
    }

    pub fn basis_state(num_qubits: usize, index: usize) -> Self {
        let dim = 1usize << num_qubits;
        let mut data = DMatrix::zeros(dim, dim);
        data[(index, index)] = ONE;
        Self { num_qubits, data }
    }

    /// `|ψ⟩⟨ψ|` for a normalized state vector.
    pub fn from_pure(psi: &DVector<Complex64>) -> Result<Self> {
        let norm = psi.norm();
        if (norm - 1.0).abs() > STATE_TOLERANCE {
            return Err(Error::InvalidParameter(format!("state vector has norm {norm}")));
        }
        Self::from_matrix_unchecked(psi * psi.adjoint())
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.data
    }

    pub fn trace(&self) -> Complex64 {
        self.data.trace()
    }

    pub fn hermiticity_error(&self) -> f64 {
        (&self.data - self.data.adjoint()).camax()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let herm = (&self.data + self.data.adjoint()).scale(0.5);
        herm.symmetric_eigenvalues().iter().copied().collect()
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        let herm = self.hermiticity_error();
        if herm > tol {
            return Err(Error::InvalidParameter(format!(
                "matrix is not Hermitian (deviation {herm:e})"
            )));
        }
        let tr = self.trace();
        if (tr.re - 1.0).abs() > tol || tr.im.abs() > tol {
            return Err(Error::InvalidParameter(format!("trace is {tr}, expected 1")));
        }
        let min = self.eigenvalues().into_iter().fold(f64::INFINITY, f64::min);
        if min < -tol {
            return Err(Error::InvalidParameter(format!(
                "matrix has negative eigenvalue {min:e}"
            )));
        }
        Ok(())
    }

    /// Largest entrywise modulus of `self − other`.
    pub fn max_deviation(&self, other: &DensityMatrix) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::Shape(format!(
                "dimensions {} and {} differ",
                self.dim(),
                other.dim()
            )));
        }
        Ok((&self.data - &other.data).camax())
    }

    /// Computational-basis measurement probabilities.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.data[(i, i)].re).collect()
    }

    fn bit(&self, qubit: usize) -> usize {
        1 << (self.num_qubits - 1 - qubit)
    }

    /// `ρ ← U ρ U†` with `U` acting on one qubit.
    pub fn apply_single_qubit(&mut self, u: &Matrix2<Complex64>, qubit: usize) {
        assert!(qubit < self.num_qubits, "qubit {qubit} out of range");
        let mask = self.bit(qubit);
        let dim = self.dim();
        let d = &mut self.data;
        for c in 0..dim {
            for r0 in (0..dim).filter(|r| r & mask == 0) {
                let r1 = r0 | mask;
                let (a, b) = (d[(r0, c)], d[(r1, c)]);
                d[(r0, c)] = u[(0, 0)] * a + u[(0, 1)] * b;
                d[(r1, c)] = u[(1, 0)] * a + u[(1, 1)] * b;
            }
        }
        for c0 in (0..dim).filter(|c| c & mask == 0) {
            let c1 = c0 | mask;
            for r in 0..dim {
                let (a, b) = (d[(r, c0)], d[(r, c1)]);
                d[(r, c0)] = a * u[(0, 0)].conj() + b * u[(0, 1)].conj();
                d[(r, c1)] = a * u[(1, 0)].conj() + b * u[(1, 1)].conj();
            }
        }
    }

    pub fn apply_pauli(&mut self, p: Pauli, qubit: usize) {
        if p != Pauli::I {
            self.apply_single_qubit(&pauli_matrix(p), qubit);
        }
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) {
        assert!(control != target && control < self.num_qubits && target < self.num_qubits);
        let (cm, tm) = (self.bit(control), self.bit(target));
        let perm = |i: usize| if i & cm != 0 { i ^ tm } else { i };
        let dim = self.dim();
        let old = self.data.clone();
        for r in 0..dim {
            for c in 0..dim {
                self.data[(perm(r), perm(c))] = old[(r, c)];
            }
        }
    }

    pub(crate) fn accumulate(&mut self, weight: f64, other: &DensityMatrix) {
        self.data += other.data.scale(weight);
    }

    pub(crate) fn zeroed(num_qubits: usize) -> Self {
        let dim = 1usize << num_qubits;
        Self {
            num_qubits,
            data: DMatrix::zeros(dim, dim),
        }
    }
}
