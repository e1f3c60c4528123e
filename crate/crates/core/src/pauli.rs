//! Pauli strings and their base-4 integer encoding.
//!
//! The first qubit is the most significant base-4 digit, so `"ZX"` maps to
//! `3 * 4 + 1 = 13`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Largest qubit count whose domain `4^n` fits in a `u64` index.
pub const MAX_QUBITS: usize = 31;

/// Canonical label alphabet, indexed by digit.
pub const LABEL_ALPHABET: [char; 4] = ['I', 'X', 'Y', 'Z'];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum Pauli {
    I = 0,
    X = 1,
    Y = 2,
    Z = 3,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn from_digit(d: u8) -> Option<Pauli> {
        Pauli::ALL.get(d as usize).copied()
    }

    pub fn from_char(c: char) -> Option<Pauli> {
        match c {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    pub fn digit(self) -> u8 {
        self as u8
    }

    pub fn label(self) -> char {
        LABEL_ALPHABET[self as usize]
    }
}

/// Number of Pauli strings on `n` qubits.
pub fn domain_size(n: usize) -> Result<u64> {
    check_qubits(n)?;
    Ok(1u64 << (2 * n))
}

pub(crate) fn check_qubits(n: usize) -> Result<()> {
    if n == 0 || n > MAX_QUBITS {
        return Err(Error::InvalidParameter(format!(
            "qubit count must be in 1..={MAX_QUBITS}, got {n}"
        )));
    }
    Ok(())
}

/// An n-fold tensor product of single-qubit Pauli operators.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    digits: Vec<Pauli>,
}

impl PauliString {
    pub fn new(digits: Vec<Pauli>) -> Result<Self> {
        check_qubits(digits.len())?;
        Ok(Self { digits })
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::new(vec![Pauli::I; n])
    }

    pub fn from_index(index: u64, n: usize) -> Result<Self> {
        let size = domain_size(n)?;
        if index >= size {
            return Err(Error::InvalidParameter(format!(
                "index {index} out of range for {n} qubits"
            )));
        }
        let digits = (0..n)
            .map(|k| {
                let shift = 2 * (n - 1 - k);
                Pauli::ALL[((index >> shift) & 3) as usize]
            })
            .collect();
        Ok(Self { digits })
    }

    pub fn num_qubits(&self) -> usize {
        self.digits.len()
    }

    pub fn digits(&self) -> &[Pauli] {
        &self.digits
    }

    pub fn index(&self) -> u64 {
        self.digits
            .iter()
            .fold(0u64, |acc, p| (acc << 2) | p.digit() as u64)
    }

    pub fn label(&self) -> String {
        self.digits.iter().map(|p| p.label()).collect()
    }

    /// Number of non-identity factors.
    pub fn weight(&self) -> usize {
        self.digits.iter().filter(|p| **p != Pauli::I).count()
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.is_empty() {
            return Err(Error::InvalidLabel("empty label".into()));
        }
        let digits = s
            .chars()
            .map(|c| {
                Pauli::from_char(c)
                    .ok_or_else(|| Error::InvalidLabel(format!("unknown symbol {c:?} in {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(digits)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Parses a label such as `"IXZY"` and returns the string together with its index.
pub fn encode(label: &str) -> Result<(PauliString, u64)> {
    let s: PauliString = label.parse()?;
    let idx = s.index();
    Ok((s, idx))
}

pub fn decode(index: u64, n: usize) -> Result<PauliString> {
    PauliString::from_index(index, n)
}
