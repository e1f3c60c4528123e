//! Distances and information measures on Pauli distributions.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::distribution::{zip_weights, CompensatedSum, PauliDistribution};
use crate::error::{Error, Result};

/// Order of an ℓp norm, `p ∈ [1, ∞]`. Infinity is its own variant.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub enum PNorm {
    Finite(f64),
    Infinity,
}

impl PNorm {
    pub const ONE: PNorm = PNorm::Finite(1.0);
    pub const TWO: PNorm = PNorm::Finite(2.0);

    pub fn new(p: f64) -> Result<Self> {
        if p.is_nan() || p < 1.0 {
            return Err(Error::InvalidParameter(format!("p must be >= 1, got {p}")));
        }
        if p.is_infinite() {
            return Ok(PNorm::Infinity);
        }
        Ok(PNorm::Finite(p))
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, PNorm::Infinity)
    }

    /// `p` as a float, `f64::INFINITY` for ℓ∞.
    pub fn value(self) -> f64 {
        match self {
            PNorm::Finite(p) => p,
            PNorm::Infinity => f64::INFINITY,
        }
    }

    /// `1/p`, zero for ℓ∞.
    pub fn reciprocal(self) -> f64 {
        match self {
            PNorm::Finite(p) => 1.0 / p,
            PNorm::Infinity => 0.0,
        }
    }
}

impl FromStr for PNorm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => Ok(PNorm::Infinity),
            other => {
                let p: f64 = other
                    .parse()
                    .map_err(|_| Error::InvalidParameter(format!("cannot parse p from {s:?}")))?;
                PNorm::new(p)
            }
        }
    }
}

impl fmt::Display for PNorm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PNorm::Finite(p) => write!(f, "{p}"),
            PNorm::Infinity => f.write_str("inf"),
        }
    }
}

impl Serialize for PNorm {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            PNorm::Finite(p) => s.serialize_f64(*p),
            PNorm::Infinity => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for PNorm {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        let parsed = match Raw::deserialize(d)? {
            Raw::Num(p) => PNorm::new(p),
            Raw::Text(s) => s.parse(),
        };
        parsed.map_err(serde::de::Error::custom)
    }
}

/// Accuracy parameters of a learning task.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpParams {
    pub p: PNorm,
    pub epsilon: f64,
    pub delta: f64,
}

impl LpParams {
    pub fn new(p: PNorm, epsilon: f64, delta: f64) -> Result<Self> {
        check_open_unit("epsilon", epsilon)?;
        check_open_unit("delta", delta)?;
        Ok(Self { p, epsilon, delta })
    }
}

pub(crate) fn check_open_unit(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v < 1.0) {
        return Err(Error::InvalidParameter(format!("{name} must lie in (0, 1), got {v}")));
    }
    Ok(())
}

fn check_same_n(p: &PauliDistribution, q: &PauliDistribution) -> Result<()> {
    if p.num_qubits() != q.num_qubits() {
        return Err(Error::Shape(format!(
            "distributions act on {} and {} qubits",
            p.num_qubits(),
            q.num_qubits()
        )));
    }
    Ok(())
}

/// ℓp distance between two distributions on the same number of qubits.
pub fn lp_distance(p: &PauliDistribution, q: &PauliDistribution, norm: PNorm) -> Result<f64> {
    check_same_n(p, q)?;
    let max_gap = zip_weights(p, q).fold(0.0f64, |m, (_, a, b)| m.max((a - b).abs()));
    match norm {
        PNorm::Infinity => Ok(max_gap),
        PNorm::Finite(e) if e < 1.0 || e.is_nan() => {
            Err(Error::InvalidParameter(format!("p must be >= 1, got {e}")))
        }
        _ if max_gap == 0.0 => Ok(0.0),
        PNorm::Finite(1.0) => {
            Ok(zip_weights(p, q).map(|(_, a, b)| (a - b).abs()).collect::<CompensatedSum>().value())
        }
        PNorm::Finite(e) => {
            // Scale by the largest gap so large exponents do not underflow.
            let s: f64 = zip_weights(p, q)
                .map(|(_, a, b)| ((a - b).abs() / max_gap).powf(e))
                .sum();
            Ok(max_gap * s.powf(1.0 / e))
        }
    }
}

/// Total variation distance, computed as the positive part of `P − Q`.
pub fn total_variation(p: &PauliDistribution, q: &PauliDistribution) -> Result<f64> {
    check_same_n(p, q)?;
    Ok(zip_weights(p, q).map(|(_, a, b)| (a - b).max(0.0)).collect::<CompensatedSum>().value())
}

/// Shannon entropy in bits, with `0 log 0 = 0`.
pub fn shannon_entropy(p: &PauliDistribution) -> f64 {
    let h = p.nonzero().map(|(_, w)| -w * w.log2()).collect::<CompensatedSum>().value();
    h.max(0.0)
}

/// Number of Pauli strings with strictly positive weight.
pub fn support_size(p: &PauliDistribution) -> u64 {
    p.nonzero().count() as u64
}

pub fn binary_entropy(eps: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::InvalidParameter(format!(
            "binary entropy argument must lie in [0, 1], got {eps}"
        )));
    }
    if eps == 0.0 || eps == 1.0 {
        return Ok(0.0);
    }
    Ok(-eps * eps.log2() - (1.0 - eps) * (1.0 - eps).log2())
}

/// Fannes–Audenaert continuity bound on `|H(P̂) − H(P)|` for two distributions
/// at total variation distance `eps < 1/2` on `n` qubits.
pub fn fannes_audenaert_bound(eps: f64, n: usize) -> Result<f64> {
    if !(0.0..0.5).contains(&eps) {
        return Err(Error::Precondition(format!(
            "the continuity bound needs total variation in [0, 1/2), got {eps}"
        )));
    }
    crate::pauli::check_qubits(n)?;
    let d_minus_one = 4f64.powi(n as i32) - 1.0;
    Ok(eps * d_minus_one.log2() + binary_entropy(eps)?)
}
