//! Error distributions of Pauli channels.
//!
//! A channel on `n` qubits is fully described by a probability vector over the
//! `4^n` Pauli strings. Small systems store it densely; large or sparse ones
//! store only the listed indices, with every omitted index meaning zero.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{check_qubits, domain_size, PauliString};

/// Maximum tolerated deviation of the total weight from one on input.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// Default largest `n` for which a dense weight vector is allowed (4^10 entries).
pub const DEFAULT_DENSE_QUBIT_CAP: usize = 10;

#[derive(Clone, Debug)]
enum Weights {
    Dense(Vec<f64>),
    /// Sorted by index, no duplicates.
    Sparse(Vec<(u64, f64)>),
}

/// Probability distribution over the Pauli strings of an `n`-qubit system.
#[derive(Clone, Debug)]
pub struct PauliDistribution {
    n: usize,
    weights: Weights,
}

impl PauliDistribution {
    pub fn from_dense(n: usize, weights: Vec<f64>) -> Result<Self> {
        Self::from_dense_with_cap(n, weights, DEFAULT_DENSE_QUBIT_CAP)
    }

    pub fn from_dense_with_cap(n: usize, mut weights: Vec<f64>, cap: usize) -> Result<Self> {
        check_dense_size(n, cap)?;
        let size = domain_size(n)? as usize;
        if weights.len() != size {
            return Err(Error::Shape(format!(
                "dense weight vector has {} entries, expected 4^{n} = {size}",
                weights.len()
            )));
        }
        let total = validate_weights(weights.iter().copied())?;
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(Self {
            n,
            weights: Weights::Dense(weights),
        })
    }

    /// Builds a sparse distribution; duplicate indices are rejected.
    pub fn from_sparse<I>(n: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (u64, f64)>,
    {
        let size = domain_size(n)?;
        let mut entries: Vec<(u64, f64)> = entries.into_iter().collect();
        entries.sort_by_key(|e| e.0);
        for pair in entries.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(Error::InvalidDistribution(format!(
                    "index {} listed twice",
                    pair[0].0
                )));
            }
        }
        if let Some(&(idx, _)) = entries.last() {
            if idx >= size {
                return Err(Error::Shape(format!(
                    "index {idx} out of range for {n} qubits"
                )));
            }
        }
        let total = validate_weights(entries.iter().map(|e| e.1))?;
        entries.iter_mut().for_each(|e| e.1 /= total);
        Ok(Self {
            n,
            weights: Weights::Sparse(entries),
        })
    }

    pub fn point_mass(n: usize, index: u64) -> Result<Self> {
        Self::from_sparse(n, [(index, 1.0)])
    }

    /// Uniform distribution over all `4^n` strings (the fully depolarizing channel).
    pub fn uniform(n: usize) -> Result<Self> {
        check_dense_size(n, DEFAULT_DENSE_QUBIT_CAP)?;
        let size = domain_size(n)? as usize;
        Self::from_dense(n, vec![1.0 / size as f64; size])
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    /// `4^n`.
    pub fn domain_size(&self) -> u64 {
        1u64 << (2 * self.n)
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.weights, Weights::Dense(_))
    }

    pub fn prob(&self, index: u64) -> f64 {
        match &self.weights {
            Weights::Dense(w) => w.get(index as usize).copied().unwrap_or(0.0),
            Weights::Sparse(e) => e
                .binary_search_by_key(&index, |x| x.0)
                .map(|pos| e[pos].1)
                .unwrap_or(0.0),
        }
    }

    /// Stored `(index, weight)` pairs in increasing index order. Dense
    /// distributions yield every index, including zeros.
    pub fn iter(&self) -> Box<dyn Iterator<Item = (u64, f64)> + '_> {
        match &self.weights {
            Weights::Dense(w) => Box::new(w.iter().enumerate().map(|(i, &p)| (i as u64, p))),
            Weights::Sparse(e) => Box::new(e.iter().copied()),
        }
    }

    /// Entries with strictly positive weight.
    pub fn nonzero(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.iter().filter(|e| e.1 > 0.0)
    }

    /// Number of stored entries (4^n for dense storage).
    pub fn stored_len(&self) -> usize {
        match &self.weights {
            Weights::Dense(w) => w.len(),
            Weights::Sparse(e) => e.len(),
        }
    }

    pub fn to_dense(&self) -> Result<Self> {
        check_dense_size(self.n, DEFAULT_DENSE_QUBIT_CAP)?;
        let mut w = vec![0.0; self.domain_size() as usize];
        for (i, p) in self.iter() {
            w[i as usize] = p;
        }
        Ok(Self {
            n: self.n,
            weights: Weights::Dense(w),
        })
    }

    /// Sparse copy keeping only the positive weights.
    pub fn to_sparse(&self) -> Self {
        Self {
            n: self.n,
            weights: Weights::Sparse(self.nonzero().collect()),
        }
    }

    pub fn to_channel_file(&self) -> ChannelFile {
        let weights = self
            .nonzero()
            .map(|(i, p)| {
                let label = PauliString::from_index(i, self.n)
                    .expect("stored index is in range")
                    .label();
                (label, p)
            })
            .collect();
        ChannelFile { n: self.n, weights }
    }

    pub fn from_channel_file(file: &ChannelFile) -> Result<Self> {
        check_qubits(file.n)?;
        let entries = file
            .weights
            .iter()
            .map(|(label, &w)| {
                let s: PauliString = label.parse()?;
                if s.num_qubits() != file.n {
                    return Err(Error::Shape(format!(
                        "label {label:?} has {} qubits, file declares n = {}",
                        s.num_qubits(),
                        file.n
                    )));
                }
                Ok((s.index(), w))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_sparse(file.n, entries)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let file: ChannelFile = serde_json::from_str(s)?;
        Self::from_channel_file(&file)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_channel_file())?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json_string()? + "\n")?;
        Ok(())
    }
}

/// On-disk channel description: `{"n": 2, "weights": {"IX": 0.25, ...}}`.
/// Omitted labels have weight zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelFile {
    pub n: usize,
    pub weights: BTreeMap<String, f64>,
}

fn check_dense_size(n: usize, cap: usize) -> Result<()> {
    check_qubits(n)?;
    if n > cap {
        return Err(Error::ResourceLimit(format!(
            "dense storage for {n} qubits exceeds the cap of {cap}; use a sparse distribution"
        )));
    }
    Ok(())
}

/// Neumaier summation: error independent of the number of terms.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(self) -> f64 {
        self.sum + self.carry
    }
}

impl std::iter::FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = Self::default();
        iter.into_iter().for_each(|x| s.add(x));
        s
    }
}

fn validate_weights(weights: impl Iterator<Item = f64>) -> Result<f64> {
    let mut total = CompensatedSum::default();
    for w in weights {
        if !w.is_finite() || w < 0.0 {
            return Err(Error::InvalidDistribution(format!("weight {w} is not a probability")));
        }
        total.add(w);
    }
    // Naive summation over 4^10 weights drifts by ~1e-10, which renormalization
    // would spread into every weight.
    let total = total.value();
    if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(Error::InvalidDistribution(format!(
            "weights sum to {total}, expected 1 within {NORMALIZATION_TOLERANCE:e}"
        )));
    }
    Ok(total)
}

/// Merge-joins the stored entries of two distributions over the same domain,
/// yielding `(index, p, q)` with implicit zeros filled in.
pub(crate) fn zip_weights<'a>(
    p: &'a PauliDistribution,
    q: &'a PauliDistribution,
) -> impl Iterator<Item = (u64, f64, f64)> + 'a {
    let mut a = p.iter().peekable();
    let mut b = q.iter().peekable();
    std::iter::from_fn(move || match (a.peek().copied(), b.peek().copied()) {
        (None, None) => None,
        (Some((i, x)), None) => {
            a.next();
            Some((i, x, 0.0))
        }
        (None, Some((j, y))) => {
            b.next();
            Some((j, 0.0, y))
        }
        (Some((i, x)), Some((j, y))) => {
            if i == j {
                a.next();
                b.next();
                Some((i, x, y))
            } else if i < j {
                a.next();
                Some((i, x, 0.0))
            } else {
                b.next();
                Some((j, 0.0, y))
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_keeps_tiny_terms() {
        let terms = std::iter::once(1.0).chain(std::iter::repeat_n(1e-16, 1_000_000));
        let s = terms.collect::<CompensatedSum>().value();
        assert!((s - (1.0 + 1e-10)).abs() < 1e-22);
        let naive: f64 = std::iter::once(1.0).chain(std::iter::repeat_n(1e-16, 1_000_000)).sum();
        assert_eq!(naive, 1.0);
    }

    #[test]
    fn large_flat_tail_is_not_perturbed() {
        let n = 10;
        let rest = (1u64 << 20) as f64 - 1.0;
        let mut w = vec![0.01 / rest; 1 << 20];
        w[0] = 0.99;
        let p = PauliDistribution::from_dense(n, w).unwrap();
        assert!((p.prob(0) - 0.99).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_weights() {
        assert!(PauliDistribution::from_dense(1, vec![0.5, 0.5, 0.1, -0.1]).is_err());
        assert!(PauliDistribution::from_dense(1, vec![0.5, 0.5, 0.1, 0.0]).is_err());
        assert!(PauliDistribution::from_dense(1, vec![0.5, 0.5]).is_err());
        assert!(PauliDistribution::from_sparse(1, [(0, 0.5), (0, 0.5)]).is_err());
        assert!(PauliDistribution::from_sparse(1, [(4, 1.0)]).is_err());
        assert!(PauliDistribution::from_sparse(1, [(0, f64::NAN)]).is_err());
    }

    #[test]
    fn renormalizes_within_tolerance() {
        let p = PauliDistribution::from_sparse(1, [(0, 0.5 + 4e-10), (3, 0.5)]).unwrap();
        let total: f64 = p.iter().map(|e| e.1).sum();
        assert!((total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn dense_cap_is_enforced() {
        assert!(matches!(
            PauliDistribution::uniform(11),
            Err(Error::ResourceLimit(_))
        ));
        assert!(PauliDistribution::point_mass(20, 5).is_ok());
    }

    #[test]
    fn channel_file_round_trip() {
        let json = r#"{"n": 2, "weights": {"II": 0.5, "ZX": 0.25, "YY": 0.25}}"#;
        let p = PauliDistribution::from_json_str(json).unwrap();
        assert_eq!(p.prob(13), 0.25);
        assert_eq!(p.prob(10), 0.25);
        assert_eq!(p.prob(1), 0.0);
        let back = PauliDistribution::from_json_str(&p.to_json_string().unwrap()).unwrap();
        assert_eq!(back.to_channel_file(), p.to_channel_file());
    }

    #[test]
    fn channel_file_rejects_mismatched_labels() {
        let json = r#"{"n": 2, "weights": {"I": 1.0}}"#;
        assert!(matches!(
            PauliDistribution::from_json_str(json),
            Err(Error::Shape(_))
        ));
        let json = r#"{"n": 1, "weights": {"Q": 1.0}}"#;
        assert!(matches!(
            PauliDistribution::from_json_str(json),
            Err(Error::InvalidLabel(_))
        ));
        let json = r#"{"n": 1, "weights": {"I": 0.9}}"#;
        assert!(matches!(
            PauliDistribution::from_json_str(json),
            Err(Error::InvalidDistribution(_))
        ));
    }

    #[test]
    fn zip_fills_zeros() {
        let p = PauliDistribution::from_sparse(1, [(1, 1.0)]).unwrap();
        let q = PauliDistribution::from_dense(1, vec![0.25; 4]).unwrap();
        let z: Vec<_> = zip_weights(&p, &q).collect();
        assert_eq!(z.len(), 4);
        assert_eq!(z[1], (1, 1.0, 0.25));
        assert_eq!(z[2], (2, 0.0, 0.25));
    }
}
