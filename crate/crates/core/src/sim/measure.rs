use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;

use super::state::StateVector;
use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::Scalar;

/// Born probabilities of a subset of qubits. Outcome bit `j` is the value of
/// `qubits[j]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution<T> {
    qubits: Vec<usize>,
    probs: Vec<T>,
}

impl<T: Scalar> Distribution<T> {
    pub fn from_probabilities(qubits: Vec<usize>, probs: Vec<T>) -> Self {
        debug_assert_eq!(probs.len(), 1 << qubits.len());
        Self { qubits, probs }
    }

    pub fn qubits(&self) -> &[usize] {
        &self.qubits
    }

    pub fn probabilities(&self) -> &[T] {
        &self.probs
    }

    pub fn probability(&self, outcome: usize) -> T {
        self.probs[outcome]
    }

    /// Draw `shots` i.i.d. outcomes. Shot `i` uses stream `i` under `seed`.
    pub fn sample(&self, shots: u64, seed: u64) -> Result<MeasurementCounts> {
        if shots == 0 {
            return Err(Error::ZeroShots);
        }
        let mut cumulative = Vec::with_capacity(self.probs.len());
        let mut acc = 0.0;
        for p in &self.probs {
            acc += p.as_f64();
            cumulative.push(acc);
        }
        let last = cumulative.len() - 1;
        let counts = (0..shots)
            .into_par_iter()
            .fold(BTreeMap::new, |mut counts, shot| {
                let u: f64 = stream_rng(seed, shot).gen::<f64>() * acc;
                let outcome = cumulative.partition_point(|&c| c <= u).min(last);
                *counts.entry(outcome as u64).or_insert(0u64) += 1;
                counts
            })
            .reduce(BTreeMap::new, merge_counts);
        Ok(MeasurementCounts {
            num_bits: self.qubits.len(),
            counts,
            total_shots: shots,
        })
    }
}

pub(crate) fn merge_counts(mut a: BTreeMap<u64, u64>, b: BTreeMap<u64, u64>) -> BTreeMap<u64, u64> {
    for (k, v) in b {
        *a.entry(k).or_insert(0) += v;
    }
    a
}

/// Marginal Born distribution of `qubits`.
pub fn exact_distribution<T: Scalar>(state: &StateVector<T>, qubits: &[usize]) -> Result<Distribution<T>> {
    if qubits.is_empty() {
        return Err(Error::EmptyQubitSubset);
    }
    if let Some(&q) = qubits.iter().find(|&&q| q >= state.num_qubits()) {
        return Err(Error::QubitIndex {
            qubit: q,
            num_qubits: state.num_qubits(),
        });
    }
    let mut probs = vec![T::zero(); 1 << qubits.len()];
    for (index, amp) in state.amplitudes().iter().enumerate() {
        let outcome = qubits
            .iter()
            .enumerate()
            .fold(0usize, |acc, (j, &q)| acc | ((index >> q & 1) << j));
        probs[outcome] = probs[outcome] + amp.norm_sqr();
    }
    Ok(Distribution {
        qubits: qubits.to_vec(),
        probs,
    })
}

/// Histogram of measured outcomes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MeasurementCounts {
    num_bits: usize,
    counts: BTreeMap<u64, u64>,
    total_shots: u64,
}

impl MeasurementCounts {
    pub fn from_outcomes(num_bits: usize, outcomes: impl IntoIterator<Item = u64>) -> Self {
        let mut counts = BTreeMap::new();
        let mut total_shots = 0;
        for o in outcomes {
            *counts.entry(o).or_insert(0) += 1;
            total_shots += 1;
        }
        Self {
            num_bits,
            counts,
            total_shots,
        }
    }

    pub(crate) fn from_map(num_bits: usize, counts: BTreeMap<u64, u64>) -> Self {
        let total_shots = counts.values().sum();
        Self {
            num_bits,
            counts,
            total_shots,
        }
    }

    pub fn num_bits(&self) -> usize {
        self.num_bits
    }

    pub fn total_shots(&self) -> u64 {
        self.total_shots
    }

    /// Count for an integer outcome (bit `j` = `j`-th measured qubit).
    pub fn count(&self, outcome: u64) -> u64 {
        self.counts.get(&outcome).copied().unwrap_or(0)
    }

    /// Count for a bitstring written most-significant measured qubit first.
    pub fn get(&self, bitstring: &str) -> u64 {
        u64::from_str_radix(bitstring, 2).map(|o| self.count(o)).unwrap_or(0)
    }

    pub fn frequency(&self, outcome: u64) -> f64 {
        self.count(outcome) as f64 / self.total_shots as f64
    }

    pub fn bitstring(&self, outcome: u64) -> String {
        format!("{:0width$b}", outcome, width = self.num_bits)
    }

    /// `(outcome, count)` pairs in ascending outcome order, zeros omitted.
    pub fn iter(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.counts.iter().map(|(&k, &v)| (k, v))
    }

    /// Same histogram keyed by bitstrings.
    pub fn to_bitstrings(&self) -> BTreeMap<String, u64> {
        self.iter().map(|(o, c)| (self.bitstring(o), c)).collect()
    }
}

/// Sample every qubit of `state`.
pub fn measure_all<T: Scalar>(state: &StateVector<T>, shots: u64, seed: u64) -> Result<MeasurementCounts> {
    let qubits: Vec<usize> = (0..state.num_qubits()).collect();
    measure_qubits(state, &qubits, shots, seed)
}

/// Sample a subset of qubits; the rest are traced out.
pub fn measure_qubits<T: Scalar>(
    state: &StateVector<T>,
    qubits: &[usize],
    shots: u64,
    seed: u64,
) -> Result<MeasurementCounts> {
    if shots == 0 {
        return Err(Error::ZeroShots);
    }
    exact_distribution(state, qubits)?.sample(shots, seed)
}
