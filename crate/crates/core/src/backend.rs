//! Execution backends shared by training and policy evaluation.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::{noisy_counts, NoiseConfig};
use crate::sim::{exact_distribution, Circuit, Distribution, MeasurementCounts, StateVector};
use crate::Scalar;

/// Backend selector as it appears in configs and on the command line.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    #[default]
    Ideal,
    Noisy,
    /// Shot-free oracle; test and diagnostic use only.
    #[serde(alias = "exact")]
    ExactOracle,
}

impl BackendKind {
    pub fn label(self) -> &'static str {
        match self {
            BackendKind::Ideal => "ideal",
            BackendKind::Noisy => "noisy",
            BackendKind::ExactOracle => "exact-oracle",
        }
    }
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for BackendKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ideal" => Ok(BackendKind::Ideal),
            "noisy" => Ok(BackendKind::Noisy),
            "exact" | "exact-oracle" => Ok(BackendKind::ExactOracle),
            other => Err(Error::config(
                "backend",
                format!("unknown backend `{other}` (expected ideal, noisy or exact)"),
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Backend<T> {
    /// Exact state vector, sampled shot by shot.
    Ideal,
    /// Pauli-trajectory noise per shot.
    Noisy(NoiseConfig<T>),
    /// Exact marginal probabilities, no sampling.
    Exact,
}

impl<T: Scalar> Backend<T> {
    pub fn from_kind(kind: BackendKind, noise: NoiseConfig<T>) -> Self {
        match kind {
            BackendKind::Ideal => Backend::Ideal,
            BackendKind::Noisy => Backend::Noisy(noise),
            BackendKind::ExactOracle => Backend::Exact,
        }
    }

    pub fn kind(&self) -> BackendKind {
        match self {
            Backend::Ideal => BackendKind::Ideal,
            Backend::Noisy(_) => BackendKind::Noisy,
            Backend::Exact => BackendKind::ExactOracle,
        }
    }

    /// Run `circuit` from `|0…0⟩` and read `measured`.
    pub fn execute(&self, circuit: &Circuit<T>, measured: &[usize], shots: u64, seed: u64) -> Result<Outcomes<T>> {
        if shots == 0 {
            return Err(Error::ZeroShots);
        }
        match self {
            Backend::Noisy(config) => noisy_counts(circuit, measured, shots, config, seed).map(Outcomes::Counts),
            Backend::Ideal | Backend::Exact => {
                let mut state = StateVector::new(circuit.num_qubits())?;
                state.evolve(circuit)?;
                let dist = exact_distribution(&state, measured)?;
                match self {
                    Backend::Exact => Ok(Outcomes::Exact(dist)),
                    _ => dist.sample(shots, seed).map(Outcomes::Counts),
                }
            }
        }
    }
}

/// What a backend returns: sampled counts or the exact distribution.
#[derive(Clone, Debug, PartialEq)]
pub enum Outcomes<T> {
    Counts(MeasurementCounts),
    Exact(Distribution<T>),
}

impl<T: Scalar> Outcomes<T> {
    /// Relative frequency (or exact probability) of `outcome`.
    pub fn frequency(&self, outcome: u64) -> T {
        match self {
            Outcomes::Counts(c) => T::lit(c.frequency(outcome)),
            Outcomes::Exact(d) => d.probability(outcome as usize),
        }
    }

    pub fn exact(&self) -> Option<&Distribution<T>> {
        match self {
            Outcomes::Exact(d) => Some(d),
            Outcomes::Counts(_) => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kind_parsing() {
        assert_eq!("exact".parse::<BackendKind>().unwrap(), BackendKind::ExactOracle);
        assert_eq!("noisy".parse::<BackendKind>().unwrap(), BackendKind::Noisy);
        assert!("hardware".parse::<BackendKind>().is_err());
        let k: BackendKind = serde_json::from_str("\"exact-oracle\"").unwrap();
        assert_eq!(k, BackendKind::ExactOracle);
    }
}
