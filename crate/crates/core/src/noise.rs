//! Pauli-trajectory noise.
//!
//! Each trajectory runs the circuit gate by gate. After a one-qubit gate the
//! touched qubit suffers a uniformly random Pauli from `{X, Y, Z}` with
//! probability `p1`; after a multi-qubit gate (controls count) every touched
//! qubit independently suffers one with probability `p2`. With probability
//! `p` of a Pauli, `p = 3/4` is the fully depolarizing channel. Each measured
//! bit is then flipped with probability `readout_flip`.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_probability, Error, Result};
use crate::rng::stream_rng;
use crate::sim::{merge_counts, Circuit, Gate, MeasurementCounts, StateVector};
use crate::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseConfig<T> {
    pub p1: T,
    pub p2: T,
    pub readout_flip: T,
    pub seed: u64,
}

impl<T: Scalar> Default for NoiseConfig<T> {
    fn default() -> Self {
        Self {
            p1: T::lit(5e-4),
            p2: T::lit(5e-3),
            readout_flip: T::lit(5e-3),
            seed: 0,
        }
    }
}

impl<T: Scalar> NoiseConfig<T> {
    pub fn noiseless() -> Self {
        Self {
            p1: T::zero(),
            p2: T::zero(),
            readout_flip: T::zero(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_probability("p1", self.p1)?;
        check_probability("p2", self.p2)?;
        check_probability("readout_flip", self.readout_flip)
    }
}

/// Ideal executor wrapped with a [`NoiseConfig`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoisyBackend<T> {
    pub config: NoiseConfig<T>,
}

impl<T: Scalar> NoisyBackend<T> {
    pub fn new(config: NoiseConfig<T>) -> Result<Self> {
        config.validate()?;
        Ok(Self { config })
    }

    pub fn counts(&self, circuit: &Circuit<T>, measured: &[usize], shots: u64, seed: u64) -> Result<MeasurementCounts> {
        noisy_counts(circuit, measured, shots, &self.config, seed)
    }
}

/// One noisy execution of `circuit`, returning the measured bits of
/// `measured` (bit `j` = `measured[j]`). Trajectory `index` uses stream
/// `index` under `seed`.
pub fn run_trajectory<T: Scalar>(
    circuit: &Circuit<T>,
    measured: &[usize],
    config: &NoiseConfig<T>,
    seed: u64,
    index: u64,
) -> Result<u64> {
    check_inputs(circuit, measured, config)?;
    Ok(trajectory(circuit, measured, config, &mut stream_rng(seed, index)))
}

/// Aggregate `shots` independent trajectories.
pub fn noisy_counts<T: Scalar>(
    circuit: &Circuit<T>,
    measured: &[usize],
    shots: u64,
    config: &NoiseConfig<T>,
    seed: u64,
) -> Result<MeasurementCounts> {
    if shots == 0 {
        return Err(Error::ZeroShots);
    }
    check_inputs(circuit, measured, config)?;
    let counts = (0..shots)
        .into_par_iter()
        .fold(BTreeMap::new, |mut acc, i| {
            let outcome = trajectory(circuit, measured, config, &mut stream_rng(seed, i));
            *acc.entry(outcome).or_insert(0u64) += 1;
            acc
        })
        .reduce(BTreeMap::new, merge_counts);
    Ok(MeasurementCounts::from_map(measured.len(), counts))
}

fn check_inputs<T: Scalar>(circuit: &Circuit<T>, measured: &[usize], config: &NoiseConfig<T>) -> Result<()> {
    config.validate()?;
    if measured.is_empty() {
        return Err(Error::EmptyQubitSubset);
    }
    if let Some(&q) = measured.iter().find(|&&q| q >= circuit.num_qubits()) {
        return Err(Error::QubitIndex {
            qubit: q,
            num_qubits: circuit.num_qubits(),
        });
    }
    StateVector::<T>::new(circuit.num_qubits())?;
    circuit.validate()
}

fn random_pauli<T: Scalar>(qubit: usize, rng: &mut impl Rng) -> Gate<T> {
    match rng.gen_range(0..3) {
        0 => Gate::x(qubit),
        1 => Gate::y(qubit),
        _ => Gate::z(qubit),
    }
}

fn trajectory<T: Scalar>(circuit: &Circuit<T>, measured: &[usize], config: &NoiseConfig<T>, rng: &mut impl Rng) -> u64 {
    let (p1, p2, flip) = (
        config.p1.as_f64(),
        config.p2.as_f64(),
        config.readout_flip.as_f64(),
    );
    let mut state = StateVector::<T>::new(circuit.num_qubits()).expect("validated width");
    for gate in circuit.gates() {
        state.apply_gate(gate).expect("validated gate");
        let p = if gate.arity() == 1 { p1 } else { p2 };
        if p > 0.0 {
            for q in gate.qubits() {
                if rng.gen::<f64>() < p {
                    state.apply_gate(&random_pauli(q, rng)).expect("qubit in range");
                }
            }
        }
    }
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let amps = state.amplitudes();
    let mut index = amps.len() - 1;
    for (i, a) in amps.iter().enumerate() {
        acc += a.norm_sqr().as_f64();
        if u < acc {
            index = i;
            break;
        }
    }
    measured.iter().enumerate().fold(0u64, |bits, (j, &q)| {
        let mut bit = (index >> q & 1) as u64;
        if flip > 0.0 && rng.gen::<f64>() < flip {
            bit ^= 1;
        }
        bits | (bit << j)
    })
}
