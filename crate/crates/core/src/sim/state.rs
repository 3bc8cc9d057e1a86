use num_complex::Complex;

use super::circuit::Circuit;
use super::gate::Gate;
use crate::error::{Error, Result};
use crate::Scalar;

/// Largest supported register width.
pub const MAX_QUBITS: usize = 24;

pub type Amplitude<T> = Complex<T>;

/// Dense amplitude vector over `2^num_qubits` basis states.
///
/// Qubit `k` is bit `k` of the basis index (qubit 0 is least significant),
/// so for two qubits the index of `|q1 q0⟩` is `2·q1 + q0`.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector<T> {
    num_qubits: usize,
    amps: Vec<Amplitude<T>>,
}

impl<T: Scalar> StateVector<T> {
    /// `|0…0⟩` on `num_qubits` qubits.
    pub fn new(num_qubits: usize) -> Result<Self> {
        if num_qubits == 0 || num_qubits > MAX_QUBITS {
            return Err(Error::QubitCount {
                requested: num_qubits,
                max: MAX_QUBITS,
            });
        }
        let mut amps = vec![Complex::new(T::zero(), T::zero()); 1 << num_qubits];
        amps[0] = Complex::new(T::one(), T::zero());
        Ok(Self { num_qubits, amps })
    }

    /// Wrap explicit amplitudes; the length must be a power of two and the
    /// vector normalized.
    pub fn from_amplitudes(amps: Vec<Amplitude<T>>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() || len.trailing_zeros() as usize > MAX_QUBITS {
            return Err(Error::QubitCount {
                requested: len.max(1).trailing_zeros() as usize,
                max: MAX_QUBITS,
            });
        }
        let state = Self {
            num_qubits: len.trailing_zeros() as usize,
            amps,
        };
        let deviation = (state.norm_sqr() - T::one()).abs();
        if deviation > T::tolerance() {
            return Err(Error::OutOfRange {
                name: "norm",
                value: state.norm_sqr().as_f64(),
                expected: "1".into(),
            });
        }
        Ok(state)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Amplitude<T>] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> T {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probability(&self, index: usize) -> T {
        self.amps[index].norm_sqr()
    }

    /// Apply one gate in place.
    pub fn apply_gate(&mut self, gate: &Gate<T>) -> Result<()> {
        if let Some(q) = gate.qubits().find(|&q| q >= self.num_qubits) {
            return Err(Error::QubitIndex {
                qubit: q,
                num_qubits: self.num_qubits,
            });
        }
        gate.apply(&mut self.amps);
        Ok(())
    }

    /// Apply a whole circuit in place.
    pub fn evolve(&mut self, circuit: &Circuit<T>) -> Result<()> {
        if circuit.num_qubits() != self.num_qubits {
            return Err(Error::QubitMismatch {
                circuit: circuit.num_qubits(),
                state: self.num_qubits,
            });
        }
        circuit.validate()?;
        for g in circuit.gates() {
            g.apply(&mut self.amps);
        }
        Ok(())
    }

    /// Largest per-amplitude distance to `other`.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (*a - *b).norm())
            .fold(T::zero(), T::max)
    }
}

/// `|0…0⟩` on `num_qubits` qubits.
pub fn new_state<T: Scalar>(num_qubits: usize) -> Result<StateVector<T>> {
    StateVector::new(num_qubits)
}

/// `U_circuit · state`, leaving the input untouched.
pub fn apply_circuit<T: Scalar>(state: &StateVector<T>, circuit: &Circuit<T>) -> Result<StateVector<T>> {
    let mut out = state.clone();
    out.evolve(circuit)?;
    Ok(out)
}
