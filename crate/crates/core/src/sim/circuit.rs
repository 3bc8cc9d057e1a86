use num_complex::Complex;

use super::gate::{DenseMatrix, Gate};
use super::state::StateVector;
use crate::error::{Error, Result};
use crate::Scalar;

/// Ordered gate list on a fixed-width register.
#[derive(Clone, Debug, PartialEq)]
pub struct Circuit<T> {
    num_qubits: usize,
    gates: Vec<Gate<T>>,
}

impl<T: Scalar> Circuit<T> {
    pub fn new(num_qubits: usize) -> Self {
        Self {
            num_qubits,
            gates: Vec::new(),
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn gates(&self) -> &[Gate<T>] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn push(&mut self, gate: Gate<T>) -> Result<&mut Self> {
        if let Some(q) = gate.qubits().find(|&q| q >= self.num_qubits) {
            return Err(Error::QubitIndex {
                qubit: q,
                num_qubits: self.num_qubits,
            });
        }
        self.gates.push(gate);
        Ok(self)
    }

    /// Append every gate of `other`, which may be narrower than `self`.
    pub fn append(&mut self, other: &Circuit<T>) -> Result<&mut Self> {
        if other.num_qubits > self.num_qubits {
            return Err(Error::QubitMismatch {
                circuit: other.num_qubits,
                state: self.num_qubits,
            });
        }
        self.gates.extend(other.gates.iter().cloned());
        Ok(self)
    }

    /// Copy of this circuit on a wider register; qubit indices are kept.
    pub fn widened(&self, num_qubits: usize) -> Result<Self> {
        let mut out = Self::new(num_qubits);
        out.append(self)?;
        Ok(out)
    }

    /// Every gate additionally conditioned on `control`.
    pub fn controlled_by(&self, control: usize, num_qubits: usize) -> Result<Self> {
        let mut out = Self::new(num_qubits);
        for g in &self.gates {
            out.push(g.clone().controlled(control)?)?;
        }
        Ok(out)
    }

    /// Reversed gate order with each gate replaced by its adjoint.
    pub fn inverse(&self) -> Self {
        Self {
            num_qubits: self.num_qubits,
            gates: self.gates.iter().rev().map(Gate::adjoint).collect(),
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        for g in &self.gates {
            if let Some(q) = g.qubits().find(|&q| q >= self.num_qubits) {
                return Err(Error::QubitIndex {
                    qubit: q,
                    num_qubits: self.num_qubits,
                });
            }
            g.check_unitary()?;
        }
        Ok(())
    }

    /// Full `2^q × 2^q` matrix, column `j` being the image of basis state `j`.
    /// Intended for small registers in tests and diagnostics.
    pub fn unitary(&self) -> Result<DenseMatrix<T>> {
        let dim = 1usize << self.num_qubits;
        let mut m = DenseMatrix::identity(dim);
        for col in 0..dim {
            let mut amps = vec![Complex::new(T::zero(), T::zero()); dim];
            amps[col] = Complex::new(T::one(), T::zero());
            let mut state = StateVector::from_amplitudes(amps)?;
            state.evolve(self)?;
            for (row, a) in state.amplitudes().iter().enumerate() {
                m.set(row, col, *a);
            }
        }
        Ok(m)
    }
}

/// Free-function form of [`Circuit::inverse`].
pub fn inverse_circuit<T: Scalar>(circuit: &Circuit<T>) -> Circuit<T> {
    circuit.inverse()
}
