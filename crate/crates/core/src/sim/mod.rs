//! Exact dense state-vector simulation.
//!
//! Qubit 0 is the least-significant bit of every basis index, measurement
//! outcome and bitstring (bitstrings print the highest qubit first). Gates are
//! applied in place by strided iteration over the amplitude vector.

mod circuit;
mod gate;
mod measure;
mod state;

pub use circuit::{inverse_circuit, Circuit};
pub use gate::{DenseMatrix, Gate, GateKind, MAX_DENSE_TARGETS};
pub use measure::{exact_distribution, measure_all, measure_qubits, Distribution, MeasurementCounts};
pub(crate) use measure::merge_counts;
pub use state::{apply_circuit, new_state, Amplitude, StateVector, MAX_QUBITS};
