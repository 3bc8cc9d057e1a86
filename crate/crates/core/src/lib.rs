//! Gate-level simulation and learning for a quantum two-armed bandit.
//!
//! The crate learns environment rotation angles from classical pulls with a
//! shot-based derivative-free optimizer, evaluates policies by phase
//! estimation of a Grover operator, and compares the cost against classical
//! Monte Carlo. All numerics are generic over [`Scalar`]; the aliases below
//! fix the scalar to `f64`.

pub mod backend;
pub mod bandit;
pub mod baseline;
pub mod error;
pub mod experiment;
pub mod noise;
pub mod qpe;
pub mod rng;
pub mod scalar;
pub mod sim;
pub mod trainer;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use bandit::ArmSelector;
pub use backend::BackendKind;
pub use trainer::TransitionDataset;

pub type Backend = backend::Backend<f64>;

pub type StateVector = sim::StateVector<f64>;
pub type Circuit = sim::Circuit<f64>;
pub type Gate = sim::Gate<f64>;
pub type BanditParams = bandit::BanditParams<f64>;
pub type PolicySpec = bandit::PolicySpec<f64>;
pub type Frequencies = trainer::Frequencies<f64>;
pub type TrainConfig = trainer::TrainConfig<f64>;
pub type TrainingResult = trainer::TrainingResult<f64>;
pub type NoiseConfig = noise::NoiseConfig<f64>;
pub type QpeConfig = qpe::QpeConfig;
pub type GroverOperator = qpe::GroverOperator<f64>;
pub type ValueHistogram = qpe::ValueHistogram<f64>;
pub type McEstimate = baseline::McEstimate<f64>;

pub type StateVectorF32 = sim::StateVector<f32>;
pub type CircuitF32 = sim::Circuit<f32>;
