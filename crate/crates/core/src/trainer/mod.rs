//! Learning the environment angles from classical pulls.
//!
//! Each loss evaluation runs both fixed-arm circuits for `shots` shots,
//! reads the reward qubit, and compares the measured win frequencies with
//! the dataset's by mean squared error. A derivative-free minimizer proposes
//! the next angles. Evaluation `k` of arm `a` samples with the seed derived
//! from `(config.seed, k, a)`, so every trace entry can be recomputed alone.

mod dataset;
pub mod optimizer;

use serde::{Deserialize, Serialize};

pub use dataset::{empirical_frequencies, load_dataset, Transition, TransitionDataset};
pub use optimizer::{Cobyla, Minimizer, Minimum, NelderMead, OptimizerKind, OptimizerState};

use crate::backend::Backend;
use crate::bandit::{build_arm_circuit, reward_probability, ArmSelector, BanditParams, REWARD};
use crate::error::{Error, Result};
use crate::rng::derive_seed;
use crate::Scalar;

/// Per-arm win frequencies.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frequencies<T> {
    pub left: T,
    pub right: T,
}

impl<T: Scalar> Frequencies<T> {
    pub fn get(&self, arm: ArmSelector) -> T {
        match arm {
            ArmSelector::Left => self.left,
            ArmSelector::Right => self.right,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig<T> {
    /// Shots per arm per loss evaluation.
    pub shots: u64,
    /// Loss-evaluation budget.
    pub max_iterations: usize,
    pub initial_theta: (T, T),
    pub rho_begin: T,
    pub rho_end: T,
    pub seed: u64,
    pub optimizer: OptimizerKind,
}

impl<T: Scalar> Default for TrainConfig<T> {
    fn default() -> Self {
        Self {
            shots: 8000,
            max_iterations: 100,
            initial_theta: (T::FRAC_PI_2(), T::FRAC_PI_2()),
            rho_begin: T::lit(0.5),
            rho_end: T::lit(1e-3),
            seed: 0,
            optimizer: OptimizerKind::Cobyla,
        }
    }
}

impl<T: Scalar> TrainConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.shots == 0 {
            return Err(Error::config("train.shots", "must be at least 1"));
        }
        if self.max_iterations == 0 {
            return Err(Error::ZeroBudget);
        }
        if !(self.rho_end > T::zero() && self.rho_begin > self.rho_end) {
            return Err(Error::config("train.rho_begin", "need rho_begin > rho_end > 0"));
        }
        if !(self.initial_theta.0.is_finite() && self.initial_theta.1.is_finite()) {
            return Err(Error::config("train.initial_theta", "angles must be finite"));
        }
        Ok(())
    }

    pub fn minimizer(&self) -> Box<dyn Minimizer<T>> {
        match self.optimizer {
            OptimizerKind::Cobyla => Box::new(Cobyla::new(self.rho_begin, self.rho_end)),
            OptimizerKind::NelderMead => Box::new(NelderMead {
                initial_step: self.rho_begin,
                tolerance: self.rho_end,
            }),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry<T> {
    pub iteration: usize,
    pub theta_left: T,
    pub theta_right: T,
    pub loss: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainingResult<T> {
    pub trace: Vec<TraceEntry<T>>,
    pub final_params: BanditParams<T>,
    pub final_loss: T,
    pub target: Frequencies<T>,
}

impl<T: Scalar> TrainingResult<T> {
    pub fn iterations(&self) -> usize {
        self.trace.len()
    }

    /// Reward probabilities implied by the final angles; these are the
    /// sign- and period-free quantities to compare against the data.
    pub fn final_probabilities(&self) -> Frequencies<T> {
        Frequencies {
            left: reward_probability(self.final_params.theta_left),
            right: reward_probability(self.final_params.theta_right),
        }
    }
}

/// `((Δ←)² + (Δ→)²) / 2`.
pub fn mse_loss<T: Scalar>(meas: &Frequencies<T>, data: &Frequencies<T>) -> T {
    let dl = meas.left - data.left;
    let dr = meas.right - data.right;
    (dl * dl + dr * dr) / T::lit(2.0)
}

/// Win frequency of each arm circuit; arm `a` samples under
/// `derive_seed(seed, a)`.
pub fn measured_frequencies<T: Scalar>(
    params: &BanditParams<T>,
    shots: u64,
    backend: &Backend<T>,
    seed: u64,
) -> Result<Frequencies<T>> {
    let run = |arm: ArmSelector| -> Result<T> {
        let circuit = build_arm_circuit(arm, params);
        let out = backend.execute(&circuit, &[REWARD], shots, derive_seed(seed, arm.index() as u64))?;
        Ok(out.frequency(1))
    };
    let (left, right) = rayon::join(|| run(ArmSelector::Left), || run(ArmSelector::Right));
    Ok(Frequencies {
        left: left?,
        right: right?,
    })
}

/// Seed of loss evaluation `iteration` under `config_seed`.
pub fn evaluation_seed(config_seed: u64, iteration: usize) -> u64 {
    derive_seed(config_seed, iteration as u64)
}

/// Loss of evaluation number `iteration` at `params`.
pub fn evaluate_loss<T: Scalar>(
    params: &BanditParams<T>,
    target: &Frequencies<T>,
    config: &TrainConfig<T>,
    backend: &Backend<T>,
    iteration: usize,
) -> Result<T> {
    let meas = measured_frequencies(params, config.shots, backend, evaluation_seed(config.seed, iteration))?;
    Ok(mse_loss(&meas, target))
}

/// Fit `(θ←, θ→)` to `data` with the configured minimizer.
pub fn optimize<T: Scalar>(data: &TransitionDataset, config: &TrainConfig<T>, backend: &Backend<T>) -> Result<TrainingResult<T>> {
    let minimizer = config.minimizer();
    optimize_with(data, config, backend, minimizer.as_ref())
}

pub fn optimize_with<T: Scalar>(
    data: &TransitionDataset,
    config: &TrainConfig<T>,
    backend: &Backend<T>,
    minimizer: &dyn Minimizer<T>,
) -> Result<TrainingResult<T>> {
    config.validate()?;
    if let Backend::Noisy(noise) = backend {
        noise.validate()?;
    }
    let target = empirical_frequencies::<T>(data)?;
    let mut trace = Vec::with_capacity(config.max_iterations);
    let mut failure = None;
    let mut objective = |theta: &[T]| -> T {
        if failure.is_some() {
            return T::infinity();
        }
        let params = BanditParams {
            theta_left: theta[0],
            theta_right: theta[1],
        };
        match evaluate_loss(&params, &target, config, backend, trace.len()) {
            Ok(loss) => {
                trace.push(TraceEntry {
                    iteration: trace.len(),
                    theta_left: theta[0],
                    theta_right: theta[1],
                    loss,
                });
                loss
            }
            Err(e) => {
                failure = Some(e);
                T::infinity()
            }
        }
    };
    let start = [config.initial_theta.0, config.initial_theta.1];
    let best = minimizer.minimize(&mut objective, &start, config.max_iterations)?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(TrainingResult {
        trace,
        final_params: BanditParams {
            theta_left: best.x[0],
            theta_right: best.x[1],
        },
        final_loss: best.value,
        target,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bandit::angle_from_frequency;
    use std::f64::consts::PI;

    #[test]
    fn mse_values() {
        let data = Frequencies { left: 0.7f64, right: 0.2 };
        assert_eq!(mse_loss(&data, &data), 0.0);
        let ones = Frequencies { left: 1.0, right: 1.0 };
        let zeros = Frequencies { left: 0.0, right: 0.0 };
        assert_eq!(mse_loss(&ones, &zeros), 1.0);
        let meas = Frequencies { left: 0.72, right: 0.19 };
        assert!((mse_loss(&meas, &data) - 2.5e-4).abs() < 1e-15);
    }

    #[test]
    fn measured_frequencies_at_extremes() {
        for shots in [1, 17, 8000] {
            let zero = measured_frequencies(&BanditParams::new(0.0, 0.0).unwrap(), shots, &Backend::Ideal, 3).unwrap();
            assert_eq!((zero.left, zero.right), (0.0, 0.0));
            let full = measured_frequencies(&BanditParams::new(PI, PI).unwrap(), shots, &Backend::Ideal, 3).unwrap();
            assert_eq!((full.left, full.right), (1.0, 1.0));
        }
    }

    #[test]
    fn measured_frequencies_near_truth() {
        let params = BanditParams::new(1.9823f64, 0.9273).unwrap();
        let f = measured_frequencies(&params, 8000, &Backend::Ideal, 12).unwrap();
        assert!((f.left - 0.7).abs() <= 0.02);
        assert!((f.right - 0.2).abs() <= 0.02);
    }

    #[test]
    fn optimum_is_a_fixed_point_of_the_exact_oracle() {
        let data = TransitionDataset::with_exact_rates(0.7, 0.2, 10, 0).unwrap();
        let config = TrainConfig {
            initial_theta: (angle_from_frequency(0.7).unwrap(), angle_from_frequency(0.2).unwrap()),
            max_iterations: 20,
            ..TrainConfig::default()
        };
        let r = optimize(&data, &config, &Backend::Exact).unwrap();
        assert!(r.trace[0].loss <= 1e-12);
        assert!(r.final_loss <= 1e-12);
    }

    #[test]
    fn zero_budget_rejected() {
        let data = TransitionDataset::with_exact_rates(0.7, 0.2, 10, 0).unwrap();
        let config = TrainConfig::<f64> {
            max_iterations: 0,
            ..TrainConfig::default()
        };
        assert!(matches!(optimize(&data, &config, &Backend::Ideal), Err(Error::ZeroBudget)));
    }

    #[test]
    fn degenerate_radius_rejected() {
        let data = TransitionDataset::with_exact_rates(0.7, 0.2, 10, 0).unwrap();
        let config = TrainConfig::<f64> {
            rho_begin: 1e-4,
            ..TrainConfig::default()
        };
        assert!(optimize(&data, &config, &Backend::Ideal).is_err());
    }

    #[test]
    fn trace_is_reproducible_and_bounded() {
        let data = TransitionDataset::with_exact_rates(0.7, 0.2, 100, 0).unwrap();
        let config = TrainConfig {
            shots: 500,
            max_iterations: 30,
            seed: 8,
            ..TrainConfig::default()
        };
        let r = optimize(&data, &config, &Backend::Ideal).unwrap();
        assert!(r.trace.len() <= 30);
        for entry in r.trace.iter().step_by(7) {
            let params = BanditParams::new(entry.theta_left, entry.theta_right).unwrap();
            let again = evaluate_loss(&params, &r.target, &config, &Backend::Ideal, entry.iteration).unwrap();
            assert_eq!(again, entry.loss);
        }
        let best = r.trace.iter().map(|e| e.loss).fold(f64::INFINITY, f64::min);
        assert_eq!(best, r.final_loss);
        let rerun = optimize(&data, &config, &Backend::Ideal).unwrap();
        assert_eq!(rerun.trace, r.trace);
    }

    #[test]
    fn nelder_mead_alternative_converges_on_oracle() {
        let data = TransitionDataset::with_exact_rates(0.7, 0.2, 10, 0).unwrap();
        let config = TrainConfig {
            optimizer: OptimizerKind::NelderMead,
            max_iterations: 300,
            rho_end: 1e-7,
            ..TrainConfig::default()
        };
        let r = optimize(&data, &config, &Backend::Exact).unwrap();
        assert!(r.final_loss < 1e-10, "{}", r.final_loss);
    }
}
