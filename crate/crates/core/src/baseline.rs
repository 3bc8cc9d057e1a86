//! Classical Monte Carlo policy evaluation and sample-complexity accounting.

use rand::Rng;
use rayon::prelude::*;

use crate::bandit::{policy_value, BanditParams, PolicySpec};
use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::Scalar;

pub use crate::qpe::qsample_count as qpe_qsample_count;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McEstimate<T> {
    pub estimate: T,
    pub samples_used: u64,
    pub seed: u64,
}

/// Mean reward over `samples` simulated episodes: pick an arm from the
/// policy, then draw its Bernoulli reward.
pub fn monte_carlo_estimate<T: Scalar>(
    policy: &PolicySpec<T>,
    params: &BanditParams<T>,
    samples: u64,
    seed: u64,
) -> Result<McEstimate<T>> {
    if samples == 0 {
        return Err(Error::ZeroShots);
    }
    let p_left = policy.p_left().as_f64();
    let (left, right) = params.reward_probabilities();
    let (left, right) = (left.as_f64(), right.as_f64());
    let mut rng = stream_rng(seed, 0);
    let wins = (0..samples)
        .filter(|_| {
            let p = if rng.gen::<f64>() < p_left { left } else { right };
            rng.gen::<f64>() < p
        })
        .count();
    Ok(McEstimate {
        estimate: T::lit(wins as f64 / samples as f64),
        samples_used: samples,
        seed,
    })
}

/// Hoeffding sample size `⌈ln(2/δ) / (2ε²)⌉`, at least 1.
pub fn mc_samples_needed<T: Scalar>(epsilon: T, delta: T) -> Result<u64> {
    let (eps, delta) = (epsilon.as_f64(), delta.as_f64());
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::OutOfRange {
            name: "epsilon",
            value: eps,
            expected: "a positive finite tolerance".into(),
        });
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::OutOfRange {
            name: "delta",
            value: delta,
            expected: "(0, 1]".into(),
        });
    }
    let n = ((2.0 / delta).ln() / (2.0 * eps * eps)).ceil();
    Ok((n as u64).max(1))
}

/// Root-mean-square error of [`monte_carlo_estimate`] over `seeds` runs.
pub fn mc_rmse<T: Scalar>(policy: &PolicySpec<T>, params: &BanditParams<T>, samples: u64, seeds: u64, base_seed: u64) -> Result<T> {
    let truth = policy_value(policy, params).as_f64();
    let errors: Result<Vec<f64>> = (0..seeds)
        .into_par_iter()
        .map(|s| {
            let est = monte_carlo_estimate(policy, params, samples, base_seed.wrapping_add(s))?;
            Ok((est.estimate.as_f64() - truth).powi(2))
        })
        .collect();
    let errors = errors?;
    Ok(T::lit((errors.iter().sum::<f64>() / errors.len().max(1) as f64).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn arms() -> BanditParams<f64> {
        BanditParams::from_probabilities(0.7, 0.2).unwrap()
    }

    #[test]
    fn deterministic_environment() {
        let params = BanditParams::new(PI, 0.0).unwrap();
        let est = monte_carlo_estimate(&PolicySpec::new(1.0).unwrap(), &params, 1000, 3).unwrap();
        assert_eq!(est.estimate, 1.0);
    }

    #[test]
    fn concentrates_on_policy_value() {
        let est = monte_carlo_estimate(&PolicySpec::uniform(), &arms(), 100_000, 7).unwrap();
        assert!((est.estimate - 0.45).abs() <= 0.006);
    }

    #[test]
    fn single_sample_is_binary() {
        for seed in 0..20 {
            let e = monte_carlo_estimate(&PolicySpec::uniform(), &arms(), 1, seed).unwrap().estimate;
            assert!(e == 0.0 || e == 1.0);
        }
        assert!(monte_carlo_estimate(&PolicySpec::uniform(), &arms(), 0, 0).is_err());
    }

    #[test]
    fn hoeffding_sizes() {
        let delta = 1.0 - 8.0 / (PI * PI);
        assert_eq!(mc_samples_needed(0.05, delta).unwrap(), 472);
        let a = mc_samples_needed(0.02, 0.05).unwrap() as f64;
        let b = mc_samples_needed(0.01, 0.05).unwrap() as f64;
        assert!((b / a - 4.0).abs() < 0.01);
        assert!(mc_samples_needed(0.5, 1.0).unwrap() >= 1);
        assert!(mc_samples_needed(0.0, 0.1).is_err());
        assert!(mc_samples_needed(0.1, 0.0).is_err());
    }

    #[test]
    fn qsample_counts_double() {
        assert_eq!(qpe_qsample_count(3), 15);
        assert_eq!(qpe_qsample_count(1), 3);
        for n in 1..10 {
            let ratio = qpe_qsample_count(n + 1) as f64 / qpe_qsample_count(n) as f64;
            assert!(ratio > 1.8 && ratio <= 7.0 / 3.0);
        }
    }
}
