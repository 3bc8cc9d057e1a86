//! Policy and environment circuits for the two-armed bandit.
//!
//! Register layout: qubit [`ACTION`] holds the arm (`|0⟩` = left,
//! `|1⟩` = right) and qubit [`REWARD`] holds the reward bit.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{check_probability, Error, Result};
use crate::sim::{Circuit, Gate};
use crate::Scalar;

pub const ACTION: usize = 0;
pub const REWARD: usize = 1;
pub const SYSTEM_QUBITS: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArmSelector {
    Left,
    Right,
}

impl ArmSelector {
    pub const BOTH: [ArmSelector; 2] = [ArmSelector::Left, ArmSelector::Right];

    pub fn label(self) -> &'static str {
        match self {
            ArmSelector::Left => "left",
            ArmSelector::Right => "right",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for ArmSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Environment rotation angles. Angles are unbounded; only `sin²(θ/2)` matters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BanditParams<T> {
    pub theta_left: T,
    pub theta_right: T,
}

impl<T: Scalar> BanditParams<T> {
    pub fn new(theta_left: T, theta_right: T) -> Result<Self> {
        for (name, v) in [("theta_left", theta_left), ("theta_right", theta_right)] {
            if !v.is_finite() {
                return Err(Error::OutOfRange {
                    name,
                    value: v.as_f64(),
                    expected: "a finite angle".into(),
                });
            }
        }
        Ok(Self { theta_left, theta_right })
    }

    /// Angles realizing the given per-arm win probabilities.
    pub fn from_probabilities(p_left: T, p_right: T) -> Result<Self> {
        Self::new(angle_from_frequency(p_left)?, angle_from_frequency(p_right)?)
    }

    pub fn theta(&self, arm: ArmSelector) -> T {
        match arm {
            ArmSelector::Left => self.theta_left,
            ArmSelector::Right => self.theta_right,
        }
    }

    pub fn reward_probabilities(&self) -> (T, T) {
        (reward_probability(self.theta_left), reward_probability(self.theta_right))
    }
}

/// Probability of pulling the left arm, realized as `R_y(θ_Π)` on the action
/// qubit with `p_left = cos²(θ_Π/2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolicyRepr<T>", into = "PolicyRepr<T>")]
#[serde(bound(serialize = "T: Scalar + Serialize", deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct PolicySpec<T> {
    p_left: T,
}

#[derive(Serialize, Deserialize)]
struct PolicyRepr<T> {
    p_left: T,
}

impl<T: Scalar> TryFrom<PolicyRepr<T>> for PolicySpec<T> {
    type Error = Error;
    fn try_from(r: PolicyRepr<T>) -> Result<Self> {
        PolicySpec::new(r.p_left)
    }
}

impl<T: Scalar> From<PolicySpec<T>> for PolicyRepr<T> {
    fn from(p: PolicySpec<T>) -> Self {
        PolicyRepr { p_left: p.p_left }
    }
}

impl<T: Scalar> PolicySpec<T> {
    pub fn new(p_left: T) -> Result<Self> {
        check_probability("p_left", p_left)?;
        Ok(Self { p_left })
    }

    /// Always pulls the right arm.
    pub fn always_right() -> Self {
        Self { p_left: T::zero() }
    }

    pub fn uniform() -> Self {
        Self { p_left: T::lit(0.5) }
    }

    pub fn p_left(&self) -> T {
        self.p_left
    }

    /// `θ_Π ∈ [0, π]` with `cos²(θ_Π/2) = p_left`.
    pub fn theta(&self) -> T {
        T::lit(2.0) * self.p_left.sqrt().min(T::one()).acos()
    }
}

/// `2·arcsin(√f)`, the angle whose reward probability is `f`.
pub fn angle_from_frequency<T: Scalar>(f: T) -> Result<T> {
    check_probability("frequency", f)?;
    Ok(T::lit(2.0) * f.sqrt().min(T::one()).asin())
}

/// `sin²(θ/2)`.
pub fn reward_probability<T: Scalar>(theta: T) -> T {
    let s = (theta / T::lit(2.0)).sin();
    s * s
}

/// Expected reward of `policy` in the environment `params`.
pub fn policy_value<T: Scalar>(policy: &PolicySpec<T>, params: &BanditParams<T>) -> T {
    let (left, right) = params.reward_probabilities();
    policy.p_left * left + (T::one() - policy.p_left) * right
}

pub fn build_policy_circuit<T: Scalar>(policy: &PolicySpec<T>) -> Circuit<T> {
    let mut c = Circuit::new(SYSTEM_QUBITS);
    c.push(Gate::ry(ACTION, policy.theta())).expect("action qubit in range");
    c
}

/// `X · CR_y(θ←) · X · CR_y(θ→)`, with both rotations controlled on the
/// action qubit and targeting the reward qubit.
pub fn build_environment_circuit<T: Scalar>(params: &BanditParams<T>) -> Circuit<T> {
    let mut c = Circuit::new(SYSTEM_QUBITS);
    push_all(
        &mut c,
        [
            Gate::x(ACTION),
            cry(params.theta_left),
            Gate::x(ACTION),
            cry(params.theta_right),
        ],
    );
    c
}

/// Circuit for a fixed arm: left runs `X, CR_y(θ←), X` from `|00⟩`; right
/// prepares `|1⟩_A` and runs the full environment.
pub fn build_arm_circuit<T: Scalar>(arm: ArmSelector, params: &BanditParams<T>) -> Circuit<T> {
    let mut c = Circuit::new(SYSTEM_QUBITS);
    match arm {
        ArmSelector::Left => push_all(&mut c, [Gate::x(ACTION), cry(params.theta_left), Gate::x(ACTION)]),
        ArmSelector::Right => {
            c.push(Gate::x(ACTION)).expect("action qubit in range");
            c.append(&build_environment_circuit(params)).expect("same register");
        }
    }
    c
}

fn cry<T: Scalar>(theta: T) -> Gate<T> {
    Gate::cry(ACTION, REWARD, theta).expect("action and reward qubits differ")
}

fn push_all<T: Scalar>(c: &mut Circuit<T>, gates: impl IntoIterator<Item = Gate<T>>) {
    for g in gates {
        c.push(g).expect("system qubits in range");
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{apply_circuit, exact_distribution, new_state, StateVector};
    use num_complex::Complex;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn run(c: &Circuit<f64>) -> StateVector<f64> {
        apply_circuit(&new_state(2).unwrap(), c).unwrap()
    }

    fn reward_marginal(s: &StateVector<f64>) -> f64 {
        exact_distribution(s, &[REWARD]).unwrap().probability(1)
    }

    fn arms_70_20() -> BanditParams<f64> {
        BanditParams::from_probabilities(0.7, 0.2).unwrap()
    }

    #[test]
    fn angle_inversion_values() {
        assert!((angle_from_frequency(0.7f64).unwrap() - 1.9823).abs() < 1e-4);
        assert_eq!(angle_from_frequency(0.0).unwrap(), 0.0);
        assert!((angle_from_frequency(0.5).unwrap() - PI / 2.0).abs() < 1e-12);
        assert!(angle_from_frequency(1.2).is_err());
        assert!(angle_from_frequency(-0.1).is_err());
    }

    #[test]
    fn reward_probability_values() {
        assert_eq!(reward_probability(0.0), 0.0);
        assert!((reward_probability(PI) - 1.0).abs() < 1e-15);
        assert!((reward_probability(0.9273f64) - 0.2).abs() < 1e-4);
    }

    #[test]
    fn policy_circuit_extremes() {
        let keep = run(&build_policy_circuit(&PolicySpec::new(1.0).unwrap()));
        assert!((keep.probability(0) - 1.0).abs() < 1e-15);
        let half = run(&build_policy_circuit(&PolicySpec::uniform()));
        let d = exact_distribution(&half, &[ACTION]).unwrap();
        assert!((d.probability(0) - 0.5).abs() < 1e-12);
        let right = PolicySpec::<f64>::always_right();
        assert!((right.theta() - PI).abs() < 1e-12);
        let s = run(&build_policy_circuit(&right));
        assert!((exact_distribution(&s, &[ACTION]).unwrap().probability(1) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn environment_on_left_arm() {
        let params = arms_70_20();
        assert!((reward_marginal(&run(&build_environment_circuit(&params))) - 0.7).abs() < 1e-12);
    }

    #[test]
    fn environment_right_arm_with_zero_rotation() {
        let params = BanditParams::new(1.3, 0.0).unwrap();
        let mut c = Circuit::new(2);
        c.push(Gate::x(ACTION)).unwrap();
        c.append(&build_environment_circuit(&params)).unwrap();
        let s = run(&c);
        assert!((s.probability(0b01) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn environment_on_superposed_action() {
        let params = BanditParams::new(PI, 0.0).unwrap();
        let mut c = Circuit::new(2);
        c.push(Gate::h(ACTION)).unwrap();
        c.append(&build_environment_circuit(&params)).unwrap();
        assert!((reward_marginal(&run(&c)) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn left_arm_final_state_matches_closed_form() {
        let params = arms_70_20();
        let s = run(&build_arm_circuit(ArmSelector::Left, &params));
        let half = params.theta_left / 2.0;
        assert!((s.amplitudes()[0b00] - Complex::new(half.cos(), 0.0)).norm() < 1e-12);
        assert!((s.amplitudes()[0b10] - Complex::new(half.sin(), 0.0)).norm() < 1e-12);
        assert!((reward_marginal(&s) - 0.7).abs() < 1e-12);
    }

    #[test]
    fn right_arm_probability() {
        let params = BanditParams::new(1.0, 0.9273).unwrap();
        let s = run(&build_arm_circuit(ArmSelector::Right, &params));
        assert!((reward_marginal(&s) - (0.9273f64 / 2.0).sin().powi(2)).abs() < 1e-12);
        let zero = run(&build_arm_circuit(ArmSelector::Left, &BanditParams::new(0.0, 2.0).unwrap()));
        assert!((zero.probability(0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn named_policy_values() {
        let params = arms_70_20();
        assert!((policy_value(&PolicySpec::uniform(), &params) - 0.45).abs() < 1e-12);
        assert!((policy_value(&PolicySpec::always_right(), &params) - 0.2).abs() < 1e-12);
        let det = BanditParams::new(0.0, 1.0).unwrap();
        assert_eq!(policy_value(&PolicySpec::new(1.0).unwrap(), &det), 0.0);
    }

    #[test]
    fn policy_rejects_bad_probability() {
        assert!(PolicySpec::new(1.5).is_err());
        assert!(serde_json::from_str::<PolicySpec<f64>>(r#"{"p_left": -0.2}"#).is_err());
        let p: PolicySpec<f64> = serde_json::from_str(r#"{"p_left": 0.25}"#).unwrap();
        assert_eq!(p.p_left(), 0.25);
    }

    #[test]
    fn non_finite_angle_rejected() {
        assert!(BanditParams::new(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn round_trip_on_dense_grid() {
        for i in 0..=10_000 {
            let f = i as f64 / 10_000.0;
            let back = reward_probability(angle_from_frequency(f).unwrap());
            assert!((back - f).abs() < 1e-12, "f = {f}");
        }
    }

    proptest! {
        #[test]
        fn circuit_matches_closed_form(tl in -7.0f64..7.0, tr in -7.0f64..7.0, p in 0.0f64..=1.0) {
            let params = BanditParams::new(tl, tr).unwrap();
            let policy = PolicySpec::new(p).unwrap();
            let mut c = build_policy_circuit(&policy);
            c.append(&build_environment_circuit(&params)).unwrap();
            let s = run(&c);
            prop_assert!((reward_marginal(&s) - policy_value(&policy, &params)).abs() < 1e-10);
            // the X pair restores the action marginal
            let action = exact_distribution(&s, &[ACTION]).unwrap();
            prop_assert!((action.probability(0) - p).abs() < 1e-10);
        }

        #[test]
        fn arms_are_isolated(t in -7.0f64..7.0, a in -7.0f64..7.0, b in -7.0f64..7.0) {
            let left_a = run(&build_arm_circuit(ArmSelector::Left, &BanditParams::new(t, a).unwrap()));
            let left_b = run(&build_arm_circuit(ArmSelector::Left, &BanditParams::new(t, b).unwrap()));
            prop_assert!(left_a.max_abs_diff(&left_b) < 1e-12);
            let right_a = run(&build_arm_circuit(ArmSelector::Right, &BanditParams::new(a, t).unwrap()));
            let right_b = run(&build_arm_circuit(ArmSelector::Right, &BanditParams::new(b, t).unwrap()));
            prop_assert!(right_a.max_abs_diff(&right_b) < 1e-12);
        }
    }
}
