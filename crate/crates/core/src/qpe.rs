//! Quantum policy evaluation by phase estimation of a Grover operator.
//!
//! With `A` the policy-then-environment circuit and `a = sin²(θ_a)` the
//! probability that `A|00⟩` has the reward bit set, the Grover operator
//! `Q = −A·S₀·A†·S_χ` rotates by `2θ_a` in the plane spanned by the good and
//! bad components of `A|00⟩`. Phase estimation on an `n`-qubit evaluation
//! register returns `y` with `πy/2ⁿ ≈ θ_a`, and the value estimate is
//! `ṽ = sin²(πy/2ⁿ)`.
//!
//! Register layout of the full circuit: system qubits 0 (action) and 1
//! (reward), evaluation qubit `k` at index `2 + k`.

use std::io::Write;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::backend::{Backend, Outcomes};
use crate::bandit::{build_environment_circuit, build_policy_circuit, BanditParams, PolicySpec, ACTION, REWARD, SYSTEM_QUBITS};
use crate::error::{Error, Result};
use crate::sim::{exact_distribution, Circuit, DenseMatrix, Gate, StateVector};
use crate::Scalar;

pub const MAX_EVALUATION_QUBITS: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QpeConfig {
    /// Evaluation-register width.
    pub n: usize,
    pub shots: u64,
    pub seed: u64,
}

impl Default for QpeConfig {
    fn default() -> Self {
        Self { n: 3, shots: 300, seed: 0 }
    }
}

impl QpeConfig {
    pub fn validate(&self) -> Result<()> {
        check_n(self.n)?;
        if self.shots == 0 {
            return Err(Error::ZeroShots);
        }
        Ok(())
    }
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 || n > MAX_EVALUATION_QUBITS {
        return Err(Error::OutOfRange {
            name: "n",
            value: n as f64,
            expected: format!("1..={MAX_EVALUATION_QUBITS}"),
        });
    }
    Ok(())
}

/// `A`: the policy rotation followed by the environment.
pub fn build_state_prep<T: Scalar>(policy: &PolicySpec<T>, params: &BanditParams<T>) -> Circuit<T> {
    let mut a = build_policy_circuit(policy);
    a.append(&build_environment_circuit(params)).expect("same register");
    a
}

/// `Q = −A·S₀·A†·S_χ` on the two system qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct GroverOperator<T> {
    state_prep: Circuit<T>,
    /// `S_χ, A†, S₀, A` in application order; the global `−1` is not a gate.
    body: Circuit<T>,
}

pub fn build_grover_operator<T: Scalar>(state_prep: &Circuit<T>) -> Result<GroverOperator<T>> {
    if state_prep.num_qubits() != SYSTEM_QUBITS {
        return Err(Error::QubitMismatch {
            circuit: state_prep.num_qubits(),
            state: SYSTEM_QUBITS,
        });
    }
    let mut body = Circuit::new(SYSTEM_QUBITS);
    // S_χ: flip the sign of reward = 1
    body.push(Gate::z(REWARD))?;
    body.append(&state_prep.inverse())?;
    // S₀: flip the sign of |00⟩
    body.push(Gate::x(ACTION))?.push(Gate::x(REWARD))?;
    body.push(Gate::z(REWARD).controlled(ACTION)?)?;
    body.push(Gate::x(ACTION))?.push(Gate::x(REWARD))?;
    body.append(state_prep)?;
    Ok(GroverOperator {
        state_prep: state_prep.clone(),
        body,
    })
}

impl<T: Scalar> GroverOperator<T> {
    pub fn state_prep(&self) -> &Circuit<T> {
        &self.state_prep
    }

    /// Gate list of one application, without the global `−1`.
    pub fn gates(&self) -> &Circuit<T> {
        &self.body
    }

    /// Probability that `A|00⟩` has the reward bit set.
    pub fn good_probability(&self) -> Result<T> {
        let mut s = StateVector::new(SYSTEM_QUBITS)?;
        s.evolve(&self.state_prep)?;
        Ok(exact_distribution(&s, &[REWARD])?.probability(1))
    }

    /// Dense 4×4 matrix of `Q`, global sign included.
    pub fn matrix(&self) -> Result<DenseMatrix<T>> {
        Ok(self.body.unitary()?.scale(Complex::new(-T::one(), T::zero())))
    }

    /// One application of `Q` conditioned on `control`, on a `width`-qubit
    /// register. The global `−1` becomes `Phase(π)` on the control.
    pub fn controlled(&self, control: usize, width: usize) -> Result<Circuit<T>> {
        let mut c = self.body.controlled_by(control, width)?;
        c.push(Gate::phase(control, T::PI()))?;
        Ok(c)
    }
}

/// A phase-estimation circuit and its bookkeeping.
#[derive(Clone, Debug, PartialEq)]
pub struct QpeCircuit<T> {
    pub circuit: Circuit<T>,
    pub n: usize,
    /// Evaluation qubits, least significant first.
    pub evaluation_qubits: Vec<usize>,
    /// Applications of the environment circuit: `2·(2ⁿ − 1) + 1`.
    pub qsamples: u64,
}

/// Gate-level phase estimation: each controlled `Q^(2^k)` is `2^k` repeated
/// controlled applications of `Q`.
pub fn build_qpe_circuit<T: Scalar>(q: &GroverOperator<T>, n: usize) -> Result<QpeCircuit<T>> {
    build(q, n, |circuit, control, reps| {
        let once = q.controlled(control, circuit.num_qubits())?;
        for _ in 0..reps {
            circuit.append(&once)?;
        }
        Ok(())
    })
}

/// Same circuit with each controlled power collapsed into one dense
/// controlled gate. Only for noiseless execution.
pub fn build_qpe_circuit_dense<T: Scalar>(q: &GroverOperator<T>, n: usize) -> Result<QpeCircuit<T>> {
    let mut power = q.matrix()?;
    let mut powers = Vec::with_capacity(n);
    for _ in 0..n {
        powers.push(power.clone());
        power = power.matmul(&power);
    }
    build(q, n, |circuit, control, reps| {
        let k = reps.trailing_zeros() as usize;
        let gate = Gate::dense(vec![ACTION, REWARD], powers[k].clone())?.controlled(control)?;
        circuit.push(gate)?;
        Ok(())
    })
}

fn build<T: Scalar>(
    q: &GroverOperator<T>,
    n: usize,
    mut controlled_power: impl FnMut(&mut Circuit<T>, usize, usize) -> Result<()>,
) -> Result<QpeCircuit<T>> {
    check_n(n)?;
    let width = SYSTEM_QUBITS + n;
    let eval: Vec<usize> = (SYSTEM_QUBITS..width).collect();
    let mut circuit = q.state_prep.widened(width)?;
    for &e in &eval {
        circuit.push(Gate::h(e))?;
    }
    for (k, &e) in eval.iter().enumerate() {
        controlled_power(&mut circuit, e, 1 << k)?;
    }
    circuit.append(&qft(&eval, width)?.inverse())?;
    Ok(QpeCircuit {
        circuit,
        n,
        evaluation_qubits: eval,
        qsamples: qsample_count(n),
    })
}

/// Quantum Fourier transform on `qubits` (least significant first):
/// Hadamard and controlled-phase ladder from the top qubit down, then a
/// bit-reversal by swaps.
pub fn qft<T: Scalar>(qubits: &[usize], width: usize) -> Result<Circuit<T>> {
    let mut c = Circuit::new(width);
    for j in (0..qubits.len()).rev() {
        c.push(Gate::h(qubits[j]))?;
        for m in (0..j).rev() {
            let angle = T::PI() / T::lit((1u64 << (j - m)) as f64);
            c.push(Gate::phase(qubits[j], angle).controlled(qubits[m])?)?;
        }
    }
    for i in 0..qubits.len() / 2 {
        c.push(Gate::swap(qubits[i], qubits[qubits.len() - 1 - i])?)?;
    }
    Ok(c)
}

/// Environment-circuit applications in one run: each `Q` holds one `A` and
/// one `A†`, plus the initial `A`.
pub fn qsample_count(n: usize) -> u64 {
    2 * ((1u64 << n) - 1) + 1
}

/// `sin²(π·y / 2ⁿ)`.
pub fn outcome_to_value<T: Scalar>(y: u64, n: usize) -> Result<T> {
    if n == 0 || n >= 64 {
        return Err(Error::OutOfRange {
            name: "n",
            value: n as f64,
            expected: "1..64".into(),
        });
    }
    if y >= 1u64 << n {
        return Err(Error::OutOfRange {
            name: "y",
            value: y as f64,
            expected: format!("0..{}", 1u64 << n),
        });
    }
    Ok(grid_value(y, n))
}

fn grid_value<T: Scalar>(y: u64, n: usize) -> T {
    let s = (T::PI() * T::lit(y as f64) / T::lit((1u64 << n) as f64)).sin();
    s * s
}

/// `min(y, 2ⁿ − y)`: outcomes mapping to the same estimate share a key.
pub fn fold_outcome(y: u64, n: usize) -> u64 {
    y.min((1u64 << n) - y)
}

/// Sorted distinct estimates reachable with `n` evaluation qubits; there are
/// `2^(n−1) + 1` of them.
pub fn value_grid<T: Scalar>(n: usize) -> Vec<T> {
    assert!((1..64).contains(&n), "n must be in 1..64");
    (0..=(1u64 << (n - 1))).map(|y| grid_value(y, n)).collect()
}

/// `2π·√(a(1−a))/2ⁿ + π²/4ⁿ`.
pub fn error_bound<T: Scalar>(n: usize, a: T) -> T {
    let scale = T::lit((1u64 << n) as f64);
    T::lit(2.0) * T::PI() * (a * (T::one() - a)).max(T::zero()).sqrt() / scale + T::PI() * T::PI() / (scale * scale)
}

/// Confidence with which `|ṽ − v| ≤ error_bound(n, v)`.
pub fn confidence<T: Scalar>() -> T {
    T::lit(8.0) / (T::PI() * T::PI())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HistogramBin<T> {
    /// Folded outcome, `0 ..= 2^(n−1)`.
    pub y: u64,
    pub value: T,
    pub count: u64,
    pub exact_prob: Option<T>,
}

/// Estimates observed in one run, one bin per grid value.
#[derive(Clone, Debug, PartialEq)]
pub struct ValueHistogram<T> {
    pub n: usize,
    pub total_shots: u64,
    pub bins: Vec<HistogramBin<T>>,
    pub qsamples: u64,
}

impl<T: Scalar> ValueHistogram<T> {
    fn empty(n: usize, total_shots: u64) -> Self {
        Self {
            n,
            total_shots,
            bins: (0..=(1u64 << (n - 1)))
                .map(|y| HistogramBin {
                    y,
                    value: grid_value(y, n),
                    count: 0,
                    exact_prob: None,
                })
                .collect(),
            qsamples: qsample_count(n),
        }
    }

    pub fn counts(&self) -> impl Iterator<Item = (T, u64)> + '_ {
        self.bins.iter().map(|b| (b.value, b.count))
    }

    /// Grid value with the most shots (smallest value on ties).
    pub fn mode(&self) -> T {
        self.bins
            .iter()
            .fold(&self.bins[0], |m, b| if b.count > m.count { b } else { m })
            .value
    }

    pub fn exact_probabilities(&self) -> Option<Vec<T>> {
        self.bins.iter().map(|b| b.exact_prob).collect()
    }

    /// Empirical frequency per bin.
    pub fn frequencies(&self) -> Vec<T> {
        self.bins
            .iter()
            .map(|b| T::lit(b.count as f64 / self.total_shots as f64))
            .collect()
    }

    /// Write `y,v_tilde,count,exact_prob`; `exact_prob` is empty when unknown.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["y", "v_tilde", "count", "exact_prob"])?;
        for b in &self.bins {
            w.write_record([
                b.y.to_string(),
                b.value.to_string(),
                b.count.to_string(),
                b.exact_prob.map(|p| p.to_string()).unwrap_or_default(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// Exact probability of each folded outcome, noiseless.
pub fn exact_value_distribution<T: Scalar>(policy: &PolicySpec<T>, params: &BanditParams<T>, n: usize) -> Result<Vec<T>> {
    let q = build_grover_operator(&build_state_prep(policy, params))?;
    let qpe = build_qpe_circuit_dense(&q, n)?;
    let mut state = StateVector::new(qpe.circuit.num_qubits())?;
    state.evolve(&qpe.circuit)?;
    let dist = exact_distribution(&state, &qpe.evaluation_qubits)?;
    Ok(fold_probabilities(dist.probabilities(), n))
}

fn fold_probabilities<T: Scalar>(probs: &[T], n: usize) -> Vec<T> {
    let mut folded = vec![T::zero(); (1 << (n - 1)) + 1];
    for (y, p) in probs.iter().enumerate() {
        let f = fold_outcome(y as u64, n) as usize;
        folded[f] = folded[f] + *p;
    }
    folded
}

/// Estimate `policy`'s value with `config.shots` phase-estimation shots.
///
/// The ideal backend samples the exact evaluation-register distribution and
/// records it; the exact oracle apportions `shots` by that distribution; the
/// noisy backend runs gate-level trajectories.
pub fn run_qpe<T: Scalar>(
    policy: &PolicySpec<T>,
    params: &BanditParams<T>,
    config: &QpeConfig,
    backend: &Backend<T>,
) -> Result<ValueHistogram<T>> {
    config.validate()?;
    let n = config.n;
    let q = build_grover_operator(&build_state_prep(policy, params))?;
    let qpe = match backend {
        Backend::Noisy(_) => build_qpe_circuit(&q, n)?,
        Backend::Ideal | Backend::Exact => build_qpe_circuit_dense(&q, n)?,
    };
    let mut hist = ValueHistogram::empty(n, config.shots);
    match backend.execute(&qpe.circuit, &qpe.evaluation_qubits, config.shots, config.seed)? {
        Outcomes::Counts(counts) => {
            for (y, c) in counts.iter() {
                hist.bins[fold_outcome(y, n) as usize].count += c;
            }
        }
        Outcomes::Exact(_) => {}
    }
    if !matches!(backend, Backend::Noisy(_)) {
        let mut state = StateVector::new(qpe.circuit.num_qubits())?;
        state.evolve(&qpe.circuit)?;
        let exact = fold_probabilities(exact_distribution(&state, &qpe.evaluation_qubits)?.probabilities(), n);
        if matches!(backend, Backend::Exact) {
            for (bin, c) in hist.bins.iter_mut().zip(apportion(&exact, config.shots)) {
                bin.count = c;
            }
        }
        for (bin, p) in hist.bins.iter_mut().zip(exact) {
            bin.exact_prob = Some(p);
        }
    }
    Ok(hist)
}

/// Integer counts summing to `total` closest to `p·total` (largest remainder).
fn apportion<T: Scalar>(probs: &[T], total: u64) -> Vec<u64> {
    let scaled: Vec<f64> = probs.iter().map(|p| p.as_f64().max(0.0) * total as f64).collect();
    let mut counts: Vec<u64> = scaled.iter().map(|s| s.floor() as u64).collect();
    let assigned: u64 = counts.iter().sum();
    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = scaled[a] - scaled[a].floor();
        let rb = scaled[b] - scaled[b].floor();
        rb.partial_cmp(&ra).expect("finite").then(a.cmp(&b))
    });
    for &i in order.iter().cycle().take(total.saturating_sub(assigned) as usize) {
        counts[i] += 1;
    }
    counts
}
