use std::f64::consts::PI;

use proptest::prelude::*;

use qbandit::backend::BackendKind;
use qbandit::bandit::policy_value;
use qbandit::baseline::{mc_rmse, monte_carlo_estimate};
use qbandit::qpe::{exact_value_distribution, run_qpe, value_grid};
use qbandit::sim::measure_all;
use qbandit::trainer::{evaluate_loss, optimize, Frequencies};
use qbandit::{Backend, BanditParams, Circuit, Gate, NoiseConfig, PolicySpec, QpeConfig, StateVector, TrainConfig, TransitionDataset};

fn gate(kind: u8, a: usize, offset: usize, theta: f64, n: usize) -> Gate {
    let b = (a + offset) % n;
    match kind % 8 {
        0 => Gate::x(a),
        1 => Gate::y(a),
        2 => Gate::z(a),
        3 => Gate::h(a),
        4 => Gate::ry(a, theta),
        5 => Gate::phase(a, theta),
        6 => Gate::swap(a, b).unwrap(),
        _ => Gate::cry(b, a, theta).unwrap(),
    }
}

fn circuit(max_qubits: usize, max_gates: usize) -> impl Strategy<Value = Circuit> {
    (2..=max_qubits).prop_flat_map(move |n| {
        prop::collection::vec((any::<u8>(), 0..n, 1..n, -PI..PI), 0..=max_gates).prop_map(move |specs| {
            let mut c = Circuit::new(n);
            for (kind, a, offset, theta) in specs {
                c.push(gate(kind, a, offset, theta, n)).unwrap();
            }
            c
        })
    })
}

fn exact_oracle() -> Backend {
    Backend::from_kind(BackendKind::ExactOracle, NoiseConfig::default())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn norm_is_preserved(c in circuit(8, 1000)) {
        let mut s = StateVector::new(c.num_qubits()).unwrap();
        s.evolve(&c).unwrap();
        prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn inverse_circuit_round_trips(prep in circuit(6, 40), extra in 0usize..200, seed in any::<u64>()) {
        let n = prep.num_qubits();
        let mut s = StateVector::new(n).unwrap();
        s.evolve(&prep).unwrap();
        // a second circuit on the same width, derived from the seed
        let mut c = Circuit::new(n);
        let mut x = seed;
        for _ in 0..extra {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let theta = (x >> 11) as f64 / (1u64 << 53) as f64 * 2.0 * PI - PI;
            c.push(gate((x >> 3) as u8, (x >> 20) as usize % n, 1 + (x >> 30) as usize % (n - 1), theta, n)).unwrap();
        }
        let mut back = s.clone();
        back.evolve(&c).unwrap();
        back.evolve(&c.inverse()).unwrap();
        prop_assert!(back.max_abs_diff(&s) < 1e-9);
    }

    #[test]
    fn gate_matrices_are_unitary(kind in any::<u8>(), a in 0usize..4, offset in 1usize..4, theta in -PI..PI) {
        prop_assert!(gate(kind, a, offset, theta, 4).matrix().unitarity_deviation() < 1e-12);
    }

    #[test]
    fn loss_is_even_and_periodic(tl in -7.0f64..7.0, tr in -7.0f64..7.0, fl in 0.0f64..=1.0, fr in 0.0f64..=1.0) {
        let target = Frequencies { left: fl, right: fr };
        let config = TrainConfig::default();
        let backend = exact_oracle();
        let loss = |l: f64, r: f64| {
            evaluate_loss(&BanditParams::new(l, r).unwrap(), &target, &config, &backend, 0).unwrap()
        };
        let base = loss(tl, tr);
        for (l, r) in [(-tl, tr), (tl, -tr), (tl + 2.0 * PI, tr), (tl, tr - 2.0 * PI)] {
            prop_assert!((loss(l, r) - base).abs() < 1e-12);
        }
    }
}

#[test]
fn counts_do_not_depend_on_thread_count() {
    let mut c = Circuit::new(5);
    for q in 0..5 {
        c.push(Gate::h(q)).unwrap();
        c.push(Gate::ry(q, 0.3 * q as f64)).unwrap();
    }
    let mut s = StateVector::new(5).unwrap();
    s.evolve(&c).unwrap();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| measure_all(&s, 50_000, 9).unwrap())
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn exact_oracle_training_converges_on_grid() {
    let levels = [0.0, 0.25, 0.5, 0.75, 1.0];
    let config = TrainConfig {
        rho_end: 1e-8,
        max_iterations: 1000,
        ..TrainConfig::default()
    };
    let mut misses = Vec::new();
    for &fl in &levels {
        for &fr in &levels {
            let data = TransitionDataset::with_exact_rates(fl, fr, 100, 0).unwrap();
            let result = optimize(&data, &config, &exact_oracle()).unwrap();
            if result.final_loss >= 1e-10 {
                misses.push(format!("({fl}, {fr}): {:.2e}", result.final_loss));
            }
        }
    }
    assert!(misses.is_empty(), "{} of 25 above 1e-10: {}", misses.len(), misses.join(", "));
}

#[test]
fn expected_error_shrinks_with_register_width() {
    let mut violations = Vec::new();
    for v in [0.1, 0.2, 0.45, 0.7, 0.9] {
        let params = BanditParams::from_probabilities(v, v).unwrap();
        let expected_error = |n: usize| -> f64 {
            let dist = exact_value_distribution(&PolicySpec::uniform(), &params, n).unwrap();
            value_grid::<f64>(n).iter().zip(&dist).map(|(g, q)| q * (g - v).abs()).sum()
        };
        let errors: Vec<f64> = (3..=6).map(expected_error).collect();
        if errors.windows(2).any(|w| w[1] > w[0] + 1e-12) {
            violations.push(format!("v = {v}: {errors:.4?}"));
        }
    }
    assert!(violations.is_empty(), "{}", violations.join("; "));
}

fn noisy_tv(n: usize) -> f64 {
    let policy = PolicySpec::uniform();
    let params = BanditParams::from_probabilities(0.7, 0.2).unwrap();
    let exact = exact_value_distribution(&policy, &params, n).unwrap();
    let backend = Backend::from_kind(BackendKind::Noisy, NoiseConfig::default());
    let total: f64 = (0..5)
        .map(|seed| {
            let hist = run_qpe(&policy, &params, &QpeConfig { n, shots: 300, seed }, &backend).unwrap();
            0.5 * hist.frequencies().iter().zip(&exact).map(|(f, e)| (f - e).abs()).sum::<f64>()
        })
        .sum();
    total / 5.0
}

#[test]
fn noise_damage_grows_with_circuit_depth() {
    let tv: Vec<f64> = (3..=5).map(noisy_tv).collect();
    assert!(tv[0] <= tv[1] && tv[1] <= tv[2], "{tv:?}");
}

#[test]
fn zero_rate_noise_converges_to_ideal() {
    let policy = PolicySpec::uniform();
    let params = BanditParams::from_probabilities(0.7, 0.2).unwrap();
    let exact: Vec<f64> = exact_value_distribution(&policy, &params, 3).unwrap();
    let backend = Backend::from_kind(BackendKind::Noisy, NoiseConfig::noiseless());
    let tv = |shots: u64| {
        let hist = run_qpe(&policy, &params, &QpeConfig { n: 3, shots, seed: 1 }, &backend).unwrap();
        0.5 * hist.frequencies().iter().zip(&exact).map(|(f, e)| (f - e).abs()).sum::<f64>()
    };
    let (coarse, fine) = (tv(200), tv(20_000));
    assert!(fine < coarse && fine < 0.02, "{coarse} -> {fine}");
}

#[test]
fn monte_carlo_is_unbiased() {
    let policy = PolicySpec::uniform();
    let params = BanditParams::from_probabilities(0.7, 0.2).unwrap();
    let v = policy_value(&policy, &params);
    let samples = 1000;
    let estimates: Vec<f64> = (0..100)
        .map(|seed| monte_carlo_estimate(&policy, &params, samples, seed).unwrap().estimate)
        .collect();
    let mean = estimates.iter().sum::<f64>() / 100.0;
    let std_err = (v * (1.0 - v) / (samples * 100) as f64).sqrt();
    assert!((mean - v).abs() < 3.0 * std_err, "mean {mean}, v {v}, se {std_err}");
}

#[test]
fn monte_carlo_rmse_scales_as_inverse_root() {
    let policy = PolicySpec::uniform();
    let params = BanditParams::from_probabilities(0.7, 0.2).unwrap();
    let scaled: Vec<f64> = [100u64, 1000, 10_000]
        .iter()
        .map(|&n| mc_rmse(&policy, &params, n, 200, 3).unwrap() * (n as f64).sqrt())
        .collect();
    let (lo, hi) = scaled.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    assert!(hi / lo <= 1.5, "{scaled:?}");
}
