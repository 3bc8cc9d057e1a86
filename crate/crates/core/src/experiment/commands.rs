use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::plot::{BarGrid, BarPanel, LineChart, Series};
use super::{num, Artifacts, EnvSource, ExperimentConfig, ReportBundle, RunRecord, TrainSummary, TRAIN_RESULT};
use crate::backend::{Backend, BackendKind};
use crate::bandit::{angle_from_frequency, policy_value, BanditParams, PolicySpec};
use crate::baseline::{mc_rmse, mc_samples_needed, monte_carlo_estimate, qpe_qsample_count};
use crate::error::{check_probability, Error, Result};
use crate::qpe::{confidence, error_bound, run_qpe, QpeConfig, ValueHistogram, MAX_EVALUATION_QUBITS};
use crate::rng::derive_seed;
use crate::trainer::{empirical_frequencies, load_dataset, optimize, TrainingResult, TransitionDataset};

fn join(prefix: &str, name: &str) -> String {
    if prefix.is_empty() {
        name.to_string()
    } else {
        format!("{prefix}/{name}")
    }
}

/// `pi50` for `p_left = 0.5`; non-integral percentages keep the raw value.
pub fn policy_label(p_left: f64) -> String {
    let pct = p_left * 100.0;
    if (pct - pct.round()).abs() < 1e-9 {
        format!("pi{}", pct.round() as i64)
    } else {
        format!("p{p_left}")
    }
}

/// Fits the angles to `data` and writes the trace, result and plots under `prefix`.
fn train_into(
    artifacts: &Artifacts,
    prefix: &str,
    config: &ExperimentConfig,
    data: &TransitionDataset,
) -> Result<(RunRecord, TrainingResult<f64>)> {
    let result = optimize(data, &config.train, &config.backend())?;
    artifacts.write_csv(
        &join(prefix, "trace.csv"),
        &["iteration", "theta_left", "theta_right", "loss"],
        result.trace.iter().map(|e| {
            vec![
                e.iteration.to_string(),
                num(e.theta_left),
                num(e.theta_right),
                num(e.loss),
            ]
        }),
    )?;
    let summary = TrainSummary {
        final_theta: [result.final_params.theta_left, result.final_params.theta_right],
        final_loss: result.final_loss,
        iterations: result.iterations(),
    };
    artifacts.write_json(&join(prefix, TRAIN_RESULT), &summary)?;

    let mut best = f64::INFINITY;
    let best_so_far = result
        .trace
        .iter()
        .map(|e| {
            best = best.min(e.loss);
            (e.iteration as f64, best)
        })
        .collect();
    let curve = LineChart {
        title: "Training loss".into(),
        x_label: "loss evaluation".into(),
        y_label: "loss".into(),
        series: vec![
            Series {
                label: "loss".into(),
                points: result.trace.iter().map(|e| (e.iteration as f64, e.loss)).collect(),
            },
            Series {
                label: "best so far".into(),
                points: best_so_far,
            },
        ],
        log_y: true,
        ..LineChart::default()
    };
    artifacts.write(&join(prefix, "learning_curve.svg"), curve.render().as_bytes())?;
    let target = result.target;
    let params = LineChart {
        title: "Parameter evolution".into(),
        x_label: "loss evaluation".into(),
        y_label: "angle (rad)".into(),
        series: vec![
            Series {
                label: "theta_left".into(),
                points: result.trace.iter().map(|e| (e.iteration as f64, e.theta_left)).collect(),
            },
            Series {
                label: "theta_right".into(),
                points: result.trace.iter().map(|e| (e.iteration as f64, e.theta_right)).collect(),
            },
            flat_series("empirical left", &result, angle_from_frequency(target.left)?),
            flat_series("empirical right", &result, angle_from_frequency(target.right)?),
        ],
        ..LineChart::default()
    };
    artifacts.write(&join(prefix, "parameters.svg"), params.render().as_bytes())?;
    let record = RunRecord {
        id: if prefix.is_empty() { "train".into() } else { prefix.to_string() },
        backend: config.backend,
        seed: config.train.seed,
        shots: config.train.shots,
    };
    Ok((record, result))
}

fn flat_series(label: &str, result: &TrainingResult<f64>, y: f64) -> Series {
    let last = result.trace.last().map_or(0.0, |e| e.iteration as f64);
    Series {
        label: label.into(),
        points: vec![(0.0, y), (last, y)],
    }
}

/// Train on the dataset at `data_path`.
pub fn cmd_train(config: &ExperimentConfig, data_path: &Path, out: &Path) -> Result<ReportBundle> {
    config.validate()?;
    let data = load_dataset(data_path)?;
    let artifacts = Artifacts::create(out)?;
    let (record, _) = train_into(&artifacts, "", config, &data)?;
    let parameters = json!({ "config": config, "data": data_path });
    artifacts.finish("train", config.train.seed, parameters, vec![record])
}

/// Policies × evaluation widths × backends to run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QpePlan {
    pub p_left: Vec<f64>,
    pub n: Vec<usize>,
    pub backends: Vec<BackendKind>,
    pub shots: u64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QpeRun {
    pub id: String,
    pub policy: PolicySpec<f64>,
    pub n: usize,
    pub backend: BackendKind,
    pub seed: u64,
}

impl QpePlan {
    /// The single run described by the config's `policy`, `qpe` and `backend`.
    pub fn from_config(config: &ExperimentConfig) -> Self {
        Self {
            p_left: vec![config.policy.p_left()],
            n: vec![config.qpe.n],
            backends: vec![config.backend],
            shots: config.qpe.shots,
            seed: config.qpe.seed,
        }
    }

    /// Runs in policy-major order; run `i` samples under `derive_seed(seed, i)`.
    pub fn runs(&self) -> Result<Vec<QpeRun>> {
        if self.p_left.is_empty() || self.n.is_empty() || self.backends.is_empty() {
            return Err(Error::config("qpe", "need at least one policy, one n and one backend"));
        }
        if self.shots == 0 {
            return Err(Error::config("qpe.shots", "must be at least 1"));
        }
        if let Some(&n) = self.n.iter().find(|&&n| n == 0 || n > MAX_EVALUATION_QUBITS) {
            return Err(Error::config("qpe.n", format!("{n} is outside 1..={MAX_EVALUATION_QUBITS}")));
        }
        let mut runs = Vec::new();
        for &p in &self.p_left {
            let policy = PolicySpec::new(p).map_err(|e| Error::config("policy.p_left", e.to_string()))?;
            for &n in &self.n {
                for &backend in &self.backends {
                    runs.push(QpeRun {
                        id: format!("{}_n{n}_{backend}", policy_label(p)),
                        policy,
                        n,
                        backend,
                        seed: derive_seed(self.seed, runs.len() as u64),
                    });
                }
            }
        }
        Ok(runs)
    }
}

fn qpe_into(
    artifacts: &Artifacts,
    config: &ExperimentConfig,
    plan: &QpePlan,
    params: &BanditParams<f64>,
) -> Result<Vec<RunRecord>> {
    let runs = plan.runs()?;
    let outcomes: Vec<Result<ValueHistogram<f64>>> = runs
        .par_iter()
        .map(|run| {
            let qpe = QpeConfig {
                n: run.n,
                shots: plan.shots,
                seed: run.seed,
            };
            let hist = run_qpe(&run.policy, params, &qpe, &Backend::from_kind(run.backend, config.noise))?;
            let mut csv = Vec::new();
            hist.write_csv(&mut csv)?;
            artifacts.write(&format!("runs/{}/histogram.csv", run.id), &csv)?;
            Ok(hist)
        })
        .collect();
    let failed: Vec<String> = runs
        .iter()
        .zip(&outcomes)
        .filter_map(|(run, o)| o.as_ref().err().map(|e| format!("{}: {e}", run.id)))
        .collect();
    if !failed.is_empty() {
        return Err(Error::SubRuns {
            failed,
            total: runs.len(),
        });
    }
    let hists: Vec<ValueHistogram<f64>> = outcomes.into_iter().map(|o| o.expect("checked")).collect();

    let mut rows = Vec::new();
    for (run, hist) in runs.iter().zip(&hists) {
        let value = policy_value(&run.policy, params);
        rows.push(vec![
            run.id.clone(),
            num(run.policy.p_left()),
            run.n.to_string(),
            run.backend.to_string(),
            plan.shots.to_string(),
            run.seed.to_string(),
            num(value),
            num(hist.mode()),
            num(error_bound(run.n, value)),
            hist.qsamples.to_string(),
        ]);
    }
    artifacts.write_csv(
        "summary.csv",
        &["run", "p_left", "n", "backend", "shots", "seed", "true_value", "mode", "error_bound", "qsamples"],
        rows,
    )?;

    for &p in &plan.p_left {
        let value = policy_value(&PolicySpec::new(p)?, params);
        let panels = plan
            .backends
            .iter()
            .map(|&backend| {
                plan.n
                    .iter()
                    .map(|&n| {
                        runs.iter()
                            .zip(&hists)
                            .find(|(r, _)| r.policy.p_left() == p && r.n == n && r.backend == backend)
                            .map(|(_, h)| BarPanel {
                                bars: h.counts().map(|(v, c)| (v, c as f64)).collect(),
                                marker: Some(value),
                            })
                    })
                    .collect()
            })
            .collect();
        let grid = BarGrid {
            title: format!("Value estimates, p_left = {p}, v = {value:.4}"),
            row_labels: plan.backends.iter().map(|b| b.to_string()).collect(),
            col_labels: plan.n.iter().map(|n| format!("n = {n}")).collect(),
            panels,
        };
        artifacts.write(&format!("qpe_grid_{}.svg", policy_label(p)), grid.render().as_bytes())?;
    }

    Ok(runs
        .iter()
        .map(|r| RunRecord {
            id: r.id.clone(),
            backend: r.backend,
            seed: r.seed,
            shots: plan.shots,
        })
        .collect())
}

/// Evaluate the policies of `plan` in the environment named by `config.env`.
pub fn cmd_qpe(config: &ExperimentConfig, plan: &QpePlan, out: &Path) -> Result<ReportBundle> {
    config.validate()?;
    let env = config.env.as_ref().ok_or_else(|| {
        Error::config("env", "no environment given (use --theta-left/--theta-right or --from)")
    })?;
    let params = env.resolve()?;
    let artifacts = Artifacts::create(out)?;
    let runs = qpe_into(&artifacts, config, plan, &params)?;
    let parameters = json!({ "config": config, "plan": plan, "env": params });
    artifacts.finish("qpe", plan.seed, parameters, runs)
}

/// Sample-complexity table at value `v` plus a Monte Carlo error study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineRequest {
    pub v: f64,
    pub n: Vec<usize>,
    /// Bandit simulated by the Monte Carlo study.
    pub mc_policy: PolicySpec<f64>,
    pub mc_params: BanditParams<f64>,
    pub mc_samples: Vec<u64>,
    pub mc_repeats: u64,
    pub seed: u64,
}

impl BaselineRequest {
    /// Monte Carlo on a bandit whose arms both pay out with probability `v`.
    pub fn symmetric(v: f64, n: Vec<usize>, seed: u64) -> Result<Self> {
        check_probability("v", v).map_err(|e| Error::config("v", e.to_string()))?;
        Ok(Self {
            v,
            n,
            mc_policy: PolicySpec::uniform(),
            mc_params: BanditParams::from_probabilities(v, v)?,
            mc_samples: vec![10, 100, 1_000, 10_000, 100_000],
            mc_repeats: 200,
            seed,
        })
    }
}

fn baseline_into(artifacts: &Artifacts, req: &BaselineRequest) -> Result<()> {
    if req.n.is_empty() {
        return Err(Error::config("n-range", "no values of n"));
    }
    if let Some(&n) = req.n.iter().find(|&&n| n == 0 || n > 62) {
        return Err(Error::config("n-range", format!("{n} is outside 1..=62")));
    }
    check_probability("v", req.v).map_err(|e| Error::config("v", e.to_string()))?;
    let delta = 1.0 - confidence::<f64>();
    let mut table = Vec::new();
    for &n in &req.n {
        let eps = error_bound(n, req.v);
        table.push((n, eps, qpe_qsample_count(n), mc_samples_needed(eps, delta)?));
    }
    artifacts.write_csv(
        "baseline_table.csv",
        &["n", "error_bound", "qpe_qsample_count", "mc_samples_needed"],
        table
            .iter()
            .map(|&(n, eps, q, m)| vec![n.to_string(), num(eps), q.to_string(), m.to_string()]),
    )?;

    let value = policy_value(&req.mc_policy, &req.mc_params);
    let rmse: Vec<(u64, f64)> = req
        .mc_samples
        .iter()
        .enumerate()
        .map(|(i, &samples)| {
            let seed = derive_seed(req.seed, i as u64);
            Ok((samples, mc_rmse(&req.mc_policy, &req.mc_params, samples, req.mc_repeats, seed)?))
        })
        .collect::<Result<_>>()?;
    let reference = |samples: u64| (value * (1.0 - value) / samples as f64).sqrt();
    artifacts.write_csv(
        "mc_rmse.csv",
        &["samples", "rmse", "reference"],
        rmse.iter()
            .map(|&(s, r)| vec![s.to_string(), num(r), num(reference(s))]),
    )?;
    let estimate = monte_carlo_estimate(&req.mc_policy, &req.mc_params, 10_000, req.seed)?;
    artifacts.write_json(
        "summary.json",
        &json!({
            "v": req.v,
            "confidence": confidence::<f64>(),
            "mc_true_value": value,
            "mc_estimate_10000": estimate.estimate,
        }),
    )?;

    let scaling = LineChart {
        title: format!("Samples for error bound at v = {}", req.v),
        x_label: "n".into(),
        y_label: "samples".into(),
        series: vec![
            Series {
                label: "QPE qsamples".into(),
                points: table.iter().map(|&(n, _, q, _)| (n as f64, q as f64)).collect(),
            },
            Series {
                label: "Monte Carlo".into(),
                points: table.iter().map(|&(n, _, _, m)| (n as f64, m as f64)).collect(),
            },
        ],
        log_y: true,
        ..LineChart::default()
    };
    artifacts.write("scaling.svg", scaling.render().as_bytes())?;
    let rmse_chart = LineChart {
        title: "Monte Carlo RMSE".into(),
        x_label: "samples".into(),
        y_label: "RMSE".into(),
        series: vec![
            Series {
                label: "measured".into(),
                points: rmse.iter().map(|&(s, r)| (s as f64, r)).collect(),
            },
            Series {
                label: "sqrt(v(1-v)/N)".into(),
                points: rmse.iter().map(|&(s, _)| (s as f64, reference(s))).collect(),
            },
        ],
        log_x: true,
        log_y: true,
    };
    artifacts.write("mc_rmse.svg", rmse_chart.render().as_bytes())?;
    Ok(())
}

pub fn cmd_baseline(req: &BaselineRequest, out: &Path) -> Result<ReportBundle> {
    let artifacts = Artifacts::create(out)?;
    baseline_into(&artifacts, req)?;
    artifacts.finish("baseline", req.seed, json!(req), Vec::new())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Figure {
    TrainingCurves,
    QpeHistograms,
    Scaling,
}

impl Figure {
    pub const ALL: [Figure; 3] = [Figure::TrainingCurves, Figure::QpeHistograms, Figure::Scaling];

    pub fn id(self) -> &'static str {
        match self {
            Figure::TrainingCurves => "training-curves",
            Figure::QpeHistograms => "qpe-histograms",
            Figure::Scaling => "scaling",
        }
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Figure {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Figure::ALL.into_iter().find(|f| f.id() == s).ok_or_else(|| Error::UnknownFigure {
            id: s.to_string(),
            valid: Figure::ALL.map(Figure::id).join(", "),
        })
    }
}

const TRAINING_RUNS: [(&str, f64, f64); 2] = [("70-20", 0.7, 0.2), ("0-50", 0.0, 0.5)];
const PULLS_PER_ARM: usize = 1000;

/// Canned end-to-end pipeline for one figure, all seeds derived from `seed`.
pub fn cmd_reproduce(figure: Figure, out: &Path, seed: u64) -> Result<ReportBundle> {
    let artifacts = Artifacts::create(out)?;
    let arms = BanditParams::from_probabilities(0.7, 0.2)?;
    let command = format!("reproduce {figure}");
    match figure {
        Figure::TrainingCurves => {
            let mut config = ExperimentConfig::default();
            config.train.seed = seed;
            let outcomes: Vec<Result<(RunRecord, TrainingResult<f64>)>> = TRAINING_RUNS
                .par_iter()
                .enumerate()
                .map(|(i, &(label, left, right))| {
                    let data = TransitionDataset::with_exact_rates(left, right, PULLS_PER_ARM, derive_seed(seed, i as u64))?;
                    artifacts.write(&format!("{label}/data.jsonl"), data.to_jsonl().as_bytes())?;
                    train_into(&artifacts, label, &config, &data)
                })
                .collect();
            let mut runs = Vec::new();
            let mut results = Vec::new();
            let mut failed = Vec::new();
            for (o, (label, ..)) in outcomes.into_iter().zip(TRAINING_RUNS) {
                match o {
                    Ok((record, result)) => {
                        runs.push(record);
                        results.push(result);
                    }
                    Err(e) => failed.push(format!("{label}: {e}")),
                }
            }
            if !failed.is_empty() {
                return Err(Error::SubRuns {
                    failed,
                    total: TRAINING_RUNS.len(),
                });
            }
            let mut rows = Vec::new();
            for ((label, left, right), result) in TRAINING_RUNS.iter().zip(&results) {
                let data = TransitionDataset::with_exact_rates(*left, *right, PULLS_PER_ARM, 0)?;
                let target = empirical_frequencies::<f64>(&data)?;
                let fit = result.final_probabilities();
                rows.push(vec![
                    label.to_string(),
                    num(angle_from_frequency(target.left)?),
                    num(angle_from_frequency(target.right)?),
                    num(result.final_params.theta_left),
                    num(result.final_params.theta_right),
                    num(fit.left),
                    num(fit.right),
                    num(result.final_loss),
                    result.iterations().to_string(),
                ]);
            }
            artifacts.write_csv(
                "final_angles.csv",
                &[
                    "run",
                    "empirical_theta_left",
                    "empirical_theta_right",
                    "final_theta_left",
                    "final_theta_right",
                    "final_p_left",
                    "final_p_right",
                    "final_loss",
                    "iterations",
                ],
                rows,
            )?;
            let chart = LineChart {
                title: "Training loss".into(),
                x_label: "loss evaluation".into(),
                y_label: "loss".into(),
                series: TRAINING_RUNS
                    .iter()
                    .zip(&results)
                    .map(|((label, ..), r)| Series {
                        label: label.to_string(),
                        points: r.trace.iter().map(|e| (e.iteration as f64, e.loss)).collect(),
                    })
                    .collect(),
                log_y: true,
                ..LineChart::default()
            };
            artifacts.write("learning_curves.svg", chart.render().as_bytes())?;
            let parameters = json!({ "config": config, "runs": TRAINING_RUNS, "pulls_per_arm": PULLS_PER_ARM });
            artifacts.finish(&command, seed, parameters, runs)
        }
        Figure::QpeHistograms => {
            let config = ExperimentConfig {
                env: Some(EnvSource::Params(arms)),
                ..ExperimentConfig::default()
            };
            let plan = QpePlan {
                p_left: vec![0.5, 0.0],
                n: vec![3, 4],
                backends: vec![BackendKind::Ideal, BackendKind::Noisy],
                shots: config.qpe.shots,
                seed,
            };
            let runs = qpe_into(&artifacts, &config, &plan, &arms)?;
            let parameters = json!({ "config": config, "plan": plan, "env": arms });
            artifacts.finish(&command, seed, parameters, runs)
        }
        Figure::Scaling => {
            let req = BaselineRequest {
                v: 0.45,
                n: (3..=8).collect(),
                mc_policy: PolicySpec::uniform(),
                mc_params: arms,
                ..BaselineRequest::symmetric(0.45, Vec::new(), seed)?
            };
            baseline_into(&artifacts, &req)?;
            artifacts.finish(&command, seed, json!(req), Vec::new())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(dir: &Path, rel: &str) -> String {
        std::fs::read_to_string(dir.join(rel)).unwrap()
    }

    #[test]
    fn labels() {
        assert_eq!(policy_label(0.5), "pi50");
        assert_eq!(policy_label(0.0), "pi0");
        assert_eq!(policy_label(0.125), "p0.125");
    }

    #[test]
    fn figure_ids_round_trip() {
        for f in Figure::ALL {
            assert_eq!(f.id().parse::<Figure>().unwrap(), f);
        }
        let err = "fig5".parse::<Figure>().unwrap_err().to_string();
        assert!(err.contains("training-curves, qpe-histograms, scaling"), "{err}");
    }

    #[test]
    fn plan_enumerates_runs() {
        let plan = QpePlan {
            p_left: vec![0.5, 0.0],
            n: vec![3, 4],
            backends: vec![BackendKind::Ideal, BackendKind::Noisy],
            shots: 300,
            seed: 1,
        };
        let runs = plan.runs().unwrap();
        assert_eq!(runs.len(), 8);
        assert_eq!(runs[0].id, "pi50_n3_ideal");
        assert_eq!(runs[7].id, "pi0_n4_noisy");
        let bad = QpePlan { n: vec![13], ..plan.clone() };
        assert!(bad.runs().unwrap_err().to_string().contains("qpe.n"));
        let empty = QpePlan { n: vec![], ..plan };
        assert!(empty.runs().is_err());
    }

    #[test]
    fn exact_oracle_histogram_is_scaled_distribution() {
        let dir = tempfile::tempdir().unwrap();
        let config = ExperimentConfig {
            env: Some(EnvSource::Params(BanditParams::from_probabilities(0.7, 0.2).unwrap())),
            backend: BackendKind::ExactOracle,
            ..ExperimentConfig::default()
        };
        let bundle = cmd_qpe(&config, &QpePlan::from_config(&config), dir.path()).unwrap();
        assert_eq!(bundle.manifest.runs[0].shots, 300);
        let csv = read(dir.path(), "runs/pi50_n3_exact-oracle/histogram.csv");
        let mut total = 0;
        for line in csv.lines().skip(1) {
            let cols: Vec<&str> = line.split(',').collect();
            let count: u64 = cols[2].parse().unwrap();
            let p: f64 = cols[3].parse().unwrap();
            assert!((count as f64 - 300.0 * p).abs() <= 1.0, "{line}");
            total += count;
        }
        assert_eq!(total, 300);
    }

    #[test]
    fn qpe_requires_environment() {
        let dir = tempfile::tempdir().unwrap();
        let config = ExperimentConfig::default();
        let err = cmd_qpe(&config, &QpePlan::from_config(&config), dir.path()).unwrap_err();
        assert!(err.to_string().contains("env"), "{err}");
    }

    #[test]
    fn baseline_table_and_empty_range() {
        let dir = tempfile::tempdir().unwrap();
        let req = BaselineRequest::symmetric(0.45, (3..=8).collect(), 0).unwrap();
        cmd_baseline(&req, dir.path()).unwrap();
        let table = read(dir.path(), "baseline_table.csv");
        let rows: Vec<Vec<f64>> = table
            .lines()
            .skip(1)
            .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
            .collect();
        assert_eq!(table.lines().next().unwrap(), "n,error_bound,qpe_qsample_count,mc_samples_needed");
        assert_eq!(rows.len(), 6);
        for w in rows.windows(2) {
            assert!(w[1][1] < w[0][1] && w[1][2] > w[0][2] && w[1][3] > w[0][3]);
        }
        let summary: serde_json::Value = serde_json::from_str(&read(dir.path(), "summary.json")).unwrap();
        assert!((summary["mc_estimate_10000"].as_f64().unwrap() - 0.45).abs() <= 0.02);

        let empty = BaselineRequest::symmetric(0.45, Vec::new(), 0).unwrap();
        assert!(cmd_baseline(&empty, dir.path()).unwrap_err().to_string().contains("n-range"));
    }
}
