use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::backend::{Backend, BackendKind};
use crate::bandit::{BanditParams, PolicySpec};
use crate::error::{Error, Result};
use crate::noise::NoiseConfig;
use crate::qpe::QpeConfig;
use crate::trainer::TrainConfig;

/// Where the environment angles come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum EnvSource {
    Params(BanditParams<f64>),
    /// A training output directory or its `train_result.json`.
    FromTraining(PathBuf),
}

/// Contents of `train_result.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub final_theta: [f64; 2],
    pub final_loss: f64,
    pub iterations: usize,
}

impl EnvSource {
    pub fn resolve(&self) -> Result<BanditParams<f64>> {
        match self {
            EnvSource::Params(p) => BanditParams::new(p.theta_left, p.theta_right),
            EnvSource::FromTraining(path) => {
                let file = if path.is_dir() {
                    path.join(super::TRAIN_RESULT)
                } else {
                    path.clone()
                };
                let text = std::fs::read_to_string(&file).map_err(|e| Error::io(&file, e))?;
                let summary: TrainSummary =
                    serde_json::from_str(&text).map_err(|source| Error::ConfigFile { path: file, source })?;
                BanditParams::new(summary.final_theta[0], summary.final_theta[1])
            }
        }
    }
}

fn uniform_policy() -> PolicySpec<f64> {
    PolicySpec::uniform()
}

/// One JSON document configuring every command. Missing sections take their
/// defaults; command-line flags override fields after loading.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub backend: BackendKind,
    pub noise: NoiseConfig<f64>,
    pub train: TrainConfig<f64>,
    pub qpe: QpeConfig,
    #[serde(default = "uniform_policy")]
    pub policy: PolicySpec<f64>,
    pub env: Option<EnvSource>,
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            backend: BackendKind::default(),
            noise: NoiseConfig::default(),
            train: TrainConfig::default(),
            qpe: QpeConfig::default(),
            policy: uniform_policy(),
            env: None,
            output_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| Error::ConfigFile {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Check every section; errors name the offending field.
    pub fn validate(&self) -> Result<()> {
        for (field, value) in [
            ("noise.p1", self.noise.p1),
            ("noise.p2", self.noise.p2),
            ("noise.readout_flip", self.noise.readout_flip),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::config(field, format!("{value} is outside [0, 1]")));
            }
        }
        self.train.validate().map_err(|e| match e {
            Error::ZeroBudget => Error::config("train.max_iterations", "must be at least 1"),
            e => e,
        })?;
        if self.qpe.shots == 0 {
            return Err(Error::config("qpe.shots", "must be at least 1"));
        }
        if self.qpe.validate().is_err() {
            return Err(Error::config(
                "qpe.n",
                format!("{} is outside 1..={}", self.qpe.n, crate::qpe::MAX_EVALUATION_QUBITS),
            ));
        }
        if let Some(EnvSource::FromTraining(path)) = &self.env {
            if !path.exists() {
                return Err(Error::config(
                    "env.from-training",
                    format!("{} does not exist", path.display()),
                ));
            }
        }
        Ok(())
    }

    pub fn backend(&self) -> Backend<f64> {
        Backend::from_kind(self.backend, self.noise)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let c: ExperimentConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(c, ExperimentConfig::default());
        assert_eq!(c.train.shots, 8000);
        assert_eq!(c.qpe.shots, 300);
        c.validate().unwrap();
    }

    #[test]
    fn sections_parse() {
        let c: ExperimentConfig = serde_json::from_str(
            r#"{"backend": "noisy", "noise": {"p2": 0.01}, "train": {"shots": 100},
                "qpe": {"n": 4}, "policy": {"p_left": 0.0},
                "env": {"params": {"theta_left": 1.98, "theta_right": 0.93}}}"#,
        )
        .unwrap();
        assert_eq!(c.backend, BackendKind::Noisy);
        assert_eq!(c.noise.p2, 0.01);
        assert_eq!(c.noise.p1, NoiseConfig::<f64>::default().p1);
        assert_eq!(c.train.shots, 100);
        assert_eq!(c.qpe.n, 4);
        assert_eq!(c.policy.p_left(), 0.0);
        assert_eq!(c.env.unwrap().resolve().unwrap().theta_left, 1.98);
    }

    #[test]
    fn unknown_fields_and_bad_values_are_rejected() {
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"shots": 3}"#).is_err());
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"policy": {"p_left": 1.5}}"#).is_err());
        let mut c = ExperimentConfig::default();
        c.noise.p2 = 2.0;
        let err = c.validate().unwrap_err().to_string();
        assert!(err.contains("noise.p2"), "{err}");
        let mut c = ExperimentConfig::default();
        c.qpe.n = 0;
        assert!(c.validate().unwrap_err().to_string().contains("qpe.n"));
        let mut c = ExperimentConfig::default();
        c.train.shots = 0;
        assert!(c.validate().unwrap_err().to_string().contains("train.shots"));
    }

    #[test]
    fn missing_training_output_is_named() {
        let c = ExperimentConfig {
            env: Some(EnvSource::FromTraining("/nonexistent/train".into())),
            ..ExperimentConfig::default()
        };
        let err = c.validate().unwrap_err().to_string();
        assert!(err.contains("/nonexistent/train"), "{err}");
    }
}
