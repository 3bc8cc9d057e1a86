use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bandit::ArmSelector;
use crate::error::{check_probability, Error, Result};
use crate::rng::stream_rng;
use crate::Scalar;

use super::Frequencies;

/// One classical pull: the arm and whether it paid out.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Transition {
    pub action: ArmSelector,
    pub reward: u8,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TransitionDataset {
    records: Vec<Transition>,
}

impl TransitionDataset {
    pub fn new(records: Vec<Transition>) -> Result<Self> {
        if let Some((i, r)) = records.iter().enumerate().find(|(_, r)| r.reward > 1) {
            return Err(Error::DatasetLine {
                line: i + 1,
                message: format!("reward {} is not 0 or 1", r.reward),
            });
        }
        Ok(Self { records })
    }

    /// Parse JSON Lines: `{"action": "left"|"right", "reward": 0|1}` per line.
    /// Blank lines are skipped.
    pub fn parse_jsonl(text: &str) -> Result<Self> {
        let mut records = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let record: Transition = serde_json::from_str(line).map_err(|e| Error::DatasetLine {
                line: line_no,
                message: e.to_string(),
            })?;
            if record.reward > 1 {
                return Err(Error::DatasetLine {
                    line: line_no,
                    message: format!("reward {} is not 0 or 1", record.reward),
                });
            }
            records.push(record);
        }
        if records.is_empty() {
            return Err(Error::EmptyDataset);
        }
        Ok(Self { records })
    }

    /// One JSON object per line, newline-terminated.
    pub fn to_jsonl(&self) -> String {
        self.records
            .iter()
            .map(|r| serde_json::to_string(r).expect("plain struct serializes") + "\n")
            .collect()
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_jsonl()).map_err(|e| Error::io(path, e))
    }

    /// `pulls_per_arm` pulls of each arm with exactly `round(p·pulls)` wins,
    /// shuffled under `seed`.
    pub fn with_exact_rates(p_left: f64, p_right: f64, pulls_per_arm: usize, seed: u64) -> Result<Self> {
        check_probability("p_left", p_left)?;
        check_probability("p_right", p_right)?;
        let mut records = Vec::with_capacity(2 * pulls_per_arm);
        for (arm, p) in [(ArmSelector::Left, p_left), (ArmSelector::Right, p_right)] {
            let wins = (p * pulls_per_arm as f64).round() as usize;
            records.extend((0..pulls_per_arm).map(|i| Transition {
                action: arm,
                reward: u8::from(i < wins),
            }));
        }
        records.shuffle(&mut stream_rng(seed, 0));
        Ok(Self { records })
    }

    /// Independent Bernoulli pulls with the given win rates.
    pub fn sampled(p_left: f64, p_right: f64, pulls_per_arm: usize, seed: u64) -> Result<Self> {
        check_probability("p_left", p_left)?;
        check_probability("p_right", p_right)?;
        let mut rng = stream_rng(seed, 1);
        let mut records = Vec::with_capacity(2 * pulls_per_arm);
        for _ in 0..pulls_per_arm {
            for (arm, p) in [(ArmSelector::Left, p_left), (ArmSelector::Right, p_right)] {
                records.push(Transition {
                    action: arm,
                    reward: u8::from(rng.gen::<f64>() < p),
                });
            }
        }
        Ok(Self { records })
    }

    pub fn records(&self) -> &[Transition] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn pulls(&self, arm: ArmSelector) -> usize {
        self.records.iter().filter(|r| r.action == arm).count()
    }

    pub fn wins(&self, arm: ArmSelector) -> usize {
        self.records
            .iter()
            .filter(|r| r.action == arm && r.reward == 1)
            .count()
    }
}

pub fn load_dataset(path: &Path) -> Result<TransitionDataset> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    TransitionDataset::parse_jsonl(&text)
}

/// Per-arm win ratio `wins / pulls`.
pub fn empirical_frequencies<T: Scalar>(data: &TransitionDataset) -> Result<Frequencies<T>> {
    let ratio = |arm: ArmSelector| -> Result<T> {
        let pulls = data.pulls(arm);
        if pulls == 0 {
            return Err(Error::NoPulls(arm.label()));
        }
        Ok(T::lit(data.wins(arm) as f64 / pulls as f64))
    };
    Ok(Frequencies {
        left: ratio(ArmSelector::Left)?,
        right: ratio(ArmSelector::Right)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lines(record: &str, n: usize) -> String {
        std::iter::repeat_n(record, n).collect::<Vec<_>>().join("\n")
    }

    #[test]
    fn counts_left_records() {
        let text = format!(
            "{}\n{}\n",
            lines(r#"{"action":"left","reward":1}"#, 7),
            lines(r#"{"action":"left","reward":0}"#, 3)
        );
        let data = TransitionDataset::parse_jsonl(&text).unwrap();
        assert_eq!(data.pulls(ArmSelector::Left), 10);
        assert_eq!(data.wins(ArmSelector::Left), 7);
        // right arm never pulled: loading succeeds, frequencies do not
        assert!(matches!(
            empirical_frequencies::<f64>(&data),
            Err(Error::NoPulls("right"))
        ));
    }

    #[test]
    fn empty_file_is_an_error() {
        assert!(matches!(TransitionDataset::parse_jsonl(""), Err(Error::EmptyDataset)));
        assert!(matches!(TransitionDataset::parse_jsonl("\n \n"), Err(Error::EmptyDataset)));
    }

    #[test]
    fn unknown_action_names_the_line() {
        let text = "{\"action\":\"left\",\"reward\":1}\n{\"action\":\"up\",\"reward\":1}\n";
        match TransitionDataset::parse_jsonl(text) {
            Err(Error::DatasetLine { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn reward_outside_binary_rejected() {
        let text = "{\"action\":\"right\",\"reward\":2}";
        assert!(matches!(
            TransitionDataset::parse_jsonl(text),
            Err(Error::DatasetLine { line: 1, .. })
        ));
    }

    #[test]
    fn missing_file_names_path() {
        let err = load_dataset(Path::new("/nonexistent/pulls.jsonl")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/pulls.jsonl"));
    }

    #[test]
    fn frequencies_are_ratios() {
        let data = TransitionDataset::with_exact_rates(0.7, 0.0, 10, 1).unwrap();
        let f = empirical_frequencies::<f64>(&data).unwrap();
        assert_eq!((f.left, f.right), (0.7, 0.0));
        let data = TransitionDataset::with_exact_rates(0.0, 0.5, 50, 1).unwrap();
        assert_eq!(empirical_frequencies::<f64>(&data).unwrap().left, 0.0);
    }

    #[test]
    fn sampled_dataset_concentrates() {
        let data = TransitionDataset::sampled(0.7, 0.2, 100_000, 5).unwrap();
        let f = empirical_frequencies::<f64>(&data).unwrap();
        assert!((f.left - 0.7).abs() < 0.01);
        assert!((f.right - 0.2).abs() < 0.01);
    }

    #[test]
    fn jsonl_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.jsonl");
        let data = TransitionDataset::with_exact_rates(0.3, 0.6, 20, 9).unwrap();
        data.write_jsonl(&path).unwrap();
        assert_eq!(load_dataset(&path).unwrap(), data);
    }
}
