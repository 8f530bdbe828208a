//! CSV outputs.
//!
//! Training metrics (`metrics.csv`):
//! `stage,epoch,mean_return,mean_length,objective,value_loss`
//!
//! Step benchmark (`bench.csv`):
//! `experiment,seed,steps_base,steps_aux,steps_total,success_rate,collisions`

use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};
use swarm_core::discovery::PatternVerdict;
use swarm_core::ppo::EpochMetrics;

pub const TRAINING_HEADER: &str = "stage,epoch,mean_return,mean_length,objective,value_loss";
pub const BENCH_HEADER: &str = "experiment,seed,steps_base,steps_aux,steps_total,success_rate,collisions";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingRow {
    pub stage: usize,
    pub epoch: usize,
    pub mean_return: f64,
    pub mean_length: f64,
    pub objective: f64,
    pub value_loss: f64,
}

impl TrainingRow {
    pub fn new(stage: usize, m: &EpochMetrics) -> Self {
        Self {
            stage,
            epoch: m.epoch,
            mean_return: m.mean_return,
            mean_length: m.mean_length,
            objective: m.objective,
            value_loss: m.value_loss,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub experiment: String,
    pub seed: u64,
    pub steps_base: f64,
    pub steps_aux: f64,
    pub steps_total: f64,
    pub success_rate: f64,
    pub collisions: usize,
}

impl MetricsRow {
    /// Mean step counts over the verdict's episodes. `None` when there are
    /// no episodes.
    pub fn from_verdict(experiment: &str, seed: u64, verdict: &PatternVerdict) -> Option<Self> {
        let n = verdict.episodes.len();
        if n == 0 {
            return None;
        }
        let mean = |f: fn(&swarm_core::discovery::EpisodeVerdict) -> usize| {
            verdict.episodes.iter().map(|e| f(e) as f64).sum::<f64>() / n as f64
        };
        let steps_base = mean(|e| e.steps_base);
        let steps_aux = mean(|e| e.steps_aux);
        Some(Self {
            experiment: experiment.to_string(),
            seed,
            steps_base,
            steps_aux,
            steps_total: steps_base + steps_aux,
            success_rate: verdict.success_rate(),
            collisions: verdict.collisions(),
        })
    }
}

/// Writes rows with a header line, even when `rows` is empty.
pub fn write_csv<T: Serialize>(path: &Path, header: &str, rows: &[T]) -> anyhow::Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    w.write_record(header.split(','))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> anyhow::Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<Result<Vec<T>, _>>()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use swarm_core::discovery::EpisodeVerdict;

    fn verdict(eps: &[(bool, bool, usize, usize)]) -> PatternVerdict {
        PatternVerdict {
            valid: false,
            episodes: eps
                .iter()
                .map(|&(collision_free, goal, steps_base, steps_aux)| EpisodeVerdict {
                    collision_free,
                    goal,
                    steps_base,
                    steps_aux,
                })
                .collect(),
            trajectories: Vec::new(),
        }
    }

    #[test]
    fn bench_row_means() {
        let v = verdict(&[(true, true, 10, 2), (false, false, 4, 0), (true, false, 7, 1)]);
        let row = MetricsRow::from_verdict("A", 3, &v).unwrap();
        assert_eq!(row.steps_base, 7.0);
        assert_eq!(row.steps_aux, 1.0);
        assert_eq!(row.steps_total, row.steps_base + row.steps_aux);
        assert!((row.success_rate - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(row.collisions, 1);
        assert!(MetricsRow::from_verdict("A", 3, &verdict(&[])).is_none());
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let rows = vec![
            MetricsRow {
                experiment: "A".into(),
                seed: 1,
                steps_base: 12.5,
                steps_aux: 0.25,
                steps_total: 12.75,
                success_rate: 0.9,
                collisions: 2,
            },
            MetricsRow {
                experiment: "n5".into(),
                seed: 2,
                steps_base: 1.0 / 3.0,
                steps_aux: 0.0,
                steps_total: 1.0 / 3.0,
                success_rate: 1.0,
                collisions: 0,
            },
        ];
        let path = dir.path().join("bench.csv");
        write_csv(&path, BENCH_HEADER, &rows).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().next().unwrap(), BENCH_HEADER);
        assert_eq!(read_csv::<MetricsRow>(&path).unwrap(), rows);

        let train = vec![TrainingRow {
            stage: 1,
            epoch: 0,
            mean_return: -0.125,
            mean_length: 64.0,
            objective: 1e-3,
            value_loss: 2.5e-7,
        }];
        let path = dir.path().join("metrics.csv");
        write_csv(&path, TRAINING_HEADER, &train).unwrap();
        assert_eq!(read_csv::<TrainingRow>(&path).unwrap(), train);
    }

    #[test]
    fn empty_table_keeps_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bench.csv");
        write_csv::<MetricsRow>(&path, BENCH_HEADER, &[]).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap().trim(), BENCH_HEADER);
        assert!(read_csv::<MetricsRow>(&path).unwrap().is_empty());
    }
}
