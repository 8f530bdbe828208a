//! Chain bundles and JSON-lines trajectory files.
//!
//! A chain bundle is a directory holding `chain.json` (see [`ChainMeta`])
//! and one policy checkpoint per chain position, `policy_0.ckpt`,
//! `policy_1.ckpt`, and so on.
//!
//! A trajectory file has one JSON object per line ([`StepRecord`]):
//!
//! ```text
//! {"episode":0,"step":0,"phase":"initial","stage":null,"positions":[[x,y],...],"action":null,"reward":null}
//! {"episode":0,"step":1,"phase":"base","stage":0,"positions":[...],"action":[...],"reward":0.0123}
//! ```

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{EpisodeTrajectory, PolicyChain, StartSpec, SwitchCriterion};
use crate::env::{GoalSpec, RewardMode, SwarmConfig};
use crate::nn::checkpoint::{load_policy, save_policy, CheckpointError};

pub const CHAIN_META_FILE: &str = "chain.json";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{path}, line {line}: {source}")]
    Parse {
        path: PathBuf,
        line: usize,
        source: serde_json::Error,
    },
    #[error("{path}: {source}")]
    Checkpoint { path: PathBuf, source: CheckpointError },
    #[error("{0}: bundle lists no policies")]
    EmptyBundle(PathBuf),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Everything needed to rebuild the environment a chain was trained in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainMeta {
    pub swarm: SwarmConfig,
    pub mode: RewardMode,
    pub goal: GoalSpec,
    pub start: StartSpec,
    pub switch: SwitchCriterion,
    pub horizons: Vec<usize>,
    pub gammas: Vec<f64>,
    #[serde(default = "default_guard")]
    pub aux_guard: bool,
    pub policies: Vec<String>,
}

fn default_guard() -> bool {
    true
}

pub fn save_chain(dir: &Path, chain: &PolicyChain, meta: &ChainMeta) -> Result<(), IoError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut meta = meta.clone();
    meta.switch = chain.switch;
    meta.horizons = chain.horizons.clone();
    meta.policies = (0..chain.len()).map(|k| format!("policy_{k}.ckpt")).collect();
    for (policy, name) in chain.policies.iter().zip(&meta.policies) {
        let path = dir.join(name);
        save_policy(&path, policy, None).map_err(|source| IoError::Checkpoint { path, source })?;
    }
    let path = dir.join(CHAIN_META_FILE);
    let text = serde_json::to_string_pretty(&meta).map_err(|source| IoError::Json {
        path: path.clone(),
        source,
    })?;
    fs::write(&path, text + "\n").map_err(io_err(&path))
}

pub fn load_chain(dir: &Path) -> Result<(PolicyChain, ChainMeta), IoError> {
    let path = dir.join(CHAIN_META_FILE);
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    let meta: ChainMeta = serde_json::from_str(&text).map_err(|source| IoError::Json {
        path: path.clone(),
        source,
    })?;
    if meta.policies.is_empty() {
        return Err(IoError::EmptyBundle(dir.to_path_buf()));
    }
    let policies = meta
        .policies
        .iter()
        .map(|name| {
            let path = dir.join(name);
            load_policy(&path).map_err(|source| IoError::Checkpoint { path, source })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let chain = PolicyChain {
        policies,
        switch: meta.switch,
        horizons: meta.horizons.clone(),
    };
    Ok((chain, meta))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Initial,
    Base,
    Auxiliary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub episode: usize,
    pub step: usize,
    pub phase: Phase,
    /// Chain position of the acting policy; `None` for the initial record.
    pub stage: Option<usize>,
    pub positions: Vec<[f64; 2]>,
    pub action: Option<Vec<f64>>,
    pub reward: Option<f64>,
}

impl StepRecord {
    pub fn from_trajectories(trajectories: &[EpisodeTrajectory]) -> Vec<StepRecord> {
        let mut out = Vec::new();
        for (episode, t) in trajectories.iter().enumerate() {
            out.push(StepRecord {
                episode,
                step: 0,
                phase: Phase::Initial,
                stage: None,
                positions: t.start.positions.iter().map(|p| [p.x, p.y]).collect(),
                action: None,
                reward: None,
            });
            for (k, s) in t.steps.iter().enumerate() {
                out.push(StepRecord {
                    episode,
                    step: k + 1,
                    phase: if s.stage == 0 { Phase::Base } else { Phase::Auxiliary },
                    stage: Some(s.stage),
                    positions: s.state.positions.iter().map(|p| [p.x, p.y]).collect(),
                    action: Some(s.action.clone()),
                    reward: Some(s.reward),
                });
            }
        }
        out
    }
}

pub fn write_trajectories(path: &Path, records: &[StepRecord]) -> Result<(), IoError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut w, r).map_err(|source| IoError::Json {
            path: path.to_path_buf(),
            source,
        })?;
        w.write_all(b"\n").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Reads a trajectory file; blank lines are skipped. Parse errors carry the
/// 1-based line number.
pub fn read_trajectories(path: &Path) -> Result<Vec<StepRecord>, IoError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (k, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|source| IoError::Parse {
            path: path.to_path_buf(),
            line: k + 1,
            source,
        })?;
        out.push(rec);
    }
    Ok(out)
}
