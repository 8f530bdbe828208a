//! Subcommand implementations. Each writes its artifacts into an output
//! directory and returns a summary for the caller to report.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use swarm_core::config::ExperimentConfig;
use swarm_core::discovery::{
    evaluate_chain, load_chain, read_trajectories, run_discovery, save_chain, validate_patterns, write_trajectories,
    ChainMeta, Discovery, EpisodeVerdict, FailureReason, PatternVerdict, StepRecord,
};
use swarm_core::nn::checkpoint::{save_policy, save_value};
use swarm_core::ppo::{train_policy_with, TrainOutput};
use swarm_core::seeds::{SeedRoot, Stream};
use swarm_core::SwarmEnv;
use thiserror::Error;

use crate::metrics::{write_csv, MetricsRow, TrainingRow, BENCH_HEADER, TRAINING_HEADER};
use crate::presets::preset;
use crate::render::{render, RenderOptions};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("unknown experiment '{0}' (expected one of A, B, C, D, E, F)")]
    UnknownExperiment(String),
    #[error("give either --config or --experiment")]
    NoConfig,
    #[error("no trained chain for experiment '{id}' at {path}")]
    MissingCheckpoint { id: String, path: PathBuf },
    #[error("discovery failed: {0}")]
    DiscoveryFailure(FailureReason),
}

pub const POLICY_FILE: &str = "policy.ckpt";
pub const VALUE_FILE: &str = "value.ckpt";
pub const METRICS_FILE: &str = "metrics.csv";
pub const CONFIG_FILE: &str = "config.toml";
pub const CHAIN_DIR: &str = "chain";
pub const VERDICT_FILE: &str = "verdict.json";
pub const TRAJECTORY_FILE: &str = "trajectories.jsonl";

/// A config file takes precedence over a preset id; the label names the run
/// in reports.
pub fn resolve_config(config: Option<&Path>, experiment: Option<&str>) -> anyhow::Result<(String, ExperimentConfig)> {
    if let Some(path) = config {
        let cfg = ExperimentConfig::load(path)?;
        let label = experiment
            .map(str::to_string)
            .or_else(|| path.file_stem().map(|s| s.to_string_lossy().into_owned()))
            .unwrap_or_else(|| "custom".into());
        return Ok((label, cfg));
    }
    let id = experiment.ok_or(CliError::NoConfig)?;
    let spec = preset(id).ok_or_else(|| CliError::UnknownExperiment(id.to_string()))?;
    Ok((spec.id.to_string(), spec.config()))
}

/// Report written as `verdict.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictReport {
    pub experiment: String,
    pub seed: u64,
    pub valid: bool,
    pub failure: Option<FailureReason>,
    pub chain_length: usize,
    pub success_rate: f64,
    pub collisions: usize,
    pub episodes: Vec<EpisodeVerdict>,
}

impl VerdictReport {
    fn new(experiment: &str, seed: u64, chain_length: usize, verdict: &PatternVerdict, failure: Option<FailureReason>) -> Self {
        Self {
            experiment: experiment.to_string(),
            seed,
            valid: verdict.valid,
            failure,
            chain_length,
            success_rate: verdict.success_rate(),
            collisions: verdict.collisions(),
            episodes: verdict.episodes.clone(),
        }
    }

    fn write(&self, path: &Path) -> anyhow::Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)? + "\n").with_context(|| format!("writing {}", path.display()))
    }
}

fn write_config(out: &Path, cfg: &ExperimentConfig) -> anyhow::Result<()> {
    let path = out.join(CONFIG_FILE);
    fs::write(&path, cfg.to_toml()).with_context(|| format!("writing {}", path.display()))
}

/// One run of PPO from freshly drawn start states.
pub fn train(cfg: &ExperimentConfig, seed: u64, out: &Path) -> anyhow::Result<TrainOutput> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let env = cfg.env()?;
    let root = SeedRoot(seed);
    let sigma = cfg
        .start()
        .draw(&env, cfg.discovery.sigma_size, &mut root.rng(Stream::InitialStates))?;
    let mut rows = Vec::new();
    let result = train_policy_with(&sigma, &cfg.ppo, &env, &mut root.rng(Stream::Training(0)), |m| {
        rows.push(TrainingRow::new(0, m))
    })?;
    save_policy(&out.join(POLICY_FILE), &result.policy, Some(&result.policy_optimizer))?;
    save_value(&out.join(VALUE_FILE), &result.value, Some(&result.value_optimizer))?;
    write_csv(&out.join(METRICS_FILE), TRAINING_HEADER, &rows)?;
    write_config(out, cfg)?;
    Ok(result)
}

fn chain_meta(cfg: &ExperimentConfig, discovery: &Discovery) -> ChainMeta {
    ChainMeta {
        swarm: cfg.swarm_config(),
        mode: cfg.reward.mode,
        goal: cfg.goal(),
        start: cfg.start(),
        switch: discovery.chain.switch,
        horizons: discovery.chain.horizons.clone(),
        gammas: discovery.stages.iter().map(|s| s.gamma).collect(),
        aux_guard: cfg.discovery.aux_guard,
        policies: Vec::new(),
    }
}

/// Full discovery loop. Artifacts are written whether or not a valid
/// pattern was found.
pub fn discover(label: &str, cfg: &ExperimentConfig, seed: u64, out: &Path) -> anyhow::Result<Discovery> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let env = cfg.env()?;
    let mut rows = Vec::new();
    let discovery = run_discovery(
        &env,
        cfg.start(),
        cfg.goal(),
        &cfg.ppo,
        &cfg.discovery,
        SeedRoot(seed),
        |stage, m| rows.push(TrainingRow::new(stage, m)),
    )?;
    save_chain(&out.join(CHAIN_DIR), &discovery.chain, &chain_meta(cfg, &discovery))?;
    write_csv(&out.join(METRICS_FILE), TRAINING_HEADER, &rows)?;
    write_config(out, cfg)?;
    VerdictReport::new(label, seed, discovery.chain.len(), &discovery.verdict, discovery.failure).write(&out.join(VERDICT_FILE))?;
    write_trajectories(
        &out.join(TRAJECTORY_FILE),
        &StepRecord::from_trajectories(&discovery.verdict.trajectories),
    )?;
    Ok(discovery)
}

fn evaluate_bundle(chain_dir: &Path, episodes: usize, seed: u64) -> anyhow::Result<PatternVerdict> {
    let (chain, meta) = load_chain(chain_dir)?;
    let env = SwarmEnv::new(meta.swarm.clone(), meta.mode, meta.horizons[0])?;
    let starts = meta.start.draw(&env, episodes, &mut SeedRoot(seed).rng(Stream::Bench))?;
    let trajectories = evaluate_chain(&chain, &env, &starts, meta.aux_guard)?;
    Ok(validate_patterns(trajectories, &env, &meta.goal))
}

/// Evaluates a saved chain on fresh start states.
pub fn evaluate(chain_dir: &Path, episodes: usize, seed: u64, out: &Path) -> anyhow::Result<PatternVerdict> {
    if episodes == 0 {
        bail!("--episodes must be positive");
    }
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let verdict = evaluate_bundle(chain_dir, episodes, seed)?;
    let label = chain_dir
        .parent()
        .and_then(|p| p.file_name())
        .map_or_else(|| "chain".to_string(), |s| s.to_string_lossy().into_owned());
    let chain_length = load_chain(chain_dir)?.0.len();
    VerdictReport::new(&label, seed, chain_length, &verdict, None).write(&out.join(VERDICT_FILE))?;
    write_trajectories(&out.join(TRAJECTORY_FILE), &StepRecord::from_trajectories(&verdict.trajectories))?;
    Ok(verdict)
}

/// Step statistics for the chains stored under `runs/<id>/chain`.
pub fn bench(runs: &Path, ids: &[String], episodes: usize, seed: u64, out_csv: &Path) -> anyhow::Result<Vec<MetricsRow>> {
    let mut rows = Vec::new();
    for id in ids {
        let dir = runs.join(id).join(CHAIN_DIR);
        if !dir.join(swarm_core::discovery::CHAIN_META_FILE).exists() {
            return Err(CliError::MissingCheckpoint { id: id.clone(), path: dir }.into());
        }
        if episodes == 0 {
            continue;
        }
        let verdict = evaluate_bundle(&dir, episodes, seed)?;
        rows.extend(MetricsRow::from_verdict(id, seed, &verdict));
    }
    if let Some(parent) = out_csv.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    write_csv(out_csv, BENCH_HEADER, &rows)?;
    Ok(rows)
}

/// SVG snapshots of one episode of a trajectory file.
pub fn render_file(trajectory: &Path, out: &Path, opts: &RenderOptions) -> anyhow::Result<Vec<PathBuf>> {
    let records = read_trajectories(trajectory)?;
    render(&records, out, opts)
}
