//! Two-stage pattern discovery: a base policy trained on long horizons with
//! a high discount, followed by auxiliary policies trained with lower
//! discounts on the final states the previous policy left behind.

mod evaluate;
mod io;

pub use evaluate::{evaluate_chain, validate_patterns, ChainStep, EpisodeTrajectory, EpisodeVerdict, PatternVerdict};
pub use io::{
    load_chain, read_trajectories, save_chain, write_trajectories, ChainMeta, IoError, Phase, StepRecord, CHAIN_META_FILE,
};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{sample_initial_state, EnvError, GoalSpec, InitialKind, SwarmEnv, SwarmState};
use crate::nn::GaussianPolicy;
use crate::ppo::{train_policy_with, EpochMetrics, HyperParams, PpoError};
use crate::seeds::{SeedRoot, Stream};

#[derive(Debug, Error)]
pub enum DiscoveryError {
    #[error("invalid discovery settings: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Ppo(#[from] PpoError),
}

/// Discount factor for each training run of the chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DiscountSchedule {
    pub values: Vec<f64>,
}

impl Default for DiscountSchedule {
    fn default() -> Self {
        Self { values: vec![0.99, 0.90] }
    }
}

impl DiscountSchedule {
    pub fn validate(&self) -> Result<(), DiscoveryError> {
        if self.values.is_empty() {
            return Err(DiscoveryError::InvalidConfig("discount schedule is empty".into()));
        }
        if self.values.iter().any(|g| !(*g > 0.0 && *g <= 1.0)) {
            return Err(DiscoveryError::InvalidConfig("discount factors must lie in (0, 1]".into()));
        }
        if self.values.windows(2).any(|w| w[1] > w[0]) {
            return Err(DiscoveryError::InvalidConfig("discount schedule must be nonincreasing".into()));
        }
        Ok(())
    }

    /// Discount for run `t`; runs past the end reuse the last value.
    pub fn get(&self, t: usize) -> f64 {
        self.values[t.min(self.values.len() - 1)]
    }
}

/// When a policy in the chain hands over to the next one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SwitchCriterion {
    /// A step counts as quiet when `|reward| < eps_conv`.
    pub eps_conv: f64,
    /// Quiet steps in a row that mark convergence.
    pub k_consecutive: usize,
}

impl Default for SwitchCriterion {
    fn default() -> Self {
        Self {
            eps_conv: 1e-4,
            k_consecutive: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiscoveryConfig {
    pub schedule: DiscountSchedule,
    /// Training horizon (and evaluation step cap) per chain position.
    /// Positions past the end reuse the last entry.
    pub horizons: Vec<usize>,
    pub max_chain: usize,
    /// Start states drawn for the base run.
    pub sigma_size: usize,
    /// Fresh start states per chain evaluation.
    pub eval_episodes: usize,
    pub switch: SwitchCriterion,
    /// End the loop as soon as a verdict is valid.
    pub stop_on_valid: bool,
    /// During evaluation, an auxiliary phase stops before the first step
    /// whose reward would be negative.
    pub aux_guard: bool,
}

impl Default for DiscoveryConfig {
    fn default() -> Self {
        Self {
            schedule: DiscountSchedule::default(),
            horizons: vec![400, 64],
            max_chain: 2,
            sigma_size: 32,
            eval_episodes: 20,
            switch: SwitchCriterion::default(),
            stop_on_valid: true,
            aux_guard: true,
        }
    }
}

impl DiscoveryConfig {
    pub fn validate(&self) -> Result<(), DiscoveryError> {
        self.schedule.validate()?;
        let bad = |m: &str| Err(DiscoveryError::InvalidConfig(m.into()));
        if self.horizons.is_empty() || self.horizons.contains(&0) {
            return bad("horizons must be nonempty and positive");
        }
        if self.max_chain == 0 || self.sigma_size == 0 {
            return bad("max_chain and sigma_size must be positive");
        }
        if !(self.switch.eps_conv >= 0.0) || self.switch.k_consecutive == 0 {
            return bad("switch criterion needs eps_conv >= 0 and k_consecutive > 0");
        }
        Ok(())
    }

    pub fn horizon(&self, t: usize) -> usize {
        self.horizons[t.min(self.horizons.len() - 1)]
    }
}

/// Trained policies in the order they run, with the switch rule and the
/// per-policy step caps.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyChain {
    pub policies: Vec<GaussianPolicy>,
    pub switch: SwitchCriterion,
    pub horizons: Vec<usize>,
}

impl PolicyChain {
    pub fn len(&self) -> usize {
        self.policies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.policies.is_empty()
    }
}

/// Initial-state distribution used for training and evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StartSpec {
    pub kind: InitialKind,
    pub epsilon: f64,
}

impl StartSpec {
    pub fn draw<R: Rng + ?Sized>(&self, env: &SwarmEnv, count: usize, rng: &mut R) -> Result<Vec<SwarmState>, EnvError> {
        (0..count)
            .map(|_| sample_initial_state(self.kind, self.epsilon, &env.cfg, rng))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureReason {
    /// Every evaluation of the latest policy ended in a collision.
    SigmaExhausted,
    /// The chain reached its maximum length without a valid verdict.
    ChainCapReached,
}

impl std::fmt::Display for FailureReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FailureReason::SigmaExhausted => "no valid pattern formation trajectory was discovered",
            FailureReason::ChainCapReached => "chain reached its maximum length without a valid pattern",
        })
    }
}

/// One training run of the discovery loop.
#[derive(Debug, Clone, PartialEq)]
pub struct StageReport {
    pub gamma: f64,
    pub horizon: usize,
    pub sigma_in: usize,
    pub sigma_star: usize,
    pub metrics: Vec<EpochMetrics>,
}

#[derive(Debug, Clone)]
pub struct Discovery {
    pub chain: PolicyChain,
    /// Verdict of the last evaluation.
    pub verdict: PatternVerdict,
    pub stages: Vec<StageReport>,
    /// `None` when the last verdict is valid.
    pub failure: Option<FailureReason>,
}

impl Discovery {
    pub fn succeeded(&self) -> bool {
        self.failure.is_none()
    }
}

/// Trains and evaluates policies until a valid pattern is found, every
/// evaluation collides, or the chain is full. Randomness comes from the
/// `InitialStates`, `Training(t)` and `Evaluation(t)` streams of `root`.
pub fn run_discovery(
    env: &SwarmEnv,
    start: StartSpec,
    goal: GoalSpec,
    hp: &HyperParams,
    dcfg: &DiscoveryConfig,
    root: SeedRoot,
    mut on_epoch: impl FnMut(usize, &EpochMetrics),
) -> Result<Discovery, DiscoveryError> {
    dcfg.validate()?;
    let mut sigma = start.draw(env, dcfg.sigma_size, &mut root.rng(Stream::InitialStates))?;
    let mut chain = PolicyChain {
        policies: Vec::new(),
        switch: dcfg.switch,
        horizons: Vec::new(),
    };
    let mut stages = Vec::new();
    loop {
        let t = chain.len();
        let stage_hp = HyperParams {
            gamma: dcfg.schedule.get(t),
            horizon: dcfg.horizon(t),
            ..hp.clone()
        };
        log::info!("training policy {t} on {} start states (gamma {})", sigma.len(), stage_hp.gamma);
        let out = train_policy_with(&sigma, &stage_hp, env, &mut root.rng(Stream::Training(t as u32)), |m| {
            on_epoch(t, m)
        })?;
        stages.push(StageReport {
            gamma: stage_hp.gamma,
            horizon: stage_hp.horizon,
            sigma_in: sigma.len(),
            sigma_star: out.sigma_star.len(),
            metrics: out.metrics,
        });
        chain.policies.push(out.policy);
        chain.horizons.push(stage_hp.horizon);
        sigma = out.sigma_star;

        let starts = start.draw(env, dcfg.eval_episodes, &mut root.rng(Stream::Evaluation(t as u32)))?;
        let trajectories = evaluate_chain(&chain, env, &starts, dcfg.aux_guard)?;
        let verdict = validate_patterns(trajectories, env, &goal);
        log::info!(
            "chain of length {} evaluated: {}/{} episodes valid",
            chain.len(),
            verdict.episodes.iter().filter(|e| e.collision_free && e.goal).count(),
            verdict.episodes.len()
        );

        let failure = if verdict.valid {
            None
        } else if sigma.is_empty() {
            Some(FailureReason::SigmaExhausted)
        } else if chain.len() >= dcfg.max_chain {
            Some(FailureReason::ChainCapReached)
        } else {
            None
        };
        let finished = (verdict.valid && dcfg.stop_on_valid)
            || failure.is_some()
            || chain.len() >= dcfg.max_chain
            || sigma.is_empty();
        if finished {
            return Ok(Discovery {
                chain,
                verdict,
                stages,
                failure,
            });
        }
    }
}
