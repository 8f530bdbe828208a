use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{DiscoveryError, PolicyChain};
use crate::env::{GoalSpec, StepStatus, SwarmEnv, SwarmState};

/// One executed step of a chain evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainStep {
    /// Position of the acting policy in the chain.
    pub stage: usize,
    /// Mean action as produced by the policy, before clamping.
    pub action: Vec<f64>,
    pub reward: f64,
    pub state: SwarmState,
    pub collision: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeTrajectory {
    pub start: SwarmState,
    pub steps: Vec<ChainStep>,
    /// Composite signal at the start and at the end of every chain stage
    /// that ran, in stage order.
    pub stage_signals: Vec<f64>,
}

impl EpisodeTrajectory {
    pub fn final_state(&self) -> &SwarmState {
        self.steps.last().map_or(&self.start, |s| &s.state)
    }

    pub fn steps_in_stage(&self, stage: usize) -> usize {
        self.steps.iter().filter(|s| s.stage == stage).count()
    }

    pub fn steps_base(&self) -> usize {
        self.steps_in_stage(0)
    }

    pub fn steps_aux(&self) -> usize {
        self.steps.iter().filter(|s| s.stage > 0).count()
    }

    pub fn collision_free(&self) -> bool {
        !self.steps.iter().any(|s| s.collision)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeVerdict {
    pub collision_free: bool,
    pub goal: bool,
    pub steps_base: usize,
    pub steps_aux: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternVerdict {
    pub valid: bool,
    pub episodes: Vec<EpisodeVerdict>,
    #[serde(skip)]
    pub trajectories: Vec<EpisodeTrajectory>,
}

impl PatternVerdict {
    pub fn success_rate(&self) -> f64 {
        if self.episodes.is_empty() {
            return 0.0;
        }
        let ok = self.episodes.iter().filter(|e| e.collision_free && e.goal).count();
        ok as f64 / self.episodes.len() as f64
    }

    pub fn collisions(&self) -> usize {
        self.episodes.iter().filter(|e| !e.collision_free).count()
    }
}

/// Runs the chain with mean actions from every start state. Each policy acts
/// until the step reward stays below the switch threshold for the required
/// number of steps, or until its step cap, and then hands the state to the
/// next policy. A collision ends the episode.
///
/// With `aux_guard`, a policy after the first stops before committing a step
/// whose reward is negative, so later stages never lower the signal.
pub fn evaluate_chain(
    chain: &PolicyChain,
    env: &SwarmEnv,
    starts: &[SwarmState],
    aux_guard: bool,
) -> Result<Vec<EpisodeTrajectory>, DiscoveryError> {
    if chain.is_empty() {
        return Err(DiscoveryError::InvalidConfig("cannot evaluate an empty chain".into()));
    }
    starts
        .par_iter()
        .map(|s| run_chain_episode(chain, env, s, aux_guard))
        .collect()
}

fn run_chain_episode(
    chain: &PolicyChain,
    env: &SwarmEnv,
    start: &SwarmState,
    aux_guard: bool,
) -> Result<EpisodeTrajectory, DiscoveryError> {
    let env = env.with_horizon(usize::MAX);
    let mut state = start.restarted();
    let mut signal = env.signal(&state);
    let mut steps = Vec::new();
    let mut stage_signals = vec![signal];
    'stages: for (stage, policy) in chain.policies.iter().enumerate() {
        let cap = chain.horizons.get(stage).or(chain.horizons.last()).copied().unwrap_or(0);
        let mut quiet = 0;
        for _ in 0..cap {
            let action = policy.mean(&env.observation(&state)).map_err(crate::ppo::PpoError::from)?;
            let out = env.step_from(&state, signal, &action)?;
            if aux_guard && stage > 0 && out.reward < 0.0 {
                break;
            }
            let collision = out.status == StepStatus::FailureTerminal;
            quiet = if out.reward.abs() < chain.switch.eps_conv { quiet + 1 } else { 0 };
            state = out.next_state;
            signal = out.signal;
            steps.push(ChainStep {
                stage,
                action,
                reward: out.reward,
                state: state.clone(),
                collision,
            });
            if collision {
                stage_signals.push(signal);
                break 'stages;
            }
            if quiet >= chain.switch.k_consecutive {
                break;
            }
        }
        stage_signals.push(signal);
    }
    Ok(EpisodeTrajectory {
        start: start.restarted(),
        steps,
        stage_signals,
    })
}

/// Per-episode collision and goal checks; valid when every episode passes.
pub fn validate_patterns(trajectories: Vec<EpisodeTrajectory>, env: &SwarmEnv, goal: &GoalSpec) -> PatternVerdict {
    let episodes: Vec<EpisodeVerdict> = trajectories
        .iter()
        .map(|t| {
            let collision_free = t.start.collision_pairs(&env.cfg).is_empty()
                && t.steps.iter().all(|s| s.state.collision_pairs(&env.cfg).is_empty());
            EpisodeVerdict {
                collision_free,
                goal: env.goal_reached(t.final_state(), goal),
                steps_base: t.steps_base(),
                steps_aux: t.steps_aux(),
            }
        })
        .collect();
    let valid = !episodes.is_empty() && episodes.iter().all(|e| e.collision_free && e.goal);
    PatternVerdict {
        valid,
        episodes,
        trajectories,
    }
}
