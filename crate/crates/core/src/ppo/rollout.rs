use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{gae, normalize, rewards_to_go, HyperParams, PpoError, Samples};
use crate::env::{StepStatus, SwarmEnv, SwarmState};
use crate::nn::{GaussianPolicy, ValueNet};

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub obs: Vec<f64>,
    /// Sampled action before the environment clamps it.
    pub action: Vec<f64>,
    pub log_prob_old: f64,
    pub reward: f64,
    pub next_obs: Vec<f64>,
    pub status: StepStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub transitions: Vec<Transition>,
    pub final_state: SwarmState,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn status(&self) -> StepStatus {
        self.transitions.last().map_or(StepStatus::Running, |t| t.status)
    }

    pub fn rewards(&self) -> Vec<f64> {
        self.transitions.iter().map(|t| t.reward).collect()
    }

    pub fn episode_return(&self) -> f64 {
        self.transitions.iter().map(|t| t.reward).sum()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RolloutBatch {
    pub trajectories: Vec<Trajectory>,
    /// Per-step advantages, trajectories concatenated in order.
    pub advantages: Vec<f64>,
    pub rewards_to_go: Vec<f64>,
    pub advantages_normalized: bool,
}

impl RolloutBatch {
    pub fn num_steps(&self) -> usize {
        self.trajectories.iter().map(Trajectory::len).sum()
    }

    /// Fills advantages (GAE) and rewards-to-go. Failure-terminated episodes
    /// have zero terminal value; others bootstrap from `V(S_T)`.
    pub fn compute_targets(&mut self, value: &ValueNet, hp: &HyperParams) -> Result<(), PpoError> {
        self.advantages.clear();
        self.rewards_to_go.clear();
        for traj in &self.trajectories {
            let rewards = traj.rewards();
            let mut values = traj
                .transitions
                .iter()
                .map(|t| value.value(&t.obs))
                .collect::<Result<Vec<_>, _>>()?;
            let last = traj.transitions.last().expect("trajectories are never empty");
            let terminal_value = match last.status {
                StepStatus::FailureTerminal => 0.0,
                _ => value.value(&last.next_obs)?,
            };
            values.push(terminal_value);
            self.advantages.extend(gae(&rewards, &values, hp.gamma, hp.lambda));
            if hp.discounted_returns {
                self.rewards_to_go.extend(rewards_to_go(&rewards, hp.gamma, terminal_value));
            } else {
                self.rewards_to_go.extend(rewards_to_go(&rewards, 1.0, 0.0));
            }
        }
        self.advantages_normalized = normalize(&mut self.advantages);
        Ok(())
    }

    pub fn samples(&self) -> Samples {
        let mut s = Samples::default();
        for t in self.trajectories.iter().flat_map(|tr| &tr.transitions) {
            s.obs.push(t.obs.clone());
            s.actions.push(t.action.clone());
            s.log_prob_old.push(t.log_prob_old);
        }
        s.advantages = self.advantages.clone();
        s.returns = self.rewards_to_go.clone();
        s
    }

    pub fn mean_return(&self) -> f64 {
        mean(self.trajectories.iter().map(Trajectory::episode_return))
    }

    pub fn mean_length(&self) -> f64 {
        mean(self.trajectories.iter().map(|t| t.len() as f64))
    }
}

fn mean(values: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = values.len();
    if n == 0 {
        return 0.0;
    }
    values.sum::<f64>() / n as f64
}

fn run_episode(
    env: &SwarmEnv,
    policy: &GaussianPolicy,
    start: &SwarmState,
    seed: u64,
) -> Result<Trajectory, PpoError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = start.restarted();
    let mut signal = env.signal(&state);
    let mut obs = env.observation(&state);
    let mut transitions = Vec::new();
    loop {
        let (action, log_prob_old) = policy.sample(&obs, &mut rng)?;
        let out = env.step_from(&state, signal, &action)?;
        let next_obs = env.observation(&out.next_state);
        transitions.push(Transition {
            obs,
            action,
            log_prob_old,
            reward: out.reward,
            next_obs: next_obs.clone(),
            status: out.status,
        });
        state = out.next_state;
        signal = out.signal;
        obs = next_obs;
        if out.status.is_done() {
            break;
        }
    }
    Ok(Trajectory {
        transitions,
        final_state: state,
    })
}

/// Runs `hp.episodes_per_batch` stochastic episodes, each from a start state
/// drawn uniformly from `sigma`. Episodes run in parallel on private RNG
/// streams whose seeds are drawn from `rng` in episode order.
pub fn collect_rollouts<R: Rng + ?Sized>(
    env: &SwarmEnv,
    policy: &GaussianPolicy,
    hp: &HyperParams,
    sigma: &[SwarmState],
    rng: &mut R,
) -> Result<RolloutBatch, PpoError> {
    if sigma.is_empty() {
        return Err(PpoError::EmptyInitialSet);
    }
    let env = env.with_horizon(hp.horizon);
    let plans: Vec<(usize, u64)> = (0..hp.episodes_per_batch)
        .map(|_| (rng.random_range(0..sigma.len()), rng.next_u64()))
        .collect();
    let trajectories = plans
        .par_iter()
        .map(|&(start, seed)| run_episode(&env, policy, &sigma[start], seed))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(RolloutBatch {
        trajectories,
        ..RolloutBatch::default()
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeterministicRun {
    pub final_state: SwarmState,
    pub status: StepStatus,
    pub steps: usize,
}

/// Follows the mean action from `start` until failure or the env horizon.
pub fn run_deterministic(env: &SwarmEnv, policy: &GaussianPolicy, start: &SwarmState) -> Result<DeterministicRun, PpoError> {
    let mut state = start.restarted();
    let mut signal = env.signal(&state);
    let mut steps = 0;
    loop {
        let action = policy.mean(&env.observation(&state))?;
        let out = env.step_from(&state, signal, &action)?;
        steps += 1;
        state = out.next_state;
        signal = out.signal;
        if out.status.is_done() {
            return Ok(DeterministicRun {
                final_state: state,
                status: out.status,
                steps,
            });
        }
    }
}
