//! Clipped PPO for the swarm MDP: rollout collection, advantage estimation,
//! the clipped surrogate objective, and the training loop that also harvests
//! non-failing final states for the next discovery stage.

mod advantage;
mod objective;
mod rollout;
mod train;

pub use advantage::{gae, normalize, rewards_to_go};
pub use objective::{clipped_objective, clipped_term, clipped_term_slope, value_loss, Samples};
pub use rollout::{collect_rollouts, run_deterministic, DeterministicRun, RolloutBatch, Trajectory, Transition};
pub use train::{eps_c_schedule, train_policy, train_policy_with, EpochMetrics, TrainOutput};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::EnvError;
use crate::nn::NnError;

#[derive(Debug, Error)]
pub enum PpoError {
    #[error("the set of initial states is empty")]
    EmptyInitialSet,
    #[error("training diverged at epoch {epoch}: {what} is not finite")]
    NonFiniteLoss { epoch: usize, what: &'static str },
    #[error("invalid hyper-parameters: {0}")]
    InvalidHyperParams(String),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Nn(#[from] NnError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HyperParams {
    pub gamma: f64,
    pub lambda: f64,
    pub eps_c_start: f64,
    pub eps_c_end: f64,
    /// Policy learning rate.
    pub alpha: f64,
    /// Value learning rate.
    pub beta: f64,
    /// Number of learning epochs.
    pub epochs: usize,
    pub horizon: usize,
    pub episodes_per_batch: usize,
    pub update_epochs: usize,
    pub minibatches: usize,
    /// Discount rewards-to-go with `gamma` and bootstrap truncated episodes.
    /// When false the plain undiscounted suffix sum is used.
    pub discounted_returns: bool,
    pub hidden: Vec<usize>,
    /// Multiplier on the Glorot-initialized output weights of the policy
    /// mean network. Small values start training from near-zero velocities.
    pub output_init_scale: f64,
}

impl Default for HyperParams {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            lambda: 0.95,
            eps_c_start: 0.1,
            eps_c_end: 0.3,
            alpha: 3e-4,
            beta: 1e-3,
            epochs: 600,
            horizon: 400,
            episodes_per_batch: 16,
            update_epochs: 8,
            minibatches: 4,
            discounted_returns: true,
            hidden: vec![64, 64],
            output_init_scale: 0.01,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<(), PpoError> {
        let bad = |m: &str| Err(PpoError::InvalidHyperParams(m.to_string()));
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad("gamma must lie in (0, 1]");
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return bad("lambda must lie in [0, 1]");
        }
        for eps in [self.eps_c_start, self.eps_c_end] {
            if !(eps > 0.0 && eps < 1.0) {
                return bad("clipping range must lie in (0, 1)");
            }
        }
        if !(self.alpha > 0.0 && self.beta > 0.0) {
            return bad("learning rates must be positive");
        }
        if self.horizon == 0 || self.episodes_per_batch == 0 || self.update_epochs == 0 || self.minibatches == 0 {
            return bad("horizon, episodes_per_batch, update_epochs and minibatches must be positive");
        }
        if !(self.output_init_scale.is_finite() && self.output_init_scale >= 0.0) {
            return bad("output_init_scale must be finite and nonnegative");
        }
        if self.hidden.contains(&0) {
            return bad("hidden layer widths must be positive");
        }
        Ok(())
    }

    /// Layer widths for a network mapping `input` features to `output`.
    pub fn layer_dims(&self, input: usize, output: usize) -> Vec<usize> {
        let mut dims = Vec::with_capacity(self.hidden.len() + 2);
        dims.push(input);
        dims.extend_from_slice(&self.hidden);
        dims.push(output);
        dims
    }
}
