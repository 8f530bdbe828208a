use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{clipped_objective, collect_rollouts, run_deterministic, value_loss, HyperParams, PpoError};
use crate::env::{StepStatus, SwarmEnv, SwarmState};
use crate::nn::{AdamState, Direction, GaussianPolicy, PolicyOptimizer, ValueNet};

/// One row of the training metrics stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub mean_return: f64,
    pub mean_length: f64,
    pub objective: f64,
    pub value_loss: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub policy: GaussianPolicy,
    pub value: ValueNet,
    pub policy_optimizer: PolicyOptimizer,
    pub value_optimizer: AdamState,
    /// Final states of evaluation episodes that did not end in a collision.
    pub sigma_star: Vec<SwarmState>,
    pub metrics: Vec<EpochMetrics>,
}

/// Linear ramp of the clipping range from `eps_c_start` (first epoch) to
/// `eps_c_end` (last epoch).
pub fn eps_c_schedule(hp: &HyperParams, epoch: usize) -> f64 {
    if hp.epochs <= 1 {
        return hp.eps_c_start;
    }
    let frac = epoch.min(hp.epochs - 1) as f64 / (hp.epochs - 1) as f64;
    hp.eps_c_start + frac * (hp.eps_c_end - hp.eps_c_start)
}

fn split_minibatches(indices: &[usize], count: usize) -> Vec<&[usize]> {
    let count = count.clamp(1, indices.len().max(1));
    let base = indices.len() / count;
    let extra = indices.len() % count;
    let mut out = Vec::with_capacity(count);
    let mut start = 0;
    for k in 0..count {
        let len = base + usize::from(k < extra);
        out.push(&indices[start..start + len]);
        start += len;
    }
    out
}

/// Clipped-PPO training from the start states `sigma`, followed by a
/// deterministic evaluation from every start state. Final states of
/// evaluation episodes that did not fail are returned as `sigma_star`.
pub fn train_policy<R: Rng + ?Sized>(
    sigma: &[SwarmState],
    hp: &HyperParams,
    env: &SwarmEnv,
    rng: &mut R,
) -> Result<TrainOutput, PpoError> {
    train_policy_with(sigma, hp, env, rng, |_| {})
}

/// [`train_policy`] with a callback invoked after every epoch.
pub fn train_policy_with<R: Rng + ?Sized, F: FnMut(&EpochMetrics)>(
    sigma: &[SwarmState],
    hp: &HyperParams,
    env: &SwarmEnv,
    rng: &mut R,
    mut on_epoch: F,
) -> Result<TrainOutput, PpoError> {
    if sigma.is_empty() {
        return Err(PpoError::EmptyInitialSet);
    }
    hp.validate()?;
    let env = env.with_horizon(hp.horizon);
    let cfg = &env.cfg;
    let dim = cfg.action_dim();

    let mut init_rng = ChaCha8Rng::seed_from_u64(rng.next_u64());
    let initial_log_std = (0.5 * (cfg.v_max - cfg.v_min) / 2.0).ln();
    let mut policy = GaussianPolicy::init(&hp.layer_dims(dim, dim), initial_log_std, &mut init_rng)?;
    let last = policy.mean_net.num_layers() - 1;
    for w in policy.mean_net.weights_mut(last) {
        *w *= hp.output_init_scale;
    }
    let mut value = ValueNet::init(&hp.layer_dims(dim, 1), &mut init_rng)?;
    let mut policy_opt = PolicyOptimizer::new(&policy);
    let mut value_opt = AdamState::new(value.net.num_params());
    let mut metrics = Vec::with_capacity(hp.epochs);

    for epoch in 0..hp.epochs {
        let eps_c = eps_c_schedule(hp, epoch);
        let mut batch = collect_rollouts(&env, &policy, hp, sigma, rng)?;
        batch.compute_targets(&value, hp)?;
        let samples = batch.samples();

        let mut order: Vec<usize> = (0..samples.len()).collect();
        let mut objective_sum = 0.0;
        let mut value_loss_sum = 0.0;
        let mut updates = 0usize;
        for _ in 0..hp.update_epochs {
            order.shuffle(rng);
            for idx in split_minibatches(&order, hp.minibatches) {
                if idx.is_empty() {
                    continue;
                }
                let mb = samples.subset(idx);
                let (objective, policy_grads) = clipped_objective(&mb, &policy, eps_c)?;
                let (loss, value_grads) = value_loss(&mb, &value)?;
                if !objective.is_finite() {
                    return Err(PpoError::NonFiniteLoss { epoch, what: "clipped objective" });
                }
                if !loss.is_finite() {
                    return Err(PpoError::NonFiniteLoss { epoch, what: "value loss" });
                }
                policy_opt.ascend(&mut policy, &policy_grads, hp.alpha)?;
                crate::nn::adam_update(value.net.params_mut(), &value_grads, &mut value_opt, hp.beta, Direction::Descent)?;
                objective_sum += objective;
                value_loss_sum += loss;
                updates += 1;
            }
        }
        if !policy.is_finite() || !value.net.is_finite() {
            return Err(PpoError::NonFiniteLoss { epoch, what: "network parameters" });
        }
        let row = EpochMetrics {
            epoch,
            mean_return: batch.mean_return(),
            mean_length: batch.mean_length(),
            objective: objective_sum / updates.max(1) as f64,
            value_loss: value_loss_sum / updates.max(1) as f64,
        };
        log::debug!(
            "epoch {:>4}  return {:+.4}  length {:>6.1}  objective {:+.4}  value loss {:.3e}",
            row.epoch,
            row.mean_return,
            row.mean_length,
            row.objective,
            row.value_loss
        );
        on_epoch(&row);
        metrics.push(row);
    }

    let sigma_star = harvest(&env, &policy, sigma)?;
    Ok(TrainOutput {
        policy,
        value,
        policy_optimizer: policy_opt,
        value_optimizer: value_opt,
        sigma_star,
        metrics,
    })
}

/// Deterministic evaluation from each start state; keeps non-failing finals.
fn harvest(env: &SwarmEnv, policy: &GaussianPolicy, sigma: &[SwarmState]) -> Result<Vec<SwarmState>, PpoError> {
    let mut out = Vec::new();
    for start in sigma {
        let run = run_deterministic(env, policy, start)?;
        if run.status != StepStatus::FailureTerminal {
            out.push(run.final_state.restarted());
        }
    }
    Ok(out)
}
