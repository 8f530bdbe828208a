use rand::Rng;
use rand_distr::StandardNormal;

use super::{adam_update, AdamState, Direction, Mlp, NnError};

const HALF_LN_TAU: f64 = 0.918_938_533_204_672_8; // 0.5 * ln(2*pi)

/// Diagonal Gaussian policy with a state-independent standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPolicy {
    pub mean_net: Mlp,
    pub log_std: Vec<f64>,
}

/// Gradients for a [`GaussianPolicy`], laid out like its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyGrads {
    pub net: Vec<f64>,
    pub log_std: Vec<f64>,
}

impl PolicyGrads {
    pub fn zeros_like(policy: &GaussianPolicy) -> Self {
        Self {
            net: vec![0.0; policy.mean_net.num_params()],
            log_std: vec![0.0; policy.log_std.len()],
        }
    }

    pub fn add_assign(&mut self, other: &PolicyGrads) {
        for (a, b) in self.net.iter_mut().zip(&other.net) {
            *a += b;
        }
        for (a, b) in self.log_std.iter_mut().zip(&other.log_std) {
            *a += b;
        }
    }
}

impl GaussianPolicy {
    pub fn new(mean_net: Mlp, log_std: Vec<f64>) -> Result<Self, NnError> {
        if log_std.len() != mean_net.output_dim() {
            return Err(NnError::DimensionMismatch {
                expected: mean_net.output_dim(),
                got: log_std.len(),
            });
        }
        Ok(Self { mean_net, log_std })
    }

    /// Glorot-initialized mean network with a constant initial log std.
    pub fn init<R: Rng + ?Sized>(dims: &[usize], initial_log_std: f64, rng: &mut R) -> Result<Self, NnError> {
        let mean_net = Mlp::glorot(dims, rng)?;
        let log_std = vec![initial_log_std; mean_net.output_dim()];
        Self::new(mean_net, log_std)
    }

    pub fn action_dim(&self) -> usize {
        self.log_std.len()
    }

    pub fn mean(&self, obs: &[f64]) -> Result<Vec<f64>, NnError> {
        self.mean_net.forward(obs)
    }

    /// Draws `mean + std * z` and returns it with its log density.
    pub fn sample<R: Rng + ?Sized>(&self, obs: &[f64], rng: &mut R) -> Result<(Vec<f64>, f64), NnError> {
        let mean = self.mean(obs)?;
        let action: Vec<f64> = mean
            .iter()
            .zip(&self.log_std)
            .map(|(mu, ls)| {
                let z: f64 = rng.sample(StandardNormal);
                mu + ls.exp() * z
            })
            .collect();
        let lp = gaussian_log_prob(&mean, &self.log_std, &action);
        Ok((action, lp))
    }

    pub fn log_prob(&self, obs: &[f64], action: &[f64]) -> Result<f64, NnError> {
        if action.len() != self.action_dim() {
            return Err(NnError::DimensionMismatch {
                expected: self.action_dim(),
                got: action.len(),
            });
        }
        let mean = self.mean(obs)?;
        Ok(gaussian_log_prob(&mean, &self.log_std, action))
    }

    /// Returns `log pi(action | obs)` and accumulates
    /// `upstream * d log_prob / d params` into `grads`.
    pub fn log_prob_backward(
        &self,
        obs: &[f64],
        action: &[f64],
        upstream: f64,
        grads: &mut PolicyGrads,
    ) -> Result<f64, NnError> {
        self.log_prob_backward_with(obs, action, |_| upstream, grads)
    }

    /// Like [`GaussianPolicy::log_prob_backward`], with the upstream gradient
    /// computed from the log probability itself. A zero upstream skips the
    /// backward pass.
    pub fn log_prob_backward_with<F: FnOnce(f64) -> f64>(
        &self,
        obs: &[f64],
        action: &[f64],
        upstream: F,
        grads: &mut PolicyGrads,
    ) -> Result<f64, NnError> {
        if action.len() != self.action_dim() {
            return Err(NnError::DimensionMismatch {
                expected: self.action_dim(),
                got: action.len(),
            });
        }
        let cache = self.mean_net.forward_cached(obs)?;
        let mean = cache.output();
        let lp = gaussian_log_prob(mean, &self.log_std, action);
        let upstream = upstream(lp);
        if upstream == 0.0 {
            return Ok(lp);
        }
        let mut grad_mean = Vec::with_capacity(mean.len());
        for (d, ((&mu, &ls), &a)) in mean.iter().zip(&self.log_std).zip(action).enumerate() {
            let inv_var = (-2.0 * ls).exp();
            let diff = a - mu;
            grad_mean.push(upstream * diff * inv_var);
            grads.log_std[d] += upstream * (diff * diff * inv_var - 1.0);
        }
        self.mean_net.backward(&cache, &grad_mean, &mut grads.net)?;
        Ok(lp)
    }

    pub fn is_finite(&self) -> bool {
        self.mean_net.is_finite() && self.log_std.iter().all(|v| v.is_finite())
    }
}

/// `sum_d [-(a_d - mu_d)^2 / (2 sigma_d^2) - ln sigma_d - 0.5 ln(2 pi)]`
pub fn gaussian_log_prob(mean: &[f64], log_std: &[f64], action: &[f64]) -> f64 {
    mean.iter()
        .zip(log_std)
        .zip(action)
        .map(|((mu, ls), a)| {
            let z = (a - mu) * (-ls).exp();
            -0.5 * z * z - ls - HALF_LN_TAU
        })
        .sum()
}

/// Adam state for the mean network and the log std vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyOptimizer {
    pub net: AdamState,
    pub log_std: AdamState,
}

impl PolicyOptimizer {
    pub fn new(policy: &GaussianPolicy) -> Self {
        Self {
            net: AdamState::new(policy.mean_net.num_params()),
            log_std: AdamState::new(policy.log_std.len()),
        }
    }

    /// Gradient ascent step on the policy objective.
    pub fn ascend(&mut self, policy: &mut GaussianPolicy, grads: &PolicyGrads, lr: f64) -> Result<(), NnError> {
        adam_update(policy.mean_net.params_mut(), &grads.net, &mut self.net, lr, Direction::Ascent)?;
        adam_update(&mut policy.log_std, &grads.log_std, &mut self.log_std, lr, Direction::Ascent)
    }
}

/// Scalar state-value network.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueNet {
    pub net: Mlp,
}

impl ValueNet {
    pub fn new(net: Mlp) -> Result<Self, NnError> {
        if net.output_dim() != 1 {
            return Err(NnError::DimensionMismatch {
                expected: 1,
                got: net.output_dim(),
            });
        }
        Ok(Self { net })
    }

    pub fn init<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> Result<Self, NnError> {
        Self::new(Mlp::glorot(dims, rng)?)
    }

    pub fn value(&self, obs: &[f64]) -> Result<f64, NnError> {
        Ok(self.net.forward(obs)?[0])
    }

    /// Returns `V(obs)` and accumulates `upstream * dV/dparams` into `grads`.
    pub fn value_backward(&self, obs: &[f64], upstream: f64, grads: &mut [f64]) -> Result<f64, NnError> {
        let cache = self.net.forward_cached(obs)?;
        let v = cache.output()[0];
        self.net.backward(&cache, &[upstream], grads)?;
        Ok(v)
    }
}
