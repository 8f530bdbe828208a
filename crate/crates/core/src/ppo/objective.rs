use rayon::prelude::*;

use crate::nn::{GaussianPolicy, NnError, PolicyGrads, ValueNet};

/// Samples per parallel gradient chunk. Fixed so the summation order, and
/// therefore the result, does not depend on the thread count.
const GRAD_CHUNK: usize = 128;

/// Flattened per-step training data.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Samples {
    pub obs: Vec<Vec<f64>>,
    pub actions: Vec<Vec<f64>>,
    pub log_prob_old: Vec<f64>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl Samples {
    pub fn len(&self) -> usize {
        self.obs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.obs.is_empty()
    }

    pub fn subset(&self, idx: &[usize]) -> Samples {
        Samples {
            obs: idx.iter().map(|&i| self.obs[i].clone()).collect(),
            actions: idx.iter().map(|&i| self.actions[i].clone()).collect(),
            log_prob_old: idx.iter().map(|&i| self.log_prob_old[i]).collect(),
            advantages: idx.iter().map(|&i| self.advantages[i]).collect(),
            returns: idx.iter().map(|&i| self.returns[i]).collect(),
        }
    }
}

/// `min(r A, clip(r, 1 - eps, 1 + eps) A)`
pub fn clipped_term(ratio: f64, advantage: f64, eps_c: f64) -> f64 {
    let clipped = ratio.clamp(1.0 - eps_c, 1.0 + eps_c);
    (ratio * advantage).min(clipped * advantage)
}

/// Derivative of [`clipped_term`] with respect to the ratio. Zero where the
/// clipped branch is active.
pub fn clipped_term_slope(ratio: f64, advantage: f64, eps_c: f64) -> f64 {
    let clipped = ratio.clamp(1.0 - eps_c, 1.0 + eps_c);
    if ratio * advantage <= clipped * advantage {
        advantage
    } else {
        0.0
    }
}

/// Mean clipped surrogate over all samples and its gradient with respect to
/// the policy parameters.
pub fn clipped_objective(samples: &Samples, policy: &GaussianPolicy, eps_c: f64) -> Result<(f64, PolicyGrads), NnError> {
    let m = samples.len();
    let mut grads = PolicyGrads::zeros_like(policy);
    if m == 0 {
        return Ok((0.0, grads));
    }
    let scale = 1.0 / m as f64;
    let indices: Vec<usize> = (0..m).collect();
    let partials = indices
        .par_chunks(GRAD_CHUNK)
        .map(|chunk| {
            let mut g = PolicyGrads::zeros_like(policy);
            let mut total = 0.0;
            for &i in chunk {
                let adv = samples.advantages[i];
                let old = samples.log_prob_old[i];
                policy.log_prob_backward_with(
                    &samples.obs[i],
                    &samples.actions[i],
                    |lp| {
                        let ratio = (lp - old).exp();
                        total += clipped_term(ratio, adv, eps_c);
                        // d term / d logp = slope * r
                        scale * clipped_term_slope(ratio, adv, eps_c) * ratio
                    },
                    &mut g,
                )?;
            }
            Ok((total, g))
        })
        .collect::<Result<Vec<_>, NnError>>()?;
    let mut total = 0.0;
    for (t, g) in &partials {
        total += t;
        grads.add_assign(g);
    }
    Ok((total * scale, grads))
}

/// Mean squared error between `V(S_t)` and the rewards-to-go, with gradient.
pub fn value_loss(samples: &Samples, value: &ValueNet) -> Result<(f64, Vec<f64>), NnError> {
    let m = samples.len();
    let n_params = value.net.num_params();
    let mut grads = vec![0.0; n_params];
    if m == 0 {
        return Ok((0.0, grads));
    }
    let scale = 1.0 / m as f64;
    let indices: Vec<usize> = (0..m).collect();
    let partials = indices
        .par_chunks(GRAD_CHUNK)
        .map(|chunk| {
            let mut g = vec![0.0; n_params];
            let mut total = 0.0;
            for &i in chunk {
                let cache = value.net.forward_cached(&samples.obs[i])?;
                let err = cache.output()[0] - samples.returns[i];
                total += err * err;
                value.net.backward(&cache, &[2.0 * err * scale], &mut g)?;
            }
            Ok((total, g))
        })
        .collect::<Result<Vec<_>, NnError>>()?;
    let mut total = 0.0;
    for (t, g) in &partials {
        total += t;
        for (a, b) in grads.iter_mut().zip(g) {
            *a += b;
        }
    }
    Ok((total * scale, grads))
}
