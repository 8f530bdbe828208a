/// Discounted suffix sums `R_t + gamma R_{t+1} + ...`, seeded with
/// `bootstrap` (the value of the state after the last reward, already
/// undiscounted) for truncated episodes.
pub fn rewards_to_go(rewards: &[f64], gamma: f64, bootstrap: f64) -> Vec<f64> {
    let mut out = vec![0.0; rewards.len()];
    let mut acc = bootstrap;
    for (o, r) in out.iter_mut().zip(rewards).rev() {
        acc = r + gamma * acc;
        *o = acc;
    }
    out
}

/// Truncated generalized advantage estimates.
///
/// `values` holds `V(S_0) .. V(S_T)`, one more entry than `rewards`; the last
/// entry must be zero for failure-terminated episodes.
pub fn gae(rewards: &[f64], values: &[f64], gamma: f64, lambda: f64) -> Vec<f64> {
    assert_eq!(values.len(), rewards.len() + 1, "need V for every state incl. the last");
    let mut out = vec![0.0; rewards.len()];
    let mut acc = 0.0;
    for t in (0..rewards.len()).rev() {
        let delta = rewards[t] + gamma * values[t + 1] - values[t];
        acc = delta + gamma * lambda * acc;
        out[t] = acc;
    }
    out
}

/// Shifts and scales to zero mean and unit (population) standard deviation.
/// Returns false and leaves the data alone for fewer than two samples or a
/// constant batch.
pub fn normalize(values: &mut [f64]) -> bool {
    if values.len() < 2 {
        return false;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    if !(std > 0.0) {
        return false;
    }
    for v in values.iter_mut() {
        *v = (*v - mean) / std;
    }
    true
}
