use super::NnError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Whether an update climbs (policy objective) or descends (value loss).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Ascent,
    Descent,
}

/// First and second moment estimates plus the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
    pub config: AdamConfig,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
            config: AdamConfig::default(),
        }
    }
}

pub fn adam_update(
    params: &mut [f64],
    grads: &[f64],
    state: &mut AdamState,
    lr: f64,
    direction: Direction,
) -> Result<(), NnError> {
    if params.len() != grads.len() || state.m.len() != params.len() {
        return Err(NnError::ShapeMismatch {
            params: params.len(),
            grads: grads.len(),
        });
    }
    let AdamConfig { beta1, beta2, eps } = state.config;
    state.t += 1;
    let bc1 = 1.0 - beta1.powi(state.t as i32);
    let bc2 = 1.0 - beta2.powi(state.t as i32);
    let sign = match direction {
        Direction::Ascent => 1.0,
        Direction::Descent => -1.0,
    };
    for (((p, &g), m), v) in params.iter_mut().zip(grads).zip(&mut state.m).zip(&mut state.v) {
        *m = beta1 * *m + (1.0 - beta1) * g;
        *v = beta2 * *v + (1.0 - beta2) * g * g;
        let m_hat = *m / bc1;
        let v_hat = *v / bc2;
        *p += sign * lr * m_hat / (v_hat.sqrt() + eps);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_params() {
        let mut p = vec![1.0, -2.0];
        let mut s = AdamState::new(2);
        s.m = vec![0.5, 0.5];
        s.v = vec![0.25, 0.25];
        s.t = 3;
        adam_update(&mut p, &[0.0, 0.0], &mut s, 0.1, Direction::Descent).unwrap();
        // Stale moments still move params; with fresh moments nothing moves.
        let mut q = vec![1.0, -2.0];
        let mut fresh = AdamState::new(2);
        adam_update(&mut q, &[0.0, 0.0], &mut fresh, 0.1, Direction::Descent).unwrap();
        assert_eq!(q, vec![1.0, -2.0]);
        assert_eq!(s.m, vec![0.45, 0.45]);
    }

    #[test]
    fn first_step_is_lr_times_sign() {
        // m_hat = g, v_hat = g^2 after bias correction, so the step is
        // lr * g / (|g| + eps).
        let g = [3.0, -0.002, 0.0];
        let lr = 0.01;
        let mut p = vec![0.0; 3];
        let mut s = AdamState::new(3);
        adam_update(&mut p, &g, &mut s, lr, Direction::Descent).unwrap();
        for (pi, gi) in p.iter().zip(g) {
            let expected = -lr * gi / (gi.abs() + 1e-8);
            assert!((pi - expected).abs() < 1e-15);
        }
        let mut up = vec![0.0; 3];
        let mut s2 = AdamState::new(3);
        adam_update(&mut up, &g, &mut s2, lr, Direction::Ascent).unwrap();
        assert!((up[0] - lr).abs() < 1e-9);
    }

    #[test]
    fn deterministic() {
        let run = || {
            let mut p = vec![0.3, 0.1];
            let mut s = AdamState::new(2);
            for _ in 0..5 {
                adam_update(&mut p, &[0.2, -0.7], &mut s, 0.05, Direction::Ascent).unwrap();
            }
            (p, s)
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn shape_mismatch() {
        let mut p = vec![0.0; 2];
        let mut s = AdamState::new(2);
        assert!(adam_update(&mut p, &[1.0], &mut s, 0.1, Direction::Ascent).is_err());
    }
}
