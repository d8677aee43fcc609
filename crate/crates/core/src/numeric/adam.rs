use crate::error::{ensure_len, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Moment estimates for one parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(len: usize, config: AdamConfig) -> Self {
        AdamState {
            config,
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }
}

/// One bias-corrected Adam step, in place.
pub fn adam_update(state: &mut AdamState, params: &mut [f64], grads: &[f64]) -> Result<()> {
    ensure_len("adam params", state.m.len(), params.len())?;
    ensure_len("adam grads", state.m.len(), grads.len())?;
    let AdamConfig {
        lr,
        beta1,
        beta2,
        eps,
    } = state.config;
    state.t += 1;
    let t = i32::try_from(state.t).unwrap_or(i32::MAX);
    let correction1 = 1.0 - beta1.powi(t);
    let correction2 = 1.0 - beta2.powi(t);
    for (((p, &g), m), v) in params
        .iter_mut()
        .zip(grads)
        .zip(state.m.iter_mut())
        .zip(state.v.iter_mut())
    {
        *m = beta1 * *m + (1.0 - beta1) * g;
        *v = beta2 * *v + (1.0 - beta2) * g * g;
        let m_hat = *m / correction1;
        let v_hat = *v / correction2;
        *p -= lr * m_hat / (v_hat.sqrt() + eps);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_is_identity() {
        let mut s = AdamState::new(3, AdamConfig::default());
        let mut p = vec![1.0, -2.0, 0.5];
        for _ in 0..5 {
            adam_update(&mut s, &mut p, &[0.0; 3]).unwrap();
        }
        assert_eq!(p, vec![1.0, -2.0, 0.5]);
        assert_eq!(s.t, 5);
    }

    #[test]
    fn first_step_is_learning_rate() {
        let mut s = AdamState::new(1, AdamConfig::default());
        let mut p = vec![0.0];
        adam_update(&mut s, &mut p, &[1.0]).unwrap();
        // m_hat = 1, v_hat = 1
        assert!((p[0] - -0.001 / (1.0 + 1e-8)).abs() < 1e-15);
    }

    #[test]
    fn quadratic_descent() {
        let cfg = AdamConfig {
            lr: 0.1,
            ..AdamConfig::default()
        };
        let mut s = AdamState::new(1, cfg);
        let mut p = vec![1.0];
        let mut trace = vec![1.0];
        for _ in 0..100 {
            let g = 2.0 * p[0];
            adam_update(&mut s, &mut p, &[g]).unwrap();
            trace.push(p[0].abs());
        }
        assert!(p[0].abs() < 0.5);
        assert!(trace[10] < trace[0]);
    }

    #[test]
    fn shape_mismatch() {
        let mut s = AdamState::new(2, AdamConfig::default());
        assert!(adam_update(&mut s, &mut [0.0; 3], &[0.0; 3]).is_err());
        assert!(adam_update(&mut s, &mut [0.0; 2], &[0.0; 1]).is_err());
        assert_eq!(s.t, 0);
    }
}
