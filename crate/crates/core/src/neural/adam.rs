use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// Bias-corrected Adam over a flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub step: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl AdamState {
    pub fn new(config: AdamConfig, num_params: usize) -> Self {
        AdamState { config, step: 0, m: vec![0.0; num_params], v: vec![0.0; num_params] }
    }
}

/// Applies one Adam step in place. Non-finite gradients abort the update
/// before anything is modified.
pub fn adam_update(state: &mut AdamState, params: &mut [f64], grads: &[f64]) -> Result<()> {
    if params.len() != state.m.len() || grads.len() != state.m.len() {
        return Err(Error::ShapeMismatch {
            what: "adam parameters/gradients".into(),
            expected: state.m.len(),
            got: if params.len() != state.m.len() { params.len() } else { grads.len() },
        });
    }
    if let Some(idx) = grads.iter().position(|g| !g.is_finite()) {
        return Err(Error::NonFinite(format!("gradient at parameter index {idx} (step {})", state.step + 1)));
    }
    state.step += 1;
    let AdamConfig { lr, beta1, beta2, eps } = state.config;
    let t = state.step as i32;
    let bc1 = 1.0 - beta1.powi(t);
    let bc2 = 1.0 - beta2.powi(t);
    for (((p, g), m), v) in params.iter_mut().zip(grads).zip(state.m.iter_mut()).zip(state.v.iter_mut()) {
        *m = beta1 * *m + (1.0 - beta1) * g;
        *v = beta2 * *v + (1.0 - beta2) * g * g;
        let m_hat = *m / bc1;
        let v_hat = *v / bc2;
        *p -= lr * m_hat / (v_hat.sqrt() + eps);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_gradient_leaves_params() {
        let mut s = AdamState::new(AdamConfig::default(), 3);
        let mut p = vec![1.0, -2.0, 3.0];
        adam_update(&mut s, &mut p, &[0.0; 3]).unwrap();
        assert_eq!(p, vec![1.0, -2.0, 3.0]);
        assert_eq!(s.step, 1);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let cfg = AdamConfig { lr: 0.1, ..AdamConfig::default() };
        let mut s = AdamState::new(cfg, 1);
        let mut p = vec![0.0];
        adam_update(&mut s, &mut p, &[1.0]).unwrap();
        // m_hat = v_hat = 1 at step one.
        assert!((p[0] + 0.1 / (1.0 + 1e-8)).abs() < 1e-15);
    }

    #[test]
    fn repeated_gradients_step_by_alpha() {
        let cfg = AdamConfig { lr: 0.01, ..AdamConfig::default() };
        let mut s = AdamState::new(cfg, 1);
        let mut p = vec![0.0];
        let mut last = 0.0;
        for _ in 0..5000 {
            let before = p[0];
            adam_update(&mut s, &mut p, &[0.37]).unwrap();
            last = before - p[0];
        }
        assert!((last - 0.01).abs() < 1e-6, "step {last}");
    }

    #[test]
    fn non_finite_gradient_is_rejected() {
        let mut s = AdamState::new(AdamConfig::default(), 2);
        let mut p = vec![1.0, 1.0];
        let err = adam_update(&mut s, &mut p, &[0.0, f64::NAN]).unwrap_err();
        assert!(err.is_numerical());
        assert_eq!(p, vec![1.0, 1.0]);
        assert_eq!(s.step, 0);
    }

    proptest! {
        #[test]
        fn first_update_is_signed_alpha(g in prop::num::f64::NORMAL.prop_filter("moderate", |g| g.abs() > 1e-3 && g.abs() < 1e6), lr in 1e-4..1.0f64) {
            let mut s = AdamState::new(AdamConfig { lr, ..AdamConfig::default() }, 1);
            let mut p = vec![0.0];
            adam_update(&mut s, &mut p, &[g]).unwrap();
            let expected = -g.signum() * lr * g.abs() / (g.abs() + 1e-8);
            prop_assert!((p[0] - expected).abs() <= 1e-12 * lr.max(1.0));
        }
    }
}
