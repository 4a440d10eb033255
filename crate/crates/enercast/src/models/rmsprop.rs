//! RMSProp: per-parameter learning-rate adaptation from a decaying average
//! of squared gradients.

use super::ModelError;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmspropState {
    pub acc: Vec<f64>,
    pub lr: f64,
    pub rho: f64,
    pub eps: f64,
}

impl RmspropState {
    pub fn new(param_count: usize, lr: f64, rho: f64, eps: f64) -> Self {
        RmspropState {
            acc: vec![0.0; param_count],
            lr,
            rho,
            eps,
        }
    }
}

/// `acc <- rho*acc + (1-rho)*g^2; param <- param - lr*g/sqrt(acc + eps)`
pub fn rmsprop_step(
    params: &mut [f64],
    grads: &[f64],
    state: &mut RmspropState,
) -> Result<(), ModelError> {
    if params.len() != grads.len() || params.len() != state.acc.len() {
        return Err(ModelError::ShapeMismatch(format!(
            "{} params, {} grads, {} accumulators",
            params.len(),
            grads.len(),
            state.acc.len()
        )));
    }
    for ((p, &g), a) in params.iter_mut().zip(grads).zip(state.acc.iter_mut()) {
        *a = state.rho * *a + (1.0 - state.rho) * g * g;
        *p -= state.lr * g / (*a + state.eps).sqrt();
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn hand_computed_first_step() {
        let mut params = vec![1.0];
        let mut st = RmspropState::new(1, 0.001, 0.9, 1e-8);
        rmsprop_step(&mut params, &[1.0], &mut st).unwrap();
        assert_abs_diff_eq!(st.acc[0], 0.1, epsilon = 1e-15);
        // step = 0.001 / sqrt(0.1 + 1e-8) ~= 0.0031623
        assert_abs_diff_eq!(1.0 - params[0], 0.0031623, epsilon = 1e-6);
    }

    #[test]
    fn zero_gradient_leaves_params_and_decays_acc() {
        let mut params = vec![2.0, -3.0];
        let mut st = RmspropState::new(2, 0.01, 0.9, 1e-8);
        st.acc = vec![0.4, 0.8];
        rmsprop_step(&mut params, &[0.0, 0.0], &mut st).unwrap();
        assert_eq!(params, vec![2.0, -3.0]);
        assert_abs_diff_eq!(st.acc[0], 0.36, epsilon = 1e-15);
        assert_abs_diff_eq!(st.acc[1], 0.72, epsilon = 1e-15);
    }

    #[test]
    fn per_parameter_adaptivity_equalizes_steps() {
        // Two fresh parameters with gradients g and 2g take (near-)equal steps.
        let g = 0.5;
        let mut params = vec![0.0, 0.0];
        let mut st = RmspropState::new(2, 0.001, 0.9, 1e-8);
        rmsprop_step(&mut params, &[g, 2.0 * g], &mut st).unwrap();
        let expected = |grad: f64| 0.001 * grad / ((1.0 - 0.9) * grad * grad + 1e-8).sqrt();
        assert_abs_diff_eq!(-params[0], expected(g), epsilon = 1e-15);
        assert_abs_diff_eq!(-params[1], expected(2.0 * g), epsilon = 1e-15);
        assert_abs_diff_eq!(params[0], params[1], epsilon = 1e-7);
    }

    #[test]
    fn rho_zero_reduces_to_normalized_gradient() {
        let mut params = vec![0.0, 0.0];
        let mut st = RmspropState::new(2, 0.01, 0.0, 1e-16);
        rmsprop_step(&mut params, &[0.3, -7.0], &mut st).unwrap();
        assert_abs_diff_eq!(params[0], -0.01, epsilon = 1e-8);
        assert_abs_diff_eq!(params[1], 0.01, epsilon = 1e-8);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let mut params = vec![0.0];
        let mut st = RmspropState::new(2, 0.01, 0.9, 1e-8);
        assert!(rmsprop_step(&mut params, &[0.0], &mut st).is_err());
    }
}
