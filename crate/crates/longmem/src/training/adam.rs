//! Adam with bias correction, operating on flat parameter vectors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::networks::{CellParams, Gradients};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl AdamState {
    pub fn new(num_params: usize) -> AdamState {
        AdamState {
            lr: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: vec![0.0; num_params],
            v: vec![0.0; num_params],
        }
    }

    pub fn with_lr(num_params: usize, lr: f64) -> AdamState {
        AdamState { lr, ..AdamState::new(num_params) }
    }
}

/// One Adam update on a flat parameter vector.
pub fn adam_step_flat(state: &mut AdamState, params: &mut [f64], grads: &[f64]) -> Result<()> {
    if params.len() != state.m.len() || grads.len() != state.m.len() {
        return Err(Error::Shape(format!(
            "adam state tracks {} parameters, got {} params / {} grads",
            state.m.len(),
            params.len(),
            grads.len()
        )));
    }
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - state.beta1.powi(t);
    let bc2 = 1.0 - state.beta2.powi(t);
    for j in 0..params.len() {
        let g = grads[j];
        state.m[j] = state.beta1 * state.m[j] + (1.0 - state.beta1) * g;
        state.v[j] = state.beta2 * state.v[j] + (1.0 - state.beta2) * g * g;
        let m_hat = state.m[j] / bc1;
        let v_hat = state.v[j] / bc2;
        params[j] -= state.lr * m_hat / (v_hat.sqrt() + state.eps);
    }
    Ok(())
}

/// One Adam update on cell parameters; the state must have been created with
/// the cell's parameter count.
pub fn adam_step(state: &mut AdamState, params: &mut CellParams, grads: &Gradients) -> Result<()> {
    if grads.kind != params.kind || grads.dims != params.dims {
        return Err(Error::Shape("gradients do not match the parameters".into()));
    }
    let mut flat = params.flatten();
    let gflat = grads.flatten();
    adam_step_flat(state, &mut flat, &gflat)?;
    params.assign_from_flat(&flat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::networks::{init_params, CellKind, Dims};

    #[test]
    fn zero_gradients_leave_params_unchanged() {
        let params = init_params(CellKind::Rnn, Dims::univariate(3), 0, 1).unwrap();
        let mut updated = params.clone();
        let grads = params.zeros_like();
        let mut state = AdamState::new(params.num_params());
        adam_step(&mut state, &mut updated, &grads).unwrap();
        assert_eq!(params, updated);
    }

    #[test]
    fn first_step_size_is_close_to_lr() {
        // With bias correction the first update is lr * g/(|g| + eps').
        let mut params = vec![1.0, -2.0, 0.5];
        let grads = vec![3.0, -0.7, 100.0];
        let mut state = AdamState::new(3);
        adam_step_flat(&mut state, &mut params, &grads).unwrap();
        let expect = [1.0 - 0.01, -2.0 + 0.01, 0.5 - 0.01];
        for (p, e) in params.iter().zip(expect) {
            assert!((p - e).abs() < 1e-3 * 0.01, "{p} vs {e}");
        }
    }

    #[test]
    fn scalar_quadratic_converges() {
        // Minimize x^2 from x = 5.
        let mut x = vec![5.0];
        let mut state = AdamState::new(1);
        for _ in 0..2000 {
            let g = vec![2.0 * x[0]];
            adam_step_flat(&mut state, &mut x, &g).unwrap();
        }
        assert!(x[0].abs() < 0.01, "x = {}", x[0]);
    }

    #[test]
    fn gradient_scaling_preserves_first_direction() {
        let grads = vec![0.3, -1.7, 0.002, -40.0];
        let mut a = vec![0.0; 4];
        let mut b = vec![0.0; 4];
        let mut sa = AdamState::new(4);
        let mut sb = AdamState::new(4);
        adam_step_flat(&mut sa, &mut a, &grads).unwrap();
        let scaled: Vec<f64> = grads.iter().map(|g| g * 1000.0).collect();
        adam_step_flat(&mut sb, &mut b, &scaled).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.signum(), y.signum());
            assert!((x - y).abs() < 1e-4 * x.abs().max(1e-12), "{x} vs {y}");
        }
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let mut state = AdamState::new(2);
        assert!(adam_step_flat(&mut state, &mut [0.0; 3], &[0.0; 3]).is_err());
    }
}
