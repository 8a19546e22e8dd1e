use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::network::{GradientSet, NetworkParams};
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::math;

/// Bias-corrected Adam moments for one parameter set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub first_moment: Vec<Tensor>,
    pub second_moment: Vec<Tensor>,
    pub step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub learning_rate: f64,
}

impl AdamState {
    pub const LEARNING_RATE: f64 = 0.001;
    pub const BETA1: f64 = 0.9;
    pub const BETA2: f64 = 0.999;
    pub const EPSILON: f64 = 1e-8;

    pub fn new(params: &NetworkParams, learning_rate: f64) -> Self {
        let zeros: Vec<Tensor> = params.tensors().iter().map(Tensor::zeros_like).collect();
        Self {
            first_moment: zeros.clone(),
            second_moment: zeros,
            step: 0,
            beta1: Self::BETA1,
            beta2: Self::BETA2,
            epsilon: Self::EPSILON,
            learning_rate,
        }
    }
}

/// One Adam update of `params` in place; increments the step counter.
pub fn adam_step(params: &mut NetworkParams, grads: &GradientSet, state: &mut AdamState) -> Result<()> {
    let n = params.tensors().len();
    if grads.tensors().len() != n || state.first_moment.len() != n || state.second_moment.len() != n {
        return Err(Error::Shape { expected: n, got: grads.tensors().len() });
    }
    state.step += 1;
    let t = state.step as f64;
    let c1 = 1.0 - libm::pow(state.beta1, t);
    let c2 = 1.0 - libm::pow(state.beta2, t);
    let (b1, b2, eps, lr) = (state.beta1, state.beta2, state.epsilon, state.learning_rate);
    for (((p, g), m), v) in params
        .tensors_mut()
        .iter_mut()
        .zip(grads.tensors())
        .zip(state.first_moment.iter_mut())
        .zip(state.second_moment.iter_mut())
    {
        if p.len() != g.len() || p.len() != m.len() || p.len() != v.len() {
            return Err(Error::Shape { expected: p.len(), got: g.len() });
        }
        for (((pv, gv), mv), vv) in p.data_mut().iter_mut().zip(g.data()).zip(m.data_mut()).zip(v.data_mut()) {
            *mv = b1 * *mv + (1.0 - b1) * gv;
            *vv = b2 * *vv + (1.0 - b2) * gv * gv;
            let m_hat = *mv / c1;
            let v_hat = *vv / c2;
            *pv -= lr * m_hat / (math::sqrt(v_hat) + eps);
        }
    }
    Ok(())
}
