use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::Tensors;
use crate::error::{shape, Result};
use crate::math::dot;

/// Linear regression head `y = W_d · c + b_d`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseParams {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl DenseParams {
    pub fn zeros(width: usize) -> Self {
        DenseParams { weights: vec![0.0; width], bias: 0.0 }
    }

    pub fn width(&self) -> usize {
        self.weights.len()
    }
}

impl Tensors for DenseParams {
    fn tensors(&self) -> Vec<&[f64]> {
        vec![&self.weights, core::slice::from_ref(&self.bias)]
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        vec![&mut self.weights, core::slice::from_mut(&mut self.bias)]
    }
}

pub fn dense_forward(params: &DenseParams, context: &[f64]) -> Result<f64> {
    if context.len() != params.width() {
        return Err(shape(format!("dense input has length {}, W_d has length {}", context.len(), params.width())));
    }
    Ok(dot(&params.weights, context) + params.bias)
}

/// Returns `(∂L/∂params, ∂L/∂c)` given `upstream = ∂L/∂y`.
pub fn dense_backward(params: &DenseParams, context: &[f64], upstream: f64) -> Result<(DenseParams, Vec<f64>)> {
    if context.len() != params.width() {
        return Err(shape(format!("dense input has length {}, W_d has length {}", context.len(), params.width())));
    }
    let grads = DenseParams { weights: context.iter().map(|c| upstream * c).collect(), bias: upstream };
    let c_grad = params.weights.iter().map(|w| upstream * w).collect();
    Ok((grads, c_grad))
}
