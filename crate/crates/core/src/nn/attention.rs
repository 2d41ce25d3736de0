use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::Tensors;
use crate::error::{shape, Result};
use crate::math::{axpy, dot, softmax_into, Matrix};

/// Scores each time step with `W_a · Z[t] + b_a` and takes a softmax over time.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionParams {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl AttentionParams {
    pub fn zeros(width: usize) -> Self {
        AttentionParams { weights: vec![0.0; width], bias: 0.0 }
    }

    pub fn width(&self) -> usize {
        self.weights.len()
    }
}

impl Tensors for AttentionParams {
    fn tensors(&self) -> Vec<&[f64]> {
        vec![&self.weights, core::slice::from_ref(&self.bias)]
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        vec![&mut self.weights, core::slice::from_mut(&mut self.bias)]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionCache {
    /// Concatenated features, `T × M`.
    pub z: Matrix,
    /// Raw scores `W_a · Z[t] + b_a`.
    pub scores: Vec<f64>,
    /// Attention weights over time; non-negative and summing to one.
    pub alpha: Vec<f64>,
}

/// Returns the context vector `c = Σ_t α_t Z[t]`.
pub fn attention_forward(params: &AttentionParams, z: &Matrix) -> Result<(Vec<f64>, AttentionCache)> {
    let m = params.width();
    if z.cols() != m {
        return Err(shape(format!("attention input Z has width {}, W_a has length {m}", z.cols())));
    }
    if z.rows() == 0 {
        return Err(shape("attention input Z has no time steps"));
    }
    let logits: Vec<f64> = z.iter_rows().map(|row| dot(&params.weights, row)).collect();
    // b_a shifts every score equally and cancels in the softmax; leaving it out
    // of the softmax argument keeps α bitwise independent of it.
    let mut alpha = vec![0.0; logits.len()];
    softmax_into(&logits, &mut alpha);
    let mut context = vec![0.0; m];
    for (a, row) in alpha.iter().zip(z.iter_rows()) {
        axpy(*a, row, &mut context);
    }
    debug_assert_attention_contract(z, &alpha, &context);
    let scores = logits.iter().map(|s| s + params.bias).collect();
    Ok((context, AttentionCache { z: z.clone(), scores, alpha }))
}

/// Probability-vector and convex-hull checks run on every forward call in debug builds.
#[inline]
fn debug_assert_attention_contract(z: &Matrix, alpha: &[f64], context: &[f64]) {
    if cfg!(debug_assertions) {
        let sum: f64 = alpha.iter().sum();
        debug_assert!(alpha.iter().all(|&a| a >= 0.0), "negative attention weight");
        debug_assert!((sum - 1.0).abs() < 1e-9, "attention weights sum to {sum}");
        for (j, &c) in context.iter().enumerate() {
            let (lo, hi) = z.iter_rows().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r[j]), hi.max(r[j])));
            let slack = 1e-12 * lo.abs().max(hi.abs()).max(1.0);
            debug_assert!(c >= lo - slack && c <= hi + slack, "context channel {j} = {c} outside [{lo}, {hi}]");
        }
    }
}

/// Reverse mode for `L = ⟨upstream, c⟩`, including the softmax Jacobian.
///
/// Returns parameter gradients and `∂L/∂Z`.
pub fn attention_backward(params: &AttentionParams, cache: &AttentionCache, upstream: &[f64]) -> Result<(AttentionParams, Matrix)> {
    let m = params.width();
    if cache.z.cols() != m || cache.alpha.len() != cache.z.rows() {
        return Err(shape(format!(
            "attention cache is {}×{} with {} weights, W_a has length {m}",
            cache.z.rows(),
            cache.z.cols(),
            cache.alpha.len()
        )));
    }
    if upstream.len() != m {
        return Err(shape(format!("attention upstream has length {}, expected {m}", upstream.len())));
    }
    // q_t = ∂L/∂α_t, then ∂L/∂s_t = α_t (q_t − Σ_j α_j q_j).
    let q: Vec<f64> = cache.z.iter_rows().map(|row| dot(upstream, row)).collect();
    let mean_q: f64 = cache.alpha.iter().zip(&q).map(|(a, q)| a * q).sum();
    let mut grads = AttentionParams::zeros(m);
    let mut z_grads = Matrix::zeros(cache.z.rows(), m);
    for (t, row) in cache.z.iter_rows().enumerate() {
        let alpha = cache.alpha[t];
        let ds = alpha * (q[t] - mean_q);
        axpy(ds, row, &mut grads.weights);
        grads.bias += ds;
        let zg = z_grads.row_mut(t);
        axpy(alpha, upstream, zg);
        axpy(ds, &params.weights, zg);
    }
    Ok((grads, z_grads))
}
