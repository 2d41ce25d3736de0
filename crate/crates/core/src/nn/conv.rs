use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::Tensors;
use crate::error::{shape, Result};
use crate::math::Matrix;

/// Causal 1D convolution with `F` filters over `d` channels and kernel size `K`.
///
/// `weights` is stored `F × d × K`, flattened with the tap index fastest. Tap
/// `K - 1` multiplies the newest sample of the window, tap `0` the oldest.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv1dParams {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub num_filters: usize,
    pub in_channels: usize,
    pub kernel_size: usize,
}

impl Conv1dParams {
    pub fn zeros(num_filters: usize, in_channels: usize, kernel_size: usize) -> Self {
        Conv1dParams {
            weights: vec![0.0; num_filters * in_channels * kernel_size],
            bias: vec![0.0; num_filters],
            num_filters,
            in_channels,
            kernel_size,
        }
    }

    #[inline]
    pub fn index(&self, filter: usize, channel: usize, tap: usize) -> usize {
        (filter * self.in_channels + channel) * self.kernel_size + tap
    }

    pub fn weight(&self, filter: usize, channel: usize, tap: usize) -> f64 {
        self.weights[self.index(filter, channel, tap)]
    }

    pub fn validate(&self) -> Result<()> {
        if self.kernel_size < 1 || self.num_filters < 1 || self.in_channels < 1 {
            return Err(shape(format!(
                "Conv1D dims F={}, d={}, K={} must all be ≥ 1",
                self.num_filters, self.in_channels, self.kernel_size
            )));
        }
        if self.weights.len() != self.num_filters * self.in_channels * self.kernel_size {
            return Err(shape(format!(
                "W_c has {} entries, expected {}×{}×{}",
                self.weights.len(),
                self.num_filters,
                self.in_channels,
                self.kernel_size
            )));
        }
        if self.bias.len() != self.num_filters {
            return Err(shape(format!("b_c has length {}, expected {}", self.bias.len(), self.num_filters)));
        }
        Ok(())
    }
}

impl Tensors for Conv1dParams {
    fn tensors(&self) -> Vec<&[f64]> {
        vec![&self.weights, &self.bias]
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        vec![&mut self.weights, &mut self.bias]
    }
}

/// The input left-padded with `K - 1` zero rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv1dCache {
    pub padded: Matrix,
}

/// `out[t][f] = b[f] + Σ_j Σ_c x[t - j][c] · W[f][c][K-1-j]`, with `x[<0] = 0`.
///
/// Output length equals input length.
pub fn conv1d_forward(params: &Conv1dParams, inputs: &Matrix) -> Result<(Matrix, Conv1dCache)> {
    params.validate()?;
    let (d, k, nf) = (params.in_channels, params.kernel_size, params.num_filters);
    if inputs.cols() != d {
        return Err(shape(format!("Conv1D input has width {}, expected d = {d}", inputs.cols())));
    }
    if inputs.rows() == 0 {
        return Err(shape("Conv1D input has no rows"));
    }
    let steps = inputs.rows();
    let mut padded = Matrix::zeros(steps + k - 1, d);
    for t in 0..steps {
        padded.row_mut(t + k - 1).copy_from_slice(inputs.row(t));
    }
    let mut out = Matrix::zeros(steps, nf);
    for t in 0..steps {
        // Padded rows t..t+K-1 form the window ending at input row t.
        for f in 0..nf {
            let mut acc = params.bias[f];
            for tap in 0..k {
                let row = padded.row(t + tap);
                for (c, x) in row.iter().enumerate() {
                    acc += x * params.weight(f, c, tap);
                }
            }
            out.set(t, f, acc);
        }
    }
    Ok((out, Conv1dCache { padded }))
}

/// Reverse mode of [`conv1d_forward`] for `L = Σ ⟨upstream, out⟩`.
pub fn conv1d_backward(params: &Conv1dParams, cache: &Conv1dCache, upstream: &Matrix) -> Result<(Conv1dParams, Matrix)> {
    params.validate()?;
    let (d, k, nf) = (params.in_channels, params.kernel_size, params.num_filters);
    if cache.padded.cols() != d || cache.padded.rows() < k {
        return Err(shape(format!(
            "Conv1D cache is {}×{}, incompatible with d = {d}, K = {k}",
            cache.padded.rows(),
            cache.padded.cols()
        )));
    }
    let steps = cache.padded.rows() + 1 - k;
    if upstream.rows() != steps || upstream.cols() != nf {
        return Err(shape(format!(
            "Conv1D upstream is {}×{}, expected {steps}×{nf}",
            upstream.rows(),
            upstream.cols()
        )));
    }
    let mut grads = Conv1dParams::zeros(nf, d, k);
    let mut padded_grads = Matrix::zeros(cache.padded.rows(), d);
    for t in 0..steps {
        for f in 0..nf {
            let g = upstream.get(t, f);
            grads.bias[f] += g;
            for tap in 0..k {
                let row = cache.padded.row(t + tap);
                for c in 0..d {
                    let idx = grads.index(f, c, tap);
                    grads.weights[idx] += g * row[c];
                    let cur = padded_grads.get(t + tap, c);
                    padded_grads.set(t + tap, c, cur + g * params.weights[idx]);
                }
            }
        }
    }
    // Padding rows are constants; their gradients are dropped.
    let mut input_grads = Matrix::zeros(steps, d);
    for t in 0..steps {
        input_grads.row_mut(t).copy_from_slice(padded_grads.row(t + k - 1));
    }
    Ok((grads, input_grads))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::finite_difference_check;
    use crate::rng::SplitMix64;

    fn column(xs: &[f64]) -> Matrix {
        Matrix::from_vec(xs.len(), 1, xs.to_vec()).unwrap()
    }

    #[test]
    fn identity_kernel() {
        let mut p = Conv1dParams::zeros(1, 1, 1);
        p.weights[0] = 1.0;
        let x = column(&[0.5, -1.0, 2.0]);
        let (y, cache) = conv1d_forward(&p, &x).unwrap();
        assert_eq!(y, x);
        let up = column(&[1.0, 2.0, 3.0]);
        let (_, dx) = conv1d_backward(&p, &cache, &up).unwrap();
        assert_eq!(dx, up);
    }

    #[test]
    fn bias_only() {
        let mut p = Conv1dParams::zeros(2, 3, 2);
        p.bias = vec![0.7, -0.2];
        let (y, _) = conv1d_forward(&p, &Matrix::from_vec(4, 3, (0..12).map(f64::from).collect()).unwrap()).unwrap();
        for t in 0..4 {
            assert_eq!(y.row(t), &[0.7, -0.2]);
        }
    }

    #[test]
    fn two_tap_sliding_window() {
        let (w1, w2) = (0.3, -1.7);
        let (x1, x2, x3) = (2.0, 0.5, -4.0);
        let mut p = Conv1dParams::zeros(1, 1, 2);
        p.weights = vec![w1, w2];
        let (y, _) = conv1d_forward(&p, &column(&[x1, x2, x3])).unwrap();
        // Explicit zero padding: windows [0, x1], [x1, x2], [x2, x3].
        let padded = [0.0, x1, x2, x3];
        let oracle: Vec<f64> = padded.windows(2).map(|w| w[0] * w1 + w[1] * w2).collect();
        assert_eq!(y.as_slice(), oracle.as_slice());
        assert_eq!(oracle, vec![w2 * x1, w1 * x1 + w2 * x2, w1 * x2 + w2 * x3]);
    }

    #[test]
    fn output_length_equals_input_length() {
        for k in 1..6 {
            for steps in 1..8 {
                let p = Conv1dParams::zeros(2, 1, k);
                let (y, _) = conv1d_forward(&p, &Matrix::zeros(steps, 1)).unwrap();
                assert_eq!(y.rows(), steps);
            }
        }
    }

    #[test]
    fn shape_errors() {
        let p = Conv1dParams::zeros(2, 3, 2);
        assert!(conv1d_forward(&p, &Matrix::zeros(4, 2)).is_err());
        assert!(conv1d_forward(&p, &Matrix::zeros(0, 3)).is_err());
        let (_, cache) = conv1d_forward(&p, &Matrix::zeros(4, 3)).unwrap();
        assert!(conv1d_backward(&p, &cache, &Matrix::zeros(4, 3)).is_err());
        let mut bad = p.clone();
        bad.weights.pop();
        assert!(conv1d_forward(&bad, &Matrix::zeros(4, 3)).is_err());
    }

    #[test]
    fn zero_upstream_and_linearity() {
        let mut rng = SplitMix64::new(1);
        let mut p = Conv1dParams::zeros(3, 2, 3);
        p.weights.iter_mut().for_each(|w| *w = rng.next_signed());
        let x = Matrix::from_vec(6, 2, (0..12).map(|_| rng.next_signed()).collect()).unwrap();
        let (_, cache) = conv1d_forward(&p, &x).unwrap();
        let (g, dx) = conv1d_backward(&p, &cache, &Matrix::zeros(6, 3)).unwrap();
        assert!(g.flatten().iter().chain(dx.as_slice()).all(|&v| v == 0.0));
        let up = Matrix::from_vec(6, 3, (0..18).map(|_| rng.next_signed()).collect()).unwrap();
        let mut up3 = up.clone();
        up3.scale(-3.0);
        let (g1, dx1) = conv1d_backward(&p, &cache, &up).unwrap();
        let (g3, dx3) = conv1d_backward(&p, &cache, &up3).unwrap();
        for (a, b) in g1.flatten().iter().zip(g3.flatten()) {
            assert!((-3.0 * a - b).abs() <= 1e-13 * b.abs().max(1.0));
        }
        for (a, b) in dx1.as_slice().iter().zip(dx3.as_slice()) {
            assert!((-3.0 * a - b).abs() <= 1e-13 * b.abs().max(1.0));
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        for seed in 0..20u64 {
            let mut rng = SplitMix64::new(100 + seed);
            let (steps, d, nf, k) = (6, 2, 3, 3);
            let mut p = Conv1dParams::zeros(nf, d, k);
            for t in p.tensors_mut() {
                t.iter_mut().for_each(|v| *v = rng.next_signed());
            }
            let x = Matrix::from_vec(steps, d, (0..steps * d).map(|_| rng.next_signed()).collect()).unwrap();
            let up = Matrix::from_vec(steps, nf, (0..steps * nf).map(|_| rng.next_signed()).collect()).unwrap();
            let loss = |p: &Conv1dParams, x: &Matrix| {
                let (y, _) = conv1d_forward(p, x).unwrap();
                crate::math::dot(y.as_slice(), up.as_slice())
            };
            let (_, cache) = conv1d_forward(&p, &x).unwrap();
            let (g, dx) = conv1d_backward(&p, &cache, &up).unwrap();
            let err = finite_difference_check(
                |th: &[f64]| {
                    let mut q = p.clone();
                    q.assign_flat(th);
                    loss(&q, &x)
                },
                &p.flatten(),
                &g.flatten(),
                1e-5,
            )
            .unwrap();
            assert!(err < 1e-4, "seed {seed}: {err}");
            let err = finite_difference_check(
                |xs: &[f64]| loss(&p, &Matrix::from_vec(steps, d, xs.to_vec()).unwrap()),
                x.as_slice(),
                dx.as_slice(),
                1e-5,
            )
            .unwrap();
            assert!(err < 1e-4, "seed {seed}: {err}");
        }
    }
}
