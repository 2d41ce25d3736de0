use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::Tensors;
use crate::error::{shape, Result};
use crate::math::{axpy, dot, sigmoid_scalar, Matrix};

/// Single-layer LSTM. Each gate matrix is `H × (H + d)` and acts on the
/// concatenation `[h_{t-1}, x_t]`, hidden state first.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    pub w_f: Matrix,
    pub w_i: Matrix,
    pub w_c: Matrix,
    pub w_o: Matrix,
    pub b_f: Vec<f64>,
    pub b_i: Vec<f64>,
    pub b_c: Vec<f64>,
    pub b_o: Vec<f64>,
}

impl LstmParams {
    pub fn zeros(hidden_size: usize, input_size: usize) -> Self {
        let w = Matrix::zeros(hidden_size, hidden_size + input_size);
        let b = vec![0.0; hidden_size];
        LstmParams {
            w_f: w.clone(),
            w_i: w.clone(),
            w_c: w.clone(),
            w_o: w,
            b_f: b.clone(),
            b_i: b.clone(),
            b_c: b.clone(),
            b_o: b,
        }
    }

    pub fn hidden_size(&self) -> usize {
        self.w_f.rows()
    }

    pub fn input_size(&self) -> usize {
        self.w_f.cols() - self.w_f.rows()
    }

    pub fn validate(&self) -> Result<()> {
        let (h, cols) = (self.w_f.rows(), self.w_f.cols());
        if h == 0 || cols <= h {
            return Err(shape(format!("W_f is {h}×{cols}; need H ≥ 1 and at least one input column")));
        }
        for (name, w) in [("W_i", &self.w_i), ("W_C", &self.w_c), ("W_o", &self.w_o)] {
            if w.rows() != h || w.cols() != cols {
                return Err(shape(format!("{name} is {}×{}, expected {h}×{cols}", w.rows(), w.cols())));
            }
        }
        for (name, b) in [("b_f", &self.b_f), ("b_i", &self.b_i), ("b_C", &self.b_c), ("b_o", &self.b_o)] {
            if b.len() != h {
                return Err(shape(format!("{name} has length {}, expected {h}", b.len())));
            }
        }
        Ok(())
    }
}

impl Tensors for LstmParams {
    fn tensors(&self) -> Vec<&[f64]> {
        vec![
            self.w_f.as_slice(),
            self.w_i.as_slice(),
            self.w_c.as_slice(),
            self.w_o.as_slice(),
            &self.b_f,
            &self.b_i,
            &self.b_c,
            &self.b_o,
        ]
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        vec![
            self.w_f.as_mut_slice(),
            self.w_i.as_mut_slice(),
            self.w_c.as_mut_slice(),
            self.w_o.as_mut_slice(),
            &mut self.b_f,
            &mut self.b_i,
            &mut self.b_c,
            &mut self.b_o,
        ]
    }
}

/// Cell and hidden state `(C, h)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub cell: Vec<f64>,
    pub hidden: Vec<f64>,
}

impl LstmState {
    pub fn zeros(hidden_size: usize) -> Self {
        LstmState { cell: vec![0.0; hidden_size], hidden: vec![0.0; hidden_size] }
    }
}

/// Per-step intermediates; row `t` of each matrix belongs to step `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmCache {
    pub inputs: Matrix,
    pub forget: Matrix,
    pub input_gate: Matrix,
    pub candidate: Matrix,
    pub output_gate: Matrix,
    pub cell: Matrix,
    pub hidden: Matrix,
    pub initial: LstmState,
}

impl LstmCache {
    pub fn steps(&self) -> usize {
        self.inputs.rows()
    }

    fn prev_hidden(&self, t: usize) -> &[f64] {
        if t == 0 {
            &self.initial.hidden
        } else {
            self.hidden.row(t - 1)
        }
    }

    fn prev_cell(&self, t: usize) -> &[f64] {
        if t == 0 {
            &self.initial.cell
        } else {
            self.cell.row(t - 1)
        }
    }
}

/// Runs the recurrence over all `T` rows of `inputs` and returns the `T × H`
/// hidden sequence.
pub fn lstm_forward(params: &LstmParams, inputs: &Matrix, initial: &LstmState) -> Result<(Matrix, LstmCache)> {
    params.validate()?;
    let (h, d) = (params.hidden_size(), params.input_size());
    if inputs.cols() != d {
        return Err(shape(format!("LSTM input has width {}, expected d = {d}", inputs.cols())));
    }
    if initial.cell.len() != h || initial.hidden.len() != h {
        return Err(shape(format!(
            "LSTM initial state has lengths (C {}, h {}), expected {h}",
            initial.cell.len(),
            initial.hidden.len()
        )));
    }
    let steps = inputs.rows();
    let mut cache = LstmCache {
        inputs: inputs.clone(),
        forget: Matrix::zeros(steps, h),
        input_gate: Matrix::zeros(steps, h),
        candidate: Matrix::zeros(steps, h),
        output_gate: Matrix::zeros(steps, h),
        cell: Matrix::zeros(steps, h),
        hidden: Matrix::zeros(steps, h),
        initial: initial.clone(),
    };
    let mut concat = vec![0.0; h + d];
    for t in 0..steps {
        concat[..h].copy_from_slice(cache.prev_hidden(t));
        concat[h..].copy_from_slice(inputs.row(t));
        for r in 0..h {
            let f = sigmoid_scalar(dot(params.w_f.row(r), &concat) + params.b_f[r]);
            let i = sigmoid_scalar(dot(params.w_i.row(r), &concat) + params.b_i[r]);
            let g = libm::tanh(dot(params.w_c.row(r), &concat) + params.b_c[r]);
            let o = sigmoid_scalar(dot(params.w_o.row(r), &concat) + params.b_o[r]);
            let c = f * cache.prev_cell(t)[r] + i * g;
            cache.forget.set(t, r, f);
            cache.input_gate.set(t, r, i);
            cache.candidate.set(t, r, g);
            cache.output_gate.set(t, r, o);
            cache.cell.set(t, r, c);
            cache.hidden.set(t, r, o * libm::tanh(c));
        }
    }
    Ok((cache.hidden.clone(), cache))
}

/// Backpropagation through time for `L = Σ_t ⟨upstream_t, h_t⟩`.
///
/// Returns parameter gradients and `∂L/∂x_t` for every step.
pub fn lstm_backward(params: &LstmParams, cache: &LstmCache, upstream: &Matrix) -> Result<(LstmParams, Matrix)> {
    params.validate()?;
    let (h, d) = (params.hidden_size(), params.input_size());
    let steps = cache.steps();
    if cache.inputs.cols() != d || cache.hidden.cols() != h || cache.initial.hidden.len() != h {
        return Err(shape(format!(
            "LSTM cache was recorded for (H {}, d {}), params are (H {h}, d {d})",
            cache.hidden.cols(),
            cache.inputs.cols()
        )));
    }
    if upstream.rows() != steps || upstream.cols() != h {
        return Err(shape(format!(
            "LSTM upstream is {}×{}, expected {steps}×{h}",
            upstream.rows(),
            upstream.cols()
        )));
    }

    let mut grads = LstmParams::zeros(h, d);
    let mut input_grads = Matrix::zeros(steps, d);
    let mut dh_next = vec![0.0; h];
    let mut dc_next = vec![0.0; h];
    let mut concat = vec![0.0; h + d];
    let mut dconcat = vec![0.0; h + d];
    let (mut da_f, mut da_i, mut da_c, mut da_o) = (vec![0.0; h], vec![0.0; h], vec![0.0; h], vec![0.0; h]);

    for t in (0..steps).rev() {
        let prev_cell = cache.prev_cell(t);
        for r in 0..h {
            let f = cache.forget.get(t, r);
            let i = cache.input_gate.get(t, r);
            let g = cache.candidate.get(t, r);
            let o = cache.output_gate.get(t, r);
            let tc = libm::tanh(cache.cell.get(t, r));
            let dh = upstream.get(t, r) + dh_next[r];
            let dc = dh * o * (1.0 - tc * tc) + dc_next[r];
            da_o[r] = dh * tc * o * (1.0 - o);
            da_f[r] = dc * prev_cell[r] * f * (1.0 - f);
            da_i[r] = dc * g * i * (1.0 - i);
            da_c[r] = dc * i * (1.0 - g * g);
            dc_next[r] = dc * f;
        }

        concat[..h].copy_from_slice(cache.prev_hidden(t));
        concat[h..].copy_from_slice(cache.inputs.row(t));
        dconcat.iter_mut().for_each(|v| *v = 0.0);
        let gates = [
            (&params.w_f, &mut grads.w_f, &mut grads.b_f, &da_f),
            (&params.w_i, &mut grads.w_i, &mut grads.b_i, &da_i),
            (&params.w_c, &mut grads.w_c, &mut grads.b_c, &da_c),
            (&params.w_o, &mut grads.w_o, &mut grads.b_o, &da_o),
        ];
        for (w, gw, gb, da) in gates {
            for r in 0..h {
                axpy(da[r], &concat, gw.row_mut(r));
                gb[r] += da[r];
                axpy(da[r], w.row(r), &mut dconcat);
            }
        }
        dh_next.copy_from_slice(&dconcat[..h]);
        input_grads.row_mut(t).copy_from_slice(&dconcat[h..]);
    }
    Ok((grads, input_grads))
}
