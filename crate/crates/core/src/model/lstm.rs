use alloc::vec;
use alloc::vec::Vec;

use super::ModelError;
use crate::autodiff::{sigmoid, tanh, Matrix};

/// Weights of one LSTM layer.
///
/// The four gates are stacked along the rows in the order input, forget,
/// output, candidate: rows `[0, H)` hold `W_i`/`U_i`/`b_i`, `[H, 2H)` the
/// forget gate, and so on. The input may start with a one-hot block (columns
/// `[0, one_hot_width)` of `w`) followed by a dense block.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    /// `4H × input_width`
    pub w: Matrix,
    /// `4H × H`
    pub u: Matrix,
    /// `4H × 1`
    pub b: Matrix,
}

/// Gate indices into the stacked rows.
pub(crate) const GATE_I: usize = 0;
pub(crate) const GATE_F: usize = 1;
pub(crate) const GATE_O: usize = 2;
pub(crate) const GATE_G: usize = 3;

impl LstmParams {
    pub fn zeros(input_width: usize, hidden: usize) -> Self {
        LstmParams {
            w: Matrix::zeros(4 * hidden, input_width),
            u: Matrix::zeros(4 * hidden, hidden),
            b: Matrix::zeros(4 * hidden, 1),
        }
    }

    pub fn hidden(&self) -> usize {
        self.u.cols()
    }

    pub fn input_width(&self) -> usize {
        self.w.cols()
    }

    /// Bias slice of one gate.
    pub fn gate_bias_mut(&mut self, gate: usize) -> &mut [f64] {
        let h = self.hidden();
        &mut self.b.data_mut()[gate * h..(gate + 1) * h]
    }
}

/// Everything a backward pass needs from one cell step.
#[derive(Debug, Clone)]
pub struct CellCache {
    token: Option<usize>,
    dense: Vec<f64>,
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    /// Post-activation gates, stacked like the weights.
    gates: Vec<f64>,
    tanh_c: Vec<f64>,
    pub c: Vec<f64>,
    pub h: Vec<f64>,
}

/// One LSTM step on `[one_hot(token) ‖ dense]`.
///
/// `token` indexes the one-hot block, which spans the first
/// `w.cols() - dense.len()` columns.
pub(crate) fn cell_forward(p: &LstmParams, token: Option<usize>, dense: &[f64], h_prev: &[f64], c_prev: &[f64]) -> CellCache {
    let hidden = p.hidden();
    let one_hot_width = p.w.cols() - dense.len();
    let mut z = p.b.data().to_vec();
    if let Some(t) = token {
        p.w.column_acc(t, &mut z);
    }
    if !dense.is_empty() {
        p.w.gemv_acc(one_hot_width, dense, &mut z);
    }
    p.u.gemv_acc(0, h_prev, &mut z);

    let (ifo, g) = z.split_at_mut(3 * hidden);
    ifo.iter_mut().for_each(|v| *v = sigmoid(*v));
    g.iter_mut().for_each(|v| *v = tanh(*v));

    let mut c = vec![0.0; hidden];
    let mut tanh_c = vec![0.0; hidden];
    let mut h = vec![0.0; hidden];
    for k in 0..hidden {
        let i = z[GATE_I * hidden + k];
        let f = z[GATE_F * hidden + k];
        let o = z[GATE_O * hidden + k];
        let gg = z[GATE_G * hidden + k];
        c[k] = f * c_prev[k] + i * gg;
        tanh_c[k] = tanh(c[k]);
        h[k] = o * tanh_c[k];
    }
    CellCache {
        token,
        dense: dense.to_vec(),
        h_prev: h_prev.to_vec(),
        c_prev: c_prev.to_vec(),
        gates: z,
        tanh_c,
        c,
        h,
    }
}

/// Backpropagates `dh`, `dc` (gradients on this step's outputs) through the
/// cell, accumulating weight gradients into `grads`.
///
/// Returns `(dh_prev, dc_prev, d_dense)`; `d_dense` is empty when the step
/// had no dense input.
pub(crate) fn cell_backward(
    p: &LstmParams,
    cache: &CellCache,
    dh: &[f64],
    dc: &[f64],
    grads: &mut LstmParams,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let hidden = p.hidden();
    let gates = &cache.gates;
    let mut dz = vec![0.0; 4 * hidden];
    let mut dc_prev = vec![0.0; hidden];
    for k in 0..hidden {
        let i = gates[GATE_I * hidden + k];
        let f = gates[GATE_F * hidden + k];
        let o = gates[GATE_O * hidden + k];
        let g = gates[GATE_G * hidden + k];
        let tc = cache.tanh_c[k];
        let d_o = dh[k] * tc;
        let dct = dc[k] + dh[k] * o * (1.0 - tc * tc);
        let di = dct * g;
        let dg = dct * i;
        let df = dct * cache.c_prev[k];
        dc_prev[k] = dct * f;
        dz[GATE_I * hidden + k] = di * i * (1.0 - i);
        dz[GATE_F * hidden + k] = df * f * (1.0 - f);
        dz[GATE_O * hidden + k] = d_o * o * (1.0 - o);
        dz[GATE_G * hidden + k] = dg * (1.0 - g * g);
    }

    for (gb, d) in grads.b.data_mut().iter_mut().zip(&dz) {
        *gb += d;
    }
    let one_hot_width = p.w.cols() - cache.dense.len();
    if let Some(t) = cache.token {
        grads.w.add_to_column(t, &dz);
    }
    if !cache.dense.is_empty() {
        grads.w.add_outer(one_hot_width, &dz, &cache.dense);
    }
    grads.u.add_outer(0, &dz, &cache.h_prev);

    let mut dh_prev = vec![0.0; hidden];
    p.u.gemv_t_acc(0, &dz, &mut dh_prev);
    let mut d_dense = vec![0.0; cache.dense.len()];
    if !d_dense.is_empty() {
        p.w.gemv_t_acc(one_hot_width, &dz, &mut d_dense);
    }
    (dh_prev, dc_prev, d_dense)
}

/// One LSTM step on a dense input vector `x`.
///
/// `i = σ(W_i x + U_i h + b_i)`, likewise `f`, `o`; `g = tanh(W_g x + U_g h
/// + b_g)`; `c′ = f ⊙ c + i ⊙ g`; `h′ = o ⊙ tanh(c′)`.
pub fn lstm_cell_step(x: &[f64], h: &[f64], c: &[f64], p: &LstmParams) -> Result<(Vec<f64>, Vec<f64>), ModelError> {
    let hidden = p.hidden();
    if p.w.rows() != 4 * hidden || p.b.rows() != 4 * hidden || p.w.cols() != x.len() || h.len() != hidden || c.len() != hidden {
        return Err(ModelError::ShapeMismatch("lstm cell"));
    }
    let cache = cell_forward(p, None, x, h, c);
    Ok((cache.h, cache.c))
}
