use alloc::vec::Vec;

use rand::Rng;

use super::lstm::{LstmParams, GATE_F};
use crate::autodiff::Matrix;

/// Architecture sizes. The decoder width is always twice the encoder width.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelDims {
    pub vocab: usize,
    /// Encoder hidden size per direction.
    pub hidden: usize,
}

impl ModelDims {
    pub const fn new(vocab: usize, hidden: usize) -> Self {
        ModelDims { vocab, hidden }
    }

    pub const fn decoder_hidden(&self) -> usize {
        2 * self.hidden
    }
}

impl Default for ModelDims {
    fn default() -> Self {
        ModelDims::new(crate::pianoroll::VOCAB_SIZE, 128)
    }
}

/// All learned weights. Also used as the gradient container: a gradient is a
/// `ModelParams` of the same dims.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub dims: ModelDims,
    pub enc_fwd: LstmParams,
    pub enc_bwd: LstmParams,
    /// Input is `[one_hot(prev) ‖ h̃_prev]`, width `vocab + H_d`.
    pub dec: LstmParams,
    /// `W_a`: `H_d × 2H`.
    pub attn: Matrix,
    /// `W_c`: `H_d × (2H + H_d)`, applied to `[context ‖ h_t]`.
    pub combine: Matrix,
    /// `vocab × H_d`
    pub out_w: Matrix,
    /// `vocab × 1`
    pub out_b: Matrix,
}

/// Tensor order for flattening and checkpoints.
pub const TENSOR_NAMES: [&str; 13] = [
    "enc_fwd.w",
    "enc_fwd.u",
    "enc_fwd.b",
    "enc_bwd.w",
    "enc_bwd.u",
    "enc_bwd.b",
    "dec.w",
    "dec.u",
    "dec.b",
    "attn",
    "combine",
    "out_w",
    "out_b",
];

impl ModelParams {
    pub fn zeros(dims: ModelDims) -> Self {
        let (v, h) = (dims.vocab, dims.hidden);
        let hd = dims.decoder_hidden();
        ModelParams {
            dims,
            enc_fwd: LstmParams::zeros(v, h),
            enc_bwd: LstmParams::zeros(v, h),
            dec: LstmParams::zeros(v + hd, hd),
            attn: Matrix::zeros(hd, 2 * h),
            combine: Matrix::zeros(hd, 2 * h + hd),
            out_w: Matrix::zeros(v, hd),
            out_b: Matrix::zeros(v, 1),
        }
    }

    /// Glorot-uniform weights in `±√(6 / (rows + cols))`, zero biases except
    /// the LSTM forget gates, which start at +1.
    pub fn init<R: Rng + ?Sized>(dims: ModelDims, rng: &mut R) -> Self {
        let mut p = ModelParams::zeros(dims);
        for (name, m) in p.tensors_mut() {
            if name.ends_with(".b") || name == "out_b" {
                continue;
            }
            let limit = libm::sqrt(6.0 / (m.rows() + m.cols()) as f64);
            m.data_mut().iter_mut().for_each(|v| *v = rng.random_range(-limit..limit));
        }
        for lstm in [&mut p.enc_fwd, &mut p.enc_bwd, &mut p.dec] {
            lstm.gate_bias_mut(GATE_F).fill(1.0);
        }
        p
    }

    /// Tensors in the fixed order used by flattening and checkpoints.
    pub fn tensors(&self) -> [(&'static str, &Matrix); 13] {
        [
            (TENSOR_NAMES[0], &self.enc_fwd.w),
            (TENSOR_NAMES[1], &self.enc_fwd.u),
            (TENSOR_NAMES[2], &self.enc_fwd.b),
            (TENSOR_NAMES[3], &self.enc_bwd.w),
            (TENSOR_NAMES[4], &self.enc_bwd.u),
            (TENSOR_NAMES[5], &self.enc_bwd.b),
            (TENSOR_NAMES[6], &self.dec.w),
            (TENSOR_NAMES[7], &self.dec.u),
            (TENSOR_NAMES[8], &self.dec.b),
            (TENSOR_NAMES[9], &self.attn),
            (TENSOR_NAMES[10], &self.combine),
            (TENSOR_NAMES[11], &self.out_w),
            (TENSOR_NAMES[12], &self.out_b),
        ]
    }

    pub fn tensors_mut(&mut self) -> [(&'static str, &mut Matrix); 13] {
        [
            (TENSOR_NAMES[0], &mut self.enc_fwd.w),
            (TENSOR_NAMES[1], &mut self.enc_fwd.u),
            (TENSOR_NAMES[2], &mut self.enc_fwd.b),
            (TENSOR_NAMES[3], &mut self.enc_bwd.w),
            (TENSOR_NAMES[4], &mut self.enc_bwd.u),
            (TENSOR_NAMES[5], &mut self.enc_bwd.b),
            (TENSOR_NAMES[6], &mut self.dec.w),
            (TENSOR_NAMES[7], &mut self.dec.u),
            (TENSOR_NAMES[8], &mut self.dec.b),
            (TENSOR_NAMES[9], &mut self.attn),
            (TENSOR_NAMES[10], &mut self.combine),
            (TENSOR_NAMES[11], &mut self.out_w),
            (TENSOR_NAMES[12], &mut self.out_b),
        ]
    }

    /// Parameter count for `dims`, or `None` on overflow.
    pub fn param_count_for(dims: ModelDims) -> Option<usize> {
        let (v, h) = (dims.vocab, dims.hidden);
        let hd = h.checked_mul(2)?;
        let lstm = |input: usize, hidden: usize| -> Option<usize> {
            let rows = hidden.checked_mul(4)?;
            rows.checked_mul(input.checked_add(hidden)?.checked_add(1)?)
        };
        let parts = [
            lstm(v, h)?,
            lstm(v, h)?,
            lstm(v.checked_add(hd)?, hd)?,
            hd.checked_mul(hd)?,
            hd.checked_mul(hd.checked_mul(2)?)?,
            v.checked_mul(hd)?,
            v,
        ];
        parts.iter().try_fold(0usize, |acc, &n| acc.checked_add(n))
    }

    pub fn param_count(&self) -> usize {
        self.tensors().iter().map(|(_, m)| m.data().len()).sum()
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for (_, m) in self.tensors() {
            out.extend_from_slice(m.data());
        }
        out
    }

    /// Overwrites every parameter from `flat` (same order as [`Self::to_flat`]).
    pub fn assign_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.param_count(), "flat parameter length");
        let mut offset = 0;
        for (_, m) in self.tensors_mut() {
            let n = m.data().len();
            m.data_mut().copy_from_slice(&flat[offset..offset + n]);
            offset += n;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|(_, m)| m.is_finite())
    }

    pub fn fill_zero(&mut self) {
        for (_, m) in self.tensors_mut() {
            m.fill(0.0);
        }
    }

    pub fn add_assign(&mut self, other: &ModelParams) {
        for ((_, a), (_, b)) in self.tensors_mut().into_iter().zip(other.tensors()) {
            a.add_assign(b);
        }
    }

    pub fn scale(&mut self, k: f64) {
        for (_, m) in self.tensors_mut() {
            m.scale(k);
        }
    }

    pub fn l2_norm(&self) -> f64 {
        libm::sqrt(self.tensors().iter().map(|(_, m)| m.sum_squares()).sum())
    }

    /// Rounds every weight to the nearest `f32`, the checkpoint precision.
    pub fn round_to_f32(&mut self) {
        for (_, m) in self.tensors_mut() {
            m.data_mut().iter_mut().for_each(|v| *v = f64::from(*v as f32));
        }
    }
}
