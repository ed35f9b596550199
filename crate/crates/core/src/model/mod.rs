//! Bi-directional LSTM encoder, Luong attention and an LSTM decoder.
//!
//! The encoder reads one-hot tokens in both directions; each position's
//! state is the concatenation `[h_fwd ‖ h_bwd]` (width `2H`), and the
//! decoder starts from the concatenated final states, so its width is
//! `H_d = 2H`. At every decoder step the LSTM input is the previous token's
//! one-hot vector followed by the previous attentional vector `h̃` (input
//! feeding). The new state attends over the encoder states with the
//! "general" score `h_tᵀ W_a h_s`, and
//! `h̃ = tanh(W_c [context ‖ h_t])` feeds the output softmax.

mod lstm;
mod params;
mod seq2seq;

pub use lstm::{lstm_cell_step, CellCache, LstmParams};
pub use params::{ModelDims, ModelParams, TENSOR_NAMES};
pub use seq2seq::{
    decoder_step, encode_bidirectional, forward_teacher_forced, loss_and_gradients, luong_attention,
    DecoderState, EncoderStates, StepOutput, WindowOutcome,
};

use crate::autodiff::AutodiffError;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("shape mismatch in {0}")]
    ShapeMismatch(&'static str),
    #[error("input sequence is empty")]
    EmptySequence,
    #[error("token {token} outside vocabulary of {vocab}")]
    TokenOutOfRange { token: usize, vocab: usize },
    #[error("input has {input} steps but target has {target}")]
    LengthMismatch { input: usize, target: usize },
}

impl From<AutodiffError> for ModelError {
    fn from(_: AutodiffError) -> Self {
        ModelError::ShapeMismatch("matrix operation")
    }
}
