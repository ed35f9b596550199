use alloc::vec;
use alloc::vec::Vec;

use super::lstm::{cell_backward, cell_forward, CellCache};
use super::{ModelError, ModelParams};
use crate::autodiff::{axpy, cross_entropy, dot, softmax, softmax_backward, tanh, Matrix};

/// Encoder output for one input sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderStates {
    /// `[h_fwd ‖ h_bwd]` per input position, width `2H`.
    pub states: Vec<Vec<f64>>,
    /// Last forward hidden state followed by the last backward one (the
    /// backward direction finishes at position 0).
    pub final_h: Vec<f64>,
    pub final_c: Vec<f64>,
}

struct EncoderTrace {
    fwd: Vec<CellCache>,
    /// Indexed by input position, not processing order.
    bwd: Vec<CellCache>,
    out: EncoderStates,
}

fn check_tokens(tokens: &[usize], vocab: usize) -> Result<(), ModelError> {
    match tokens.iter().find(|&&t| t >= vocab) {
        Some(&token) => Err(ModelError::TokenOutOfRange { token, vocab }),
        None => Ok(()),
    }
}

fn concat(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut v = Vec::with_capacity(a.len() + b.len());
    v.extend_from_slice(a);
    v.extend_from_slice(b);
    v
}

fn encode_trace(tokens: &[usize], params: &ModelParams) -> Result<EncoderTrace, ModelError> {
    if tokens.is_empty() {
        return Err(ModelError::EmptySequence);
    }
    check_tokens(tokens, params.dims.vocab)?;
    let h = params.dims.hidden;
    let zeros = vec![0.0; h];

    let mut fwd: Vec<CellCache> = Vec::with_capacity(tokens.len());
    for &t in tokens {
        let (hp, cp) = fwd.last().map_or((&zeros, &zeros), |c| (&c.h, &c.c));
        let cache = cell_forward(&params.enc_fwd, Some(t), &[], hp, cp);
        fwd.push(cache);
    }
    let mut bwd_rev: Vec<CellCache> = Vec::with_capacity(tokens.len());
    for &t in tokens.iter().rev() {
        let (hp, cp) = bwd_rev.last().map_or((&zeros, &zeros), |c| (&c.h, &c.c));
        let cache = cell_forward(&params.enc_bwd, Some(t), &[], hp, cp);
        bwd_rev.push(cache);
    }
    bwd_rev.reverse();
    let bwd = bwd_rev;

    let states = fwd.iter().zip(&bwd).map(|(f, b)| concat(&f.h, &b.h)).collect();
    let last = fwd.last().expect("non-empty");
    let first = &bwd[0];
    let out = EncoderStates {
        states,
        final_h: concat(&last.h, &first.h),
        final_c: concat(&last.c, &first.c),
    };
    Ok(EncoderTrace { fwd, bwd, out })
}

/// Runs both encoder directions over `tokens` (vocabulary indices, i.e. the
/// positions of the one-hot inputs).
pub fn encode_bidirectional(tokens: &[usize], params: &ModelParams) -> Result<EncoderStates, ModelError> {
    Ok(encode_trace(tokens, params)?.out)
}

/// Scores with `h_tᵀ W_a h_s`, normalizes with softmax and returns the
/// weighted sum of encoder states together with the weights.
pub fn luong_attention(h_t: &[f64], enc: &[Vec<f64>], w_a: &Matrix) -> Result<(Vec<f64>, Vec<f64>), ModelError> {
    if w_a.rows() != h_t.len() || enc.iter().any(|s| s.len() != w_a.cols()) {
        return Err(ModelError::ShapeMismatch("attention"));
    }
    if enc.is_empty() {
        return Err(ModelError::EmptySequence);
    }
    let mut query = vec![0.0; w_a.cols()];
    w_a.gemv_t_acc(0, h_t, &mut query);
    Ok(attend(&query, enc))
}

fn attend(query: &[f64], enc: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let scores: Vec<f64> = enc.iter().map(|s| dot(query, s)).collect();
    let weights = softmax(&scores);
    let mut context = vec![0.0; query.len()];
    for (a, s) in weights.iter().zip(enc) {
        axpy(*a, s, &mut context);
    }
    (context, weights)
}

/// Recurrent state carried between decoder steps.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoderState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
    /// Attentional vector `h̃` of the previous step, fed into the next input.
    pub feed: Vec<f64>,
}

impl DecoderState {
    /// Starts from the encoder's final states with a zero feed.
    pub fn from_encoder(enc: &EncoderStates) -> Self {
        DecoderState {
            h: enc.final_h.clone(),
            c: enc.final_c.clone(),
            feed: vec![0.0; enc.final_h.len()],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput {
    /// Softmax over the vocabulary.
    pub distribution: Vec<f64>,
    pub state: DecoderState,
    pub attention: Vec<f64>,
}

struct StepTrace {
    cell: CellCache,
    query: Vec<f64>,
    weights: Vec<f64>,
    /// `[context ‖ h_t]`
    combined_in: Vec<f64>,
    attentional: Vec<f64>,
    distribution: Vec<f64>,
}

fn step_trace(prev_token: usize, state: &DecoderState, enc: &[Vec<f64>], params: &ModelParams) -> StepTrace {
    let cell = cell_forward(&params.dec, Some(prev_token), &state.feed, &state.h, &state.c);
    let mut query = vec![0.0; params.attn.cols()];
    params.attn.gemv_t_acc(0, &cell.h, &mut query);
    let (context, weights) = attend(&query, enc);
    let combined_in = concat(&context, &cell.h);
    let mut attentional = vec![0.0; params.combine.rows()];
    params.combine.gemv_acc(0, &combined_in, &mut attentional);
    attentional.iter_mut().for_each(|v| *v = tanh(*v));
    let mut logits = params.out_b.data().to_vec();
    params.out_w.gemv_acc(0, &attentional, &mut logits);
    let distribution = softmax(&logits);
    StepTrace {
        cell,
        query,
        weights,
        combined_in,
        attentional,
        distribution,
    }
}

/// One decoder step: LSTM on `[one_hot(prev) ‖ h̃_prev]`, attention with the
/// new hidden state, `h̃ = tanh(W_c [context ‖ h])` and the output softmax.
pub fn decoder_step(
    prev_token: usize,
    state: &DecoderState,
    enc: &EncoderStates,
    params: &ModelParams,
) -> Result<StepOutput, ModelError> {
    let hd = params.dims.decoder_hidden();
    check_tokens(&[prev_token], params.dims.vocab)?;
    if state.h.len() != hd || state.c.len() != hd || state.feed.len() != hd {
        return Err(ModelError::ShapeMismatch("decoder state"));
    }
    if enc.states.is_empty() {
        return Err(ModelError::EmptySequence);
    }
    if enc.states.iter().any(|s| s.len() != 2 * params.dims.hidden) {
        return Err(ModelError::ShapeMismatch("encoder states"));
    }
    let trace = step_trace(prev_token, state, &enc.states, params);
    Ok(StepOutput {
        distribution: trace.distribution,
        state: DecoderState {
            h: trace.cell.h,
            c: trace.cell.c,
            feed: trace.attentional,
        },
        attention: trace.weights,
    })
}

struct WindowTrace {
    encoder: EncoderTrace,
    steps: Vec<StepTrace>,
    loss: f64,
}

fn check_window(input: &[usize], target: &[usize], params: &ModelParams) -> Result<(), ModelError> {
    if input.len() != target.len() {
        return Err(ModelError::LengthMismatch {
            input: input.len(),
            target: target.len(),
        });
    }
    if input.is_empty() {
        return Err(ModelError::EmptySequence);
    }
    check_tokens(target, params.dims.vocab)
}

fn window_trace(input: &[usize], target: &[usize], params: &ModelParams) -> Result<WindowTrace, ModelError> {
    check_window(input, target, params)?;
    let encoder = encode_trace(input, params)?;
    let mut state = DecoderState::from_encoder(&encoder.out);
    let mut steps = Vec::with_capacity(target.len());
    let mut loss = 0.0;
    let mut prev = input[input.len() - 1];
    for &t in target {
        let trace = step_trace(prev, &state, &encoder.out.states, params);
        loss += cross_entropy(&trace.distribution, t)?;
        state = DecoderState {
            h: trace.cell.h.clone(),
            c: trace.cell.c.clone(),
            feed: trace.attentional.clone(),
        };
        steps.push(trace);
        prev = t;
    }
    Ok(WindowTrace {
        encoder,
        steps,
        loss: loss / target.len() as f64,
    })
}

/// Teacher-forced pass over one window: the decoder starts from the last
/// input token and is fed `target[t − 1]` at step `t`.
///
/// Returns the mean cross-entropy and the per-step distributions.
pub fn forward_teacher_forced(
    input: &[usize],
    target: &[usize],
    params: &ModelParams,
) -> Result<(f64, Vec<Vec<f64>>), ModelError> {
    let trace = window_trace(input, target, params)?;
    Ok((trace.loss, trace.steps.into_iter().map(|s| s.distribution).collect()))
}

/// Loss and predictions of one training window.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowOutcome {
    pub loss: f64,
    pub distributions: Vec<Vec<f64>>,
}

/// Teacher-forced forward pass plus backpropagation through time.
///
/// Adds the gradient of the window's mean loss into `grads`, which must have
/// the same dims as `params`.
pub fn loss_and_gradients(
    input: &[usize],
    target: &[usize],
    params: &ModelParams,
    grads: &mut ModelParams,
) -> Result<WindowOutcome, ModelError> {
    if grads.dims != params.dims {
        return Err(ModelError::ShapeMismatch("gradient container"));
    }
    let trace = window_trace(input, target, params)?;
    let h = params.dims.hidden;
    let hd = params.dims.decoder_hidden();
    let steps = target.len();
    let scale = 1.0 / steps as f64;
    let enc_states = &trace.encoder.out.states;

    let mut d_enc = vec![vec![0.0; 2 * h]; enc_states.len()];
    let mut dh_next = vec![0.0; hd];
    let mut dc_next = vec![0.0; hd];
    let mut dfeed_next = vec![0.0; hd];

    for (t, step) in trace.steps.iter().enumerate().rev() {
        // softmax + cross-entropy
        let mut dlogits = step.distribution.clone();
        dlogits[target[t]] -= 1.0;
        dlogits.iter_mut().for_each(|v| *v *= scale);
        grads.out_w.add_outer(0, &dlogits, &step.attentional);
        for (b, d) in grads.out_b.data_mut().iter_mut().zip(&dlogits) {
            *b += d;
        }

        // h̃ = tanh(W_c [context ‖ h])
        let mut d_att = dfeed_next.clone();
        params.out_w.gemv_t_acc(0, &dlogits, &mut d_att);
        let d_pre: Vec<f64> = d_att
            .iter()
            .zip(&step.attentional)
            .map(|(d, y)| d * (1.0 - y * y))
            .collect();
        grads.combine.add_outer(0, &d_pre, &step.combined_in);
        let mut d_combined = vec![0.0; step.combined_in.len()];
        params.combine.gemv_t_acc(0, &d_pre, &mut d_combined);
        let (d_context, d_h_direct) = d_combined.split_at(2 * h);

        // context = Σ a_s e_s, a = softmax(qᵀ e_s), q = W_aᵀ h
        let d_weights: Vec<f64> = enc_states.iter().map(|e| dot(d_context, e)).collect();
        for (de, &a) in d_enc.iter_mut().zip(&step.weights) {
            axpy(a, d_context, de);
        }
        let d_scores = softmax_backward(&step.weights, &d_weights);
        let mut d_query = vec![0.0; 2 * h];
        for ((de, e), &ds) in d_enc.iter_mut().zip(enc_states).zip(&d_scores) {
            axpy(ds, e, &mut d_query);
            axpy(ds, &step.query, de);
        }
        let mut dh = dh_next.clone();
        for (a, b) in dh.iter_mut().zip(d_h_direct) {
            *a += b;
        }
        params.attn.gemv_acc(0, &d_query, &mut dh);
        grads.attn.add_outer(0, &step.cell.h, &d_query);

        let (dh_prev, dc_prev, dfeed_prev) = cell_backward(&params.dec, &step.cell, &dh, &dc_next, &mut grads.dec);
        dh_next = dh_prev;
        dc_next = dc_prev;
        dfeed_next = dfeed_prev;
    }

    // decoder initial state = encoder finals
    let (dh_fwd_final, dh_bwd_final) = dh_next.split_at(h);
    let (dc_fwd_final, dc_bwd_final) = dc_next.split_at(h);

    let mut dh_carry = dh_fwd_final.to_vec();
    let mut dc_carry = dc_fwd_final.to_vec();
    for (s, cache) in trace.encoder.fwd.iter().enumerate().rev() {
        let mut dh = dh_carry;
        axpy(1.0, &d_enc[s][..h], &mut dh);
        let (dhp, dcp, _) = cell_backward(&params.enc_fwd, cache, &dh, &dc_carry, &mut grads.enc_fwd);
        dh_carry = dhp;
        dc_carry = dcp;
    }

    let mut dh_carry = dh_bwd_final.to_vec();
    let mut dc_carry = dc_bwd_final.to_vec();
    for (s, cache) in trace.encoder.bwd.iter().enumerate() {
        let mut dh = dh_carry;
        axpy(1.0, &d_enc[s][h..], &mut dh);
        let (dhp, dcp, _) = cell_backward(&params.enc_bwd, cache, &dh, &dc_carry, &mut grads.enc_bwd);
        dh_carry = dhp;
        dc_carry = dcp;
    }

    Ok(WindowOutcome {
        loss: trace.loss,
        distributions: trace.steps.into_iter().map(|s| s.distribution).collect(),
    })
}
