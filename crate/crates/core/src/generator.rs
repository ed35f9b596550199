//! Autoregressive melody generation from a seed.
//!
//! The encoder reads the seed once. The decoder then starts from the last
//! seed token and feeds each sampled token back in until the sequence covers
//! the requested duration on the grid. END is masked out while sampling and
//! appended once the target is reached.

use alloc::vec::Vec;

use rand::Rng as _;

use crate::checkpoint::ModelCheckpoint;
use crate::model::{decoder_step, encode_bidirectional, DecoderState, ModelError};
use crate::pianoroll::{decode_tokens, PianoRollError, TokenSequence, Vocabulary, DEFAULT_DIVISION, END, VOCAB_SIZE};
use crate::smf::{serialize_smf, SmfError};
use crate::trainer::argmax;
use crate::{rng_from_seed, Rng};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GenerationError {
    #[error("seed token {0} is not a pitch or REST")]
    InvalidSeedToken(usize),
    #[error("seed is empty")]
    EmptySeed,
    #[error("target duration must be positive, got {0}")]
    InvalidTarget(f64),
    #[error("temperature must be a finite value >= 0, got {0}")]
    InvalidTemperature(f64),
    #[error("tempo must be positive, got {0}")]
    InvalidTempo(f64),
    #[error("no probability mass left to sample from")]
    DegenerateDistribution,
    #[error("model vocabulary is {0}, expected {VOCAB_SIZE}")]
    VocabularyMismatch(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Tokens(#[from] PianoRollError),
    #[error(transparent)]
    Midi(#[from] SmfError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRequest {
    /// Pitches (0–127) or REST; END is not allowed.
    pub seed_tokens: Vec<usize>,
    pub target_seconds: f64,
    /// 0 picks the most likely token at every step.
    pub temperature: f64,
    pub tempo_bpm: f64,
    pub rng_seed: u64,
}

impl GenerationRequest {
    pub const DEFAULT_SECONDS: f64 = 120.0;
    pub const DEFAULT_TEMPERATURE: f64 = 1.0;
    pub const DEFAULT_TEMPO_BPM: f64 = 120.0;

    /// A request with default duration, temperature and tempo.
    pub fn new(seed_tokens: Vec<usize>, rng_seed: u64) -> Self {
        GenerationRequest {
            seed_tokens,
            target_seconds: Self::DEFAULT_SECONDS,
            temperature: Self::DEFAULT_TEMPERATURE,
            tempo_bpm: Self::DEFAULT_TEMPO_BPM,
            rng_seed,
        }
    }

    /// Seed from comma-separated note names such as `"A4,C5,E5"`.
    pub fn from_note_names(names: &str, rng_seed: u64) -> Result<Self, PianoRollError> {
        let pitches = crate::pianoroll::parse_note_list(names)?;
        Ok(Self::new(pitches.into_iter().map(usize::from).collect(), rng_seed))
    }

    pub fn validate(&self) -> Result<(), GenerationError> {
        if self.seed_tokens.is_empty() {
            return Err(GenerationError::EmptySeed);
        }
        if let Some(&t) = self.seed_tokens.iter().find(|&&t| t >= END) {
            return Err(GenerationError::InvalidSeedToken(t));
        }
        if !(self.target_seconds > 0.0 && self.target_seconds.is_finite()) {
            return Err(GenerationError::InvalidTarget(self.target_seconds));
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(GenerationError::InvalidTemperature(self.temperature));
        }
        if !(self.tempo_bpm > 0.0 && self.tempo_bpm.is_finite()) {
            return Err(GenerationError::InvalidTempo(self.tempo_bpm));
        }
        Ok(())
    }
}

/// A seed pitch drawn uniformly from C3..=C6 (48–84), for requests that name
/// no seed notes.
pub fn random_seed_pitch(rng_seed: u64) -> u8 {
    rng_from_seed(rng_seed).random_range(48..=84)
}

/// Grid steps needed to cover `target_seconds`: `⌈target / step⌉`.
pub fn steps_for_duration(target_seconds: f64, tempo_bpm: f64, vocab: Vocabulary) -> usize {
    let steps = target_seconds / vocab.step_seconds(tempo_bpm);
    // absorb rounding noise so exact multiples do not gain a step
    libm::ceil(steps - 1e-9).max(0.0) as usize
}

/// Draws a token from `distribution`.
///
/// Temperature 0 returns the argmax (lowest index on ties). Otherwise the
/// weights are `p^(1/T)`, renormalized. Zero entries are never drawn.
pub fn sample_token(distribution: &[f64], temperature: f64, rng: &mut Rng) -> Result<usize, GenerationError> {
    if !(temperature >= 0.0 && temperature.is_finite()) {
        return Err(GenerationError::InvalidTemperature(temperature));
    }
    let usable = |p: f64| p > 0.0 && p.is_finite();
    if !distribution.iter().any(|&p| usable(p)) {
        return Err(GenerationError::DegenerateDistribution);
    }
    if temperature == 0.0 {
        return Ok(argmax(distribution));
    }
    let max_log = distribution
        .iter()
        .filter(|&&p| usable(p))
        .map(|&p| libm::log(p))
        .fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = distribution
        .iter()
        .map(|&p| if usable(p) { libm::exp((libm::log(p) - max_log) / temperature) } else { 0.0 })
        .collect();
    let total: f64 = weights.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return Err(GenerationError::DegenerateDistribution);
    }
    let mut u = rng.random::<f64>() * total;
    let mut last = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            if u < w {
                return Ok(i);
            }
            u -= w;
            last = i;
        }
    }
    Ok(last)
}

/// Extends the seed until it covers `target_seconds`, then appends END.
///
/// The result always starts with the seed; a seed that already covers the
/// target is returned unchanged apart from the END.
pub fn generate(req: &GenerationRequest, model: &ModelCheckpoint) -> Result<TokenSequence, GenerationError> {
    req.validate()?;
    let params = &model.params;
    if params.dims.vocab != VOCAB_SIZE {
        return Err(GenerationError::VocabularyMismatch(params.dims.vocab));
    }
    let total = steps_for_duration(req.target_seconds, req.tempo_bpm, model.vocabulary);
    let mut rng = rng_from_seed(req.rng_seed);
    let mut tokens = req.seed_tokens.clone();
    tokens.reserve(total.saturating_sub(tokens.len()) + 1);

    let enc = encode_bidirectional(&req.seed_tokens, params)?;
    let mut state = DecoderState::from_encoder(&enc);
    let mut prev = *req.seed_tokens.last().expect("validated non-empty");
    while tokens.len() < total {
        let out = decoder_step(prev, &state, &enc, params)?;
        let mut dist = out.distribution;
        dist[END] = 0.0;
        let token = sample_token(&dist, req.temperature, &mut rng)?;
        tokens.push(token);
        prev = token;
        state = out.state;
    }
    tokens.push(END);
    Ok(TokenSequence::new(tokens, model.vocabulary)?)
}

/// [`generate`], decoded to a single-track SMF at the request's tempo.
pub fn generate_to_midi(req: &GenerationRequest, model: &ModelCheckpoint) -> Result<Vec<u8>, GenerationError> {
    let seq = generate(req, model)?;
    let midi = decode_tokens(&seq, req.tempo_bpm, DEFAULT_DIVISION);
    Ok(serialize_smf(&midi)?)
}
