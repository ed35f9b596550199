//! Corpus windowing, teacher-forced optimization with Adam, per-epoch metrics
//! and early stopping.

mod adam;

pub use adam::{clip_global_norm, Adam};

use alloc::vec::Vec;
use rand::seq::SliceRandom;

use crate::checkpoint::{ModelCheckpoint, TrainingSummary};
use crate::model::{loss_and_gradients, ModelDims, ModelError, ModelParams};
use crate::pianoroll::{TokenSequence, VOCAB_SIZE};
use crate::rng_from_seed;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TrainError {
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("sequence {index} has {len} tokens; a window needs {needed}")]
    SequenceTooShort { index: usize, len: usize, needed: usize },
    #[error("{predictions} predictions for {targets} targets")]
    LengthMismatch { predictions: usize, targets: usize },
    #[error("invalid training configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("parameters became non-finite in epoch {epoch}")]
    NonFiniteParameters { epoch: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingConfig {
    pub window_len: usize,
    pub stride: usize,
    pub epochs_max: usize,
    /// Training stops once an epoch's token accuracy reaches this; `None`
    /// always runs `epochs_max` epochs.
    pub accuracy_stop: Option<f64>,
    pub learning_rate: f64,
    /// Windows per optimizer step; gradients are averaged over the batch.
    pub batch_size: usize,
    pub rng_seed: u64,
    /// Encoder hidden size per direction.
    pub hidden: usize,
    /// Global gradient-norm limit.
    pub clip_norm: f64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            window_len: 64,
            stride: 32,
            epochs_max: 100,
            accuracy_stop: Some(0.93),
            learning_rate: 1e-3,
            batch_size: 32,
            rng_seed: 0,
            hidden: 128,
            clip_norm: 5.0,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let check = |ok: bool, msg: &'static str| if ok { Ok(()) } else { Err(TrainError::InvalidConfig(msg)) };
        check(self.window_len >= 2, "window_len must be at least 2")?;
        check(self.stride >= 1, "stride must be positive")?;
        check(self.epochs_max >= 1, "epochs_max must be positive")?;
        check(
            self.accuracy_stop.is_none_or(|a| (0.0..=1.0).contains(&a)),
            "accuracy_stop must lie in [0, 1]",
        )?;
        check(
            self.learning_rate > 0.0 && self.learning_rate.is_finite(),
            "learning_rate must be positive",
        )?;
        check(self.batch_size >= 1, "batch_size must be positive")?;
        check(self.hidden >= 1, "hidden must be positive")?;
        check(self.clip_norm > 0.0, "clip_norm must be positive")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochMetrics {
    /// 1-based.
    pub epoch: usize,
    /// Mean per-token cross-entropy over the epoch.
    pub loss: f64,
    /// Fraction of tokens whose argmax prediction was the target.
    pub accuracy: f64,
    /// Wall time since training started, as reported by the observer.
    pub seconds: f64,
}

/// Hooks into the training loop. The core crate has no clock, so wall time
/// comes from here.
pub trait TrainingObserver {
    fn elapsed_seconds(&self) -> f64 {
        0.0
    }

    fn on_epoch(&mut self, _metrics: &EpochMetrics) {}
}

impl TrainingObserver for () {}

/// One teacher-forced training example.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Window {
    pub input: Vec<usize>,
    pub target: Vec<usize>,
}

/// Cuts `seq` into windows: `input = tokens[k, k+len)`,
/// `target = tokens[k+1, k+len]`, with `k` stepping by `stride`. A trailing
/// partial window is dropped.
pub fn make_windows(seq: &TokenSequence, window_len: usize, stride: usize) -> Result<Vec<Window>, TrainError> {
    if window_len == 0 || stride == 0 {
        return Err(TrainError::InvalidConfig("window_len and stride must be positive"));
    }
    let tokens = seq.tokens();
    if tokens.len() < window_len + 1 {
        return Err(TrainError::SequenceTooShort {
            index: 0,
            len: tokens.len(),
            needed: window_len + 1,
        });
    }
    Ok((0..=tokens.len() - window_len - 1)
        .step_by(stride)
        .map(|k| Window {
            input: tokens[k..k + window_len].to_vec(),
            target: tokens[k + 1..=k + window_len].to_vec(),
        })
        .collect())
}

/// Index of the largest value; the lowest index wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

fn count_correct(distributions: &[Vec<f64>], targets: &[usize]) -> usize {
    distributions
        .iter()
        .zip(targets)
        .filter(|(d, &t)| argmax(d) == t)
        .count()
}

/// Fraction of steps whose argmax equals the target.
pub fn token_accuracy(distributions: &[Vec<f64>], targets: &[usize]) -> Result<f64, TrainError> {
    if distributions.len() != targets.len() {
        return Err(TrainError::LengthMismatch {
            predictions: distributions.len(),
            targets: targets.len(),
        });
    }
    if targets.is_empty() {
        return Ok(0.0);
    }
    Ok(count_correct(distributions, targets) as f64 / targets.len() as f64)
}

/// Trains a fresh model. See [`train_with_observer`].
pub fn train(corpus: &[TokenSequence], config: &TrainingConfig) -> Result<(ModelCheckpoint, Vec<EpochMetrics>), TrainError> {
    train_with_observer(corpus, config, &mut ())
}

/// Trains a fresh model on every window of `corpus`.
///
/// Initialization and the per-epoch shuffle both draw from one generator
/// seeded with `config.rng_seed`, so a run is fully determined by its
/// inputs. Each batch's averaged gradient is clipped to `clip_norm` before
/// the Adam update; a batch whose gradient is not finite is skipped. The
/// returned weights are rounded to `f32`, the checkpoint precision.
pub fn train_with_observer(
    corpus: &[TokenSequence],
    config: &TrainingConfig,
    observer: &mut dyn TrainingObserver,
) -> Result<(ModelCheckpoint, Vec<EpochMetrics>), TrainError> {
    config.validate()?;
    if corpus.is_empty() {
        return Err(TrainError::EmptyCorpus);
    }
    let vocabulary = corpus[0].vocabulary();
    if corpus.iter().any(|s| s.vocabulary() != vocabulary) {
        return Err(TrainError::InvalidConfig("corpus mixes time grids"));
    }
    let mut windows = Vec::new();
    for (index, seq) in corpus.iter().enumerate() {
        let w = make_windows(seq, config.window_len, config.stride).map_err(|e| match e {
            TrainError::SequenceTooShort { len, needed, .. } => TrainError::SequenceTooShort { index, len, needed },
            other => other,
        })?;
        windows.extend(w);
    }

    let mut rng = rng_from_seed(config.rng_seed);
    let dims = ModelDims::new(VOCAB_SIZE, config.hidden);
    let mut params = ModelParams::init(dims, &mut rng);
    let mut grads = ModelParams::zeros(dims);
    let mut adam = Adam::new(&params, config.learning_rate);
    let mut order: Vec<usize> = (0..windows.len()).collect();
    let tokens_per_epoch = (windows.len() * config.window_len) as f64;
    let mut history = Vec::new();

    for epoch in 1..=config.epochs_max {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut correct = 0;
        for batch in order.chunks(config.batch_size) {
            grads.fill_zero();
            for &i in batch {
                let w = &windows[i];
                let outcome = loss_and_gradients(&w.input, &w.target, &params, &mut grads)?;
                loss_sum += outcome.loss * w.target.len() as f64;
                correct += count_correct(&outcome.distributions, &w.target);
            }
            grads.scale(1.0 / batch.len() as f64);
            if !grads.is_finite() {
                continue;
            }
            clip_global_norm(&mut grads, config.clip_norm);
            adam.step(&mut params, &grads);
            if !params.is_finite() {
                return Err(TrainError::NonFiniteParameters { epoch });
            }
        }
        let metrics = EpochMetrics {
            epoch,
            loss: loss_sum / tokens_per_epoch,
            accuracy: correct as f64 / tokens_per_epoch,
            seconds: observer.elapsed_seconds(),
        };
        observer.on_epoch(&metrics);
        history.push(metrics);
        if config.accuracy_stop.is_some_and(|stop| metrics.accuracy >= stop) {
            break;
        }
    }

    params.round_to_f32();
    let last = history.last().copied().expect("at least one epoch");
    let checkpoint = ModelCheckpoint {
        params,
        vocabulary,
        training: TrainingSummary {
            epochs_run: history.len(),
            final_loss: last.loss,
            final_accuracy: last.accuracy,
            rng_seed: config.rng_seed,
        },
    };
    Ok((checkpoint, history))
}
