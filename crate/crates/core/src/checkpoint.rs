//! Binary checkpoint format.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "MFCK"                       magic
//! u16                          format version (1)
//! u32                          metadata length in bytes
//! [u8; len]                    UTF-8 metadata, one `key=value` per line
//! f32 × param_count            tensors in `tensors` order, each row-major
//! ```
//!
//! Metadata keys: `vocab`, `hidden`, `decoder_hidden`, `steps_per_quarter`,
//! `tensors` (comma-separated names), `epochs`, `final_loss`,
//! `final_accuracy`, `rng_seed`. Unknown keys are ignored.
//!
//! Weights are stored as `f32`. A model is rounded to `f32` precision when
//! training finishes ([`ModelParams::round_to_f32`]), so a loaded model is
//! bit-identical to the one that was saved.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::model::{ModelDims, ModelParams, TENSOR_NAMES};
use crate::pianoroll::Vocabulary;

pub const MAGIC: [u8; 4] = *b"MFCK";
pub const FORMAT_VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CheckpointError {
    #[error("not a melodyforge checkpoint (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    VersionUnsupported(u16),
    #[error("checkpoint dimensions are inconsistent: {0}")]
    DimensionMismatch(String),
    #[error("checkpoint is truncated")]
    TruncatedFile,
    #[error("malformed checkpoint metadata: {0}")]
    MalformedMetadata(String),
}

/// How the stored model was trained.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TrainingSummary {
    pub epochs_run: usize,
    pub final_loss: f64,
    pub final_accuracy: f64,
    pub rng_seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelCheckpoint {
    pub params: ModelParams,
    pub vocabulary: Vocabulary,
    pub training: TrainingSummary,
}

impl ModelCheckpoint {
    pub fn dims(&self) -> ModelDims {
        self.params.dims
    }
}

fn metadata_text(m: &ModelCheckpoint) -> String {
    let d = m.params.dims;
    let t = &m.training;
    let mut s = String::new();
    let mut line = |k: &str, v: String| {
        s.push_str(k);
        s.push('=');
        s.push_str(&v);
        s.push('\n');
    };
    line("vocab", d.vocab.to_string());
    line("hidden", d.hidden.to_string());
    line("decoder_hidden", d.decoder_hidden().to_string());
    line("steps_per_quarter", m.vocabulary.steps_per_quarter.to_string());
    line("tensors", TENSOR_NAMES.join(","));
    line("epochs", t.epochs_run.to_string());
    line("final_loss", format!("{}", t.final_loss));
    line("final_accuracy", format!("{}", t.final_accuracy));
    line("rng_seed", t.rng_seed.to_string());
    s
}

pub fn save_checkpoint(m: &ModelCheckpoint) -> Vec<u8> {
    let meta = metadata_text(m);
    let mut out = Vec::with_capacity(10 + meta.len() + 4 * m.params.param_count());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(meta.len() as u32).to_le_bytes());
    out.extend_from_slice(meta.as_bytes());
    for (_, tensor) in m.params.tensors() {
        for &v in tensor.data() {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out
}

struct Metadata<'a> {
    pairs: Vec<(&'a str, &'a str)>,
}

impl<'a> Metadata<'a> {
    fn parse(text: &'a str) -> Result<Self, CheckpointError> {
        let mut pairs = Vec::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CheckpointError::MalformedMetadata(format!("line without '=': {line:?}")))?;
            pairs.push((k.trim(), v.trim()));
        }
        Ok(Metadata { pairs })
    }

    fn raw(&self, key: &str) -> Option<&'a str> {
        self.pairs.iter().find(|(k, _)| *k == key).map(|(_, v)| *v)
    }

    fn required<T: core::str::FromStr>(&self, key: &str) -> Result<T, CheckpointError> {
        let raw = self
            .raw(key)
            .ok_or_else(|| CheckpointError::DimensionMismatch(format!("missing {key}")))?;
        raw.parse()
            .map_err(|_| CheckpointError::MalformedMetadata(format!("{key}={raw}")))
    }

    fn optional<T: core::str::FromStr + Default>(&self, key: &str) -> Result<T, CheckpointError> {
        match self.raw(key) {
            None => Ok(T::default()),
            Some(raw) => raw
                .parse()
                .map_err(|_| CheckpointError::MalformedMetadata(format!("{key}={raw}"))),
        }
    }
}

fn take<'a>(bytes: &'a [u8], pos: &mut usize, n: usize) -> Result<&'a [u8], CheckpointError> {
    let end = pos.checked_add(n).ok_or(CheckpointError::TruncatedFile)?;
    let slice = bytes.get(*pos..end).ok_or(CheckpointError::TruncatedFile)?;
    *pos = end;
    Ok(slice)
}

pub fn load_checkpoint(bytes: &[u8]) -> Result<ModelCheckpoint, CheckpointError> {
    let mut pos = 0;
    let magic = take(bytes, &mut pos, 4).map_err(|_| CheckpointError::BadMagic)?;
    if magic != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let version = u16::from_le_bytes(take(bytes, &mut pos, 2)?.try_into().expect("2 bytes"));
    if version != FORMAT_VERSION {
        return Err(CheckpointError::VersionUnsupported(version));
    }
    let meta_len = u32::from_le_bytes(take(bytes, &mut pos, 4)?.try_into().expect("4 bytes")) as usize;
    let meta_bytes = take(bytes, &mut pos, meta_len)?;
    let text = core::str::from_utf8(meta_bytes)
        .map_err(|_| CheckpointError::MalformedMetadata("metadata is not UTF-8".to_string()))?;
    let meta = Metadata::parse(text)?;

    let vocab: usize = meta.required("vocab")?;
    let hidden: usize = meta.required("hidden")?;
    let decoder_hidden: usize = meta.required("decoder_hidden")?;
    let steps_per_quarter: u32 = meta.required("steps_per_quarter")?;
    if vocab == 0 || hidden == 0 || steps_per_quarter == 0 {
        return Err(CheckpointError::DimensionMismatch("zero-sized dimension".to_string()));
    }
    if decoder_hidden != 2 * hidden {
        return Err(CheckpointError::DimensionMismatch(format!(
            "decoder_hidden {decoder_hidden} is not twice hidden {hidden}"
        )));
    }
    if let Some(names) = meta.raw("tensors") {
        if !names.split(',').map(str::trim).eq(TENSOR_NAMES.iter().copied()) {
            return Err(CheckpointError::DimensionMismatch(format!("unexpected tensor list {names}")));
        }
    }
    let training = TrainingSummary {
        epochs_run: meta.optional("epochs")?,
        final_loss: meta.optional("final_loss")?,
        final_accuracy: meta.optional("final_accuracy")?,
        rng_seed: meta.optional("rng_seed")?,
    };

    let dims = ModelDims::new(vocab, hidden);
    // Guard against absurd headers before allocating.
    let expected = ModelParams::param_count_for(dims)
        .and_then(|n| n.checked_mul(4))
        .ok_or(CheckpointError::TruncatedFile)?;
    if bytes.len() - pos < expected {
        return Err(CheckpointError::TruncatedFile);
    }
    if bytes.len() - pos > expected {
        return Err(CheckpointError::DimensionMismatch(format!(
            "{} bytes after the declared tensors",
            bytes.len() - pos - expected
        )));
    }
    let mut params = ModelParams::zeros(dims);
    for (_, tensor) in params.tensors_mut() {
        for v in tensor.data_mut() {
            let raw = take(bytes, &mut pos, 4)?;
            *v = f64::from(f32::from_le_bytes(raw.try_into().expect("4 bytes")));
        }
    }
    Ok(ModelCheckpoint {
        params,
        vocabulary: Vocabulary::new(steps_per_quarter),
        training,
    })
}
