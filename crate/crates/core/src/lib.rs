//! Core of the melodyforge workbench.
//!
//! Everything in this crate is pure computation over in-memory values and
//! builds under `#![no_std]` with `alloc`:
//!
//! - [`smf`]: Standard MIDI File codec, note extraction and tempo-aware timing.
//! - [`pianoroll`]: the 130-token melody vocabulary, one-hot vectors and the
//!   note name / frequency arithmetic.
//! - [`autodiff`]: the dense `f64` kernel with hand-written backward passes and
//!   a finite-difference gradient checker.
//! - [`model`]: bi-directional LSTM encoder, Luong attention and the
//!   input-feeding LSTM decoder, with full backpropagation through time.
//! - [`trainer`]: windowing, Adam, early stopping and metrics.
//! - [`checkpoint`]: the versioned binary checkpoint format.
//! - [`generator`]: autoregressive sampling from a seed to a target duration.
//!
//! File system access, the CLI and the HTTP service live in the `melodyforge`
//! crate.

#![no_std]

extern crate alloc;

pub mod autodiff;
pub mod checkpoint;
pub mod generator;
pub mod model;
pub mod pianoroll;
pub mod smf;
pub mod trainer;

/// Seedable generator used for initialization, shuffling and sampling.
///
/// ChaCha with 8 rounds: the stream for a given seed is fixed by the
/// algorithm, so results reproduce across platforms and process restarts.
pub type Rng = rand_chacha::ChaCha8Rng;

/// Builds the crate-wide [`Rng`] from a 64-bit seed.
pub fn rng_from_seed(seed: u64) -> Rng {
    use rand::SeedableRng;
    Rng::seed_from_u64(seed)
}
