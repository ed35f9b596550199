//! File-system, command-line and HTTP front ends for `melodyforge-core`.
//!
//! - [`corpus`]: turns a directory of `.mid` files into training sequences.
//! - [`files`]: checkpoint files and the metrics CSV.
//! - [`inspect`]: human-readable summary of a MIDI file.
//! - [`request`]: generation request defaults and validation.
//! - [`service`]: the axum generation service.
//! - [`cli`]: the `melodyforge` command.

pub mod cli;
pub mod corpus;
pub mod files;
pub mod inspect;
pub mod request;
pub mod service;

pub use melodyforge_core as core;
