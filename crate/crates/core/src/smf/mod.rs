//! Standard MIDI File codec.
//!
//! [`parse_smf`] turns raw `.mid` bytes into a [`MidiFile`] with absolute
//! tick timestamps; [`serialize_smf`] writes one back. The round trip is
//! value-exact: running status is resolved on input, delta times are
//! re-encoded minimally on output, and unknown meta and sysex events are
//! carried through as raw bytes.

mod notes;
mod parse;
mod timing;
mod vlq;
mod write;

use alloc::vec::Vec;

pub use notes::{extract_notes, NoteEvent};
pub use parse::parse_smf;
pub use timing::{file_duration_seconds, tempo_map, tick_to_seconds, TempoChange, DEFAULT_TEMPO};
pub use vlq::{read_vlq, write_vlq, VLQ_MAX};
pub use write::serialize_smf;

/// Errors from reading or writing SMF data.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SmfError {
    #[error("unexpected end of data")]
    UnexpectedEof,
    #[error("variable-length quantity not terminated within 4 bytes")]
    UnterminatedVlq,
    #[error("value {0} does not fit in a 28-bit variable-length quantity")]
    ValueTooLarge(u64),
    #[error("not a Standard MIDI File (missing MThd header)")]
    BadMagic,
    #[error("chunk extends past the end of the file")]
    TruncatedChunk,
    #[error("SMPTE time division is not supported")]
    UnsupportedSmpteDivision,
    #[error("header declares {declared} tracks but {found} were found")]
    TrackCountMismatch { declared: u16, found: usize },
    #[error("unsupported SMF format {0}")]
    UnsupportedFormat(u16),
    #[error("malformed header: {0}")]
    MalformedHeader(&'static str),
    #[error("malformed event at byte {offset} of track {track}")]
    MalformedEvent { track: usize, offset: usize },
    #[error("invalid MIDI file value: {0}")]
    InvariantViolation(&'static str),
}

/// SMF header format word.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    /// Format 0: one multi-channel track.
    SingleTrack,
    /// Format 1: simultaneous tracks.
    Parallel,
    /// Format 2: independent sequences, passed through as plain tracks.
    Sequential,
}

impl Format {
    pub fn from_word(word: u16) -> Result<Self, SmfError> {
        match word {
            0 => Ok(Format::SingleTrack),
            1 => Ok(Format::Parallel),
            2 => Ok(Format::Sequential),
            other => Err(SmfError::UnsupportedFormat(other)),
        }
    }

    pub fn as_word(self) -> u16 {
        match self {
            Format::SingleTrack => 0,
            Format::Parallel => 1,
            Format::Sequential => 2,
        }
    }
}

/// Payload of a track event.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EventKind {
    NoteOn { channel: u8, pitch: u8, velocity: u8 },
    /// Also produced for a NoteOn carrying velocity 0.
    NoteOff { channel: u8, pitch: u8, velocity: u8 },
    SetTempo { micros_per_quarter: u32 },
    ProgramChange { channel: u8, program: u8 },
    TimeSignature {
        numerator: u8,
        denominator_power: u8,
        clocks_per_click: u8,
        thirty_seconds_per_quarter: u8,
    },
    EndOfTrack,
    /// Any meta event not decoded above, with its data bytes.
    OtherMeta { kind: u8, data: Vec<u8> },
    /// Any other channel voice message: status byte (with channel) and its
    /// one or two data bytes.
    OtherChannel { status: u8, data: Vec<u8> },
    /// `F0` sysex or `F7` escape; `data` excludes the status and length.
    SysEx { status: u8, data: Vec<u8> },
}

/// An event at an absolute tick.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrackEvent {
    pub tick: u64,
    pub kind: EventKind,
}

impl TrackEvent {
    pub fn new(tick: u64, kind: EventKind) -> Self {
        TrackEvent { tick, kind }
    }
}

/// A parsed Standard MIDI File.
///
/// Only ticks-per-quarter-note division is representable; every track is in
/// non-decreasing tick order and ends with [`EventKind::EndOfTrack`] once it
/// has gone through [`parse_smf`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MidiFile {
    pub format: Format,
    /// Ticks per quarter note, always positive.
    pub division: u16,
    pub tracks: Vec<Vec<TrackEvent>>,
}

impl MidiFile {
    /// A file with no tracks.
    pub fn new(format: Format, division: u16) -> Self {
        MidiFile {
            format,
            division,
            tracks: Vec::new(),
        }
    }

    pub fn event_count(&self) -> usize {
        self.tracks.iter().map(Vec::len).sum()
    }

    /// Latest tick of any event in any track.
    pub fn last_tick(&self) -> u64 {
        self.tracks
            .iter()
            .filter_map(|t| t.last())
            .map(|e| e.tick)
            .max()
            .unwrap_or(0)
    }
}
