use alloc::vec::Vec;

use super::vlq::{push_vlq, VLQ_MAX};
use super::{EventKind, MidiFile, SmfError, TrackEvent};

/// Serializes `file` to SMF bytes.
///
/// Every event carries an explicit status byte and minimal delta times.
/// A track missing its EndOfTrack gets one at its last tick. Values that
/// could not come back out of [`parse_smf`](super::parse_smf) unchanged are
/// rejected with [`SmfError::InvariantViolation`].
pub fn serialize_smf(file: &MidiFile) -> Result<Vec<u8>, SmfError> {
    if file.division == 0 || file.division & 0x8000 != 0 {
        return Err(SmfError::InvariantViolation("division must be in 1..=32767"));
    }
    let track_count = u16::try_from(file.tracks.len())
        .map_err(|_| SmfError::InvariantViolation("too many tracks"))?;

    let mut out = Vec::new();
    out.extend_from_slice(b"MThd");
    out.extend_from_slice(&6u32.to_be_bytes());
    out.extend_from_slice(&file.format.as_word().to_be_bytes());
    out.extend_from_slice(&track_count.to_be_bytes());
    out.extend_from_slice(&file.division.to_be_bytes());

    for track in &file.tracks {
        let body = encode_track(track)?;
        out.extend_from_slice(b"MTrk");
        let len = u32::try_from(body.len())
            .map_err(|_| SmfError::InvariantViolation("track too long"))?;
        out.extend_from_slice(&len.to_be_bytes());
        out.extend_from_slice(&body);
    }
    Ok(out)
}

fn encode_track(track: &[TrackEvent]) -> Result<Vec<u8>, SmfError> {
    let mut body = Vec::new();
    let mut prev = 0u64;
    let mut ended = false;
    for event in track {
        if ended {
            return Err(SmfError::InvariantViolation("EndOfTrack must be the last event"));
        }
        if event.tick < prev {
            return Err(SmfError::InvariantViolation("events out of tick order"));
        }
        let delta = event.tick - prev;
        if delta > u64::from(VLQ_MAX) {
            return Err(SmfError::ValueTooLarge(delta));
        }
        push_vlq(&mut body, delta as u32)?;
        encode_kind(&mut body, &event.kind)?;
        ended = event.kind == EventKind::EndOfTrack;
        prev = event.tick;
    }
    if !ended {
        body.extend_from_slice(&[0x00, 0xFF, 0x2F, 0x00]);
    }
    Ok(body)
}

fn check(cond: bool, what: &'static str) -> Result<(), SmfError> {
    if cond {
        Ok(())
    } else {
        Err(SmfError::InvariantViolation(what))
    }
}

fn push_meta(out: &mut Vec<u8>, kind: u8, data: &[u8]) -> Result<(), SmfError> {
    out.push(0xFF);
    out.push(kind);
    push_len(out, data.len())?;
    out.extend_from_slice(data);
    Ok(())
}

fn push_len(out: &mut Vec<u8>, len: usize) -> Result<(), SmfError> {
    let len = u32::try_from(len).map_err(|_| SmfError::ValueTooLarge(len as u64))?;
    push_vlq(out, len)
}

fn encode_kind(out: &mut Vec<u8>, kind: &EventKind) -> Result<(), SmfError> {
    match *kind {
        EventKind::NoteOn {
            channel,
            pitch,
            velocity,
        }
        | EventKind::NoteOff {
            channel,
            pitch,
            velocity,
        } => {
            check(channel < 16, "channel out of range")?;
            check(pitch < 128, "pitch out of range")?;
            check(velocity < 128, "velocity out of range")?;
            let base = if matches!(kind, EventKind::NoteOn { .. }) { 0x90 } else { 0x80 };
            out.extend_from_slice(&[base | channel, pitch, velocity]);
        }
        EventKind::ProgramChange { channel, program } => {
            check(channel < 16, "channel out of range")?;
            check(program < 128, "program out of range")?;
            out.extend_from_slice(&[0xC0 | channel, program]);
        }
        EventKind::SetTempo { micros_per_quarter } => {
            check(
                micros_per_quarter > 0 && micros_per_quarter <= 0xFF_FFFF,
                "tempo out of range",
            )?;
            let b = micros_per_quarter.to_be_bytes();
            push_meta(out, 0x51, &b[1..])?;
        }
        EventKind::TimeSignature {
            numerator,
            denominator_power,
            clocks_per_click,
            thirty_seconds_per_quarter,
        } => push_meta(
            out,
            0x58,
            &[numerator, denominator_power, clocks_per_click, thirty_seconds_per_quarter],
        )?,
        EventKind::EndOfTrack => push_meta(out, 0x2F, &[])?,
        EventKind::OtherMeta { kind, ref data } => {
            check(kind != 0x2F, "EndOfTrack stored as raw meta")?;
            let decodable_tempo = kind == 0x51 && data.len() == 3 && data.iter().any(|&b| b != 0);
            check(!decodable_tempo, "SetTempo stored as raw meta")?;
            check(!(kind == 0x58 && data.len() == 4), "TimeSignature stored as raw meta")?;
            push_meta(out, kind, data)?;
        }
        EventKind::OtherChannel { status, ref data } => {
            let expected = match status & 0xF0 {
                0xA0 | 0xB0 | 0xE0 => 2,
                0xD0 => 1,
                _ => return Err(SmfError::InvariantViolation("status has a dedicated variant or is not a channel message")),
            };
            check(data.len() == expected, "wrong data length for channel message")?;
            check(data.iter().all(|&b| b < 0x80), "channel data byte out of range")?;
            out.push(status);
            out.extend_from_slice(data);
        }
        EventKind::SysEx { status, ref data } => {
            check(status == 0xF0 || status == 0xF7, "sysex status must be F0 or F7")?;
            out.push(status);
            push_len(out, data.len())?;
            out.extend_from_slice(data);
        }
    }
    Ok(())
}
