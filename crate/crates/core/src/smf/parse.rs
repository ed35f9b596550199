use alloc::vec::Vec;

use super::vlq::read_vlq;
use super::{EventKind, Format, MidiFile, SmfError, TrackEvent};

const META_END_OF_TRACK: u8 = 0x2F;
const META_SET_TEMPO: u8 = 0x51;
const META_TIME_SIGNATURE: u8 = 0x58;

/// Parses a complete Standard MIDI File.
///
/// Delta times are accumulated into absolute ticks, running status is
/// resolved and NoteOn with velocity 0 becomes NoteOff. Chunks other than
/// `MThd`/`MTrk` are skipped. A track without an explicit EndOfTrack gets
/// one at its last tick.
pub fn parse_smf(bytes: &[u8]) -> Result<MidiFile, SmfError> {
    if bytes.len() < 4 || &bytes[..4] != b"MThd" {
        return Err(SmfError::BadMagic);
    }
    let header_len = be_u32(bytes, 4).ok_or(SmfError::TruncatedChunk)? as usize;
    if header_len < 6 {
        return Err(SmfError::MalformedHeader("header chunk shorter than 6 bytes"));
    }
    let header = bytes.get(8..8 + header_len).ok_or(SmfError::TruncatedChunk)?;
    let format = Format::from_word(u16::from_be_bytes([header[0], header[1]]))?;
    let declared = u16::from_be_bytes([header[2], header[3]]);
    let division = u16::from_be_bytes([header[4], header[5]]);
    if division & 0x8000 != 0 {
        return Err(SmfError::UnsupportedSmpteDivision);
    }
    if division == 0 {
        return Err(SmfError::MalformedHeader("division is zero"));
    }

    let mut tracks = Vec::with_capacity(usize::from(declared));
    let mut pos = 8 + header_len;
    while pos < bytes.len() {
        if bytes.len() - pos < 8 {
            if tracks.len() == usize::from(declared) {
                // trailing padding after the last track
                break;
            }
            return Err(SmfError::TruncatedChunk);
        }
        let tag = &bytes[pos..pos + 4];
        let len = be_u32(bytes, pos + 4).ok_or(SmfError::TruncatedChunk)? as usize;
        let body_start = pos + 8;
        let body = body_start
            .checked_add(len)
            .and_then(|end| bytes.get(body_start..end))
            .ok_or(SmfError::TruncatedChunk)?;
        if tag == b"MTrk" {
            let index = tracks.len();
            tracks.push(parse_track(body, index)?);
        }
        pos = body_start + len;
    }

    if tracks.len() != usize::from(declared) {
        return Err(SmfError::TrackCountMismatch {
            declared,
            found: tracks.len(),
        });
    }
    Ok(MidiFile {
        format,
        division,
        tracks,
    })
}

fn be_u32(bytes: &[u8], at: usize) -> Option<u32> {
    let b = bytes.get(at..at + 4)?;
    Some(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
}

struct TrackReader<'a> {
    data: &'a [u8],
    pos: usize,
    track: usize,
}

impl<'a> TrackReader<'a> {
    fn malformed(&self) -> SmfError {
        SmfError::MalformedEvent {
            track: self.track,
            offset: self.pos,
        }
    }

    fn byte(&mut self) -> Result<u8, SmfError> {
        let b = *self.data.get(self.pos).ok_or_else(|| self.malformed())?;
        self.pos += 1;
        Ok(b)
    }

    fn data_byte(&mut self) -> Result<u8, SmfError> {
        let b = self.byte()?;
        if b & 0x80 != 0 {
            self.pos -= 1;
            return Err(self.malformed());
        }
        Ok(b)
    }

    fn vlq(&mut self) -> Result<u32, SmfError> {
        let (value, used) = read_vlq(&self.data[self.pos..]).map_err(|_| self.malformed())?;
        self.pos += used;
        Ok(value)
    }

    fn slice(&mut self, len: usize) -> Result<&'a [u8], SmfError> {
        let end = self.pos.checked_add(len).ok_or_else(|| self.malformed())?;
        let s = self.data.get(self.pos..end).ok_or_else(|| self.malformed())?;
        self.pos = end;
        Ok(s)
    }
}

fn parse_track(data: &[u8], track: usize) -> Result<Vec<TrackEvent>, SmfError> {
    let mut r = TrackReader { data, pos: 0, track };
    let mut events = Vec::new();
    let mut tick = 0u64;
    let mut running: Option<u8> = None;

    while r.pos < data.len() {
        tick += u64::from(r.vlq()?);
        let status = match data.get(r.pos) {
            Some(&b) if b & 0x80 != 0 => {
                r.pos += 1;
                b
            }
            Some(_) => running.ok_or_else(|| r.malformed())?,
            None => return Err(r.malformed()),
        };

        let kind = match status {
            0x80..=0xEF => {
                running = Some(status);
                channel_event(&mut r, status)?
            }
            0xFF => {
                running = None;
                let kind = r.byte()?;
                let len = r.vlq()? as usize;
                let payload = r.slice(len)?;
                meta_event(kind, payload)
            }
            0xF0 | 0xF7 => {
                running = None;
                let len = r.vlq()? as usize;
                EventKind::SysEx {
                    status,
                    data: r.slice(len)?.to_vec(),
                }
            }
            _ => {
                r.pos -= 1;
                return Err(r.malformed());
            }
        };
        let done = kind == EventKind::EndOfTrack;
        events.push(TrackEvent { tick, kind });
        if done {
            return Ok(events);
        }
    }

    events.push(TrackEvent {
        tick,
        kind: EventKind::EndOfTrack,
    });
    Ok(events)
}

fn channel_event(r: &mut TrackReader<'_>, status: u8) -> Result<EventKind, SmfError> {
    let channel = status & 0x0F;
    Ok(match status & 0xF0 {
        0x80 => {
            let pitch = r.data_byte()?;
            let velocity = r.data_byte()?;
            EventKind::NoteOff {
                channel,
                pitch,
                velocity,
            }
        }
        0x90 => {
            let pitch = r.data_byte()?;
            let velocity = r.data_byte()?;
            if velocity == 0 {
                EventKind::NoteOff {
                    channel,
                    pitch,
                    velocity: 0,
                }
            } else {
                EventKind::NoteOn {
                    channel,
                    pitch,
                    velocity,
                }
            }
        }
        0xC0 => EventKind::ProgramChange {
            channel,
            program: r.data_byte()?,
        },
        0xD0 => EventKind::OtherChannel {
            status,
            data: alloc::vec![r.data_byte()?],
        },
        _ => {
            let a = r.data_byte()?;
            let b = r.data_byte()?;
            EventKind::OtherChannel {
                status,
                data: alloc::vec![a, b],
            }
        }
    })
}

fn meta_event(kind: u8, payload: &[u8]) -> EventKind {
    match (kind, payload.len()) {
        (META_END_OF_TRACK, _) => EventKind::EndOfTrack,
        (META_SET_TEMPO, 3) => {
            let micros = u32::from_be_bytes([0, payload[0], payload[1], payload[2]]);
            if micros == 0 {
                EventKind::OtherMeta {
                    kind,
                    data: payload.to_vec(),
                }
            } else {
                EventKind::SetTempo {
                    micros_per_quarter: micros,
                }
            }
        }
        (META_TIME_SIGNATURE, 4) => EventKind::TimeSignature {
            numerator: payload[0],
            denominator_power: payload[1],
            clocks_per_click: payload[2],
            thirty_seconds_per_quarter: payload[3],
        },
        _ => EventKind::OtherMeta {
            kind,
            data: payload.to_vec(),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn header(format: u16, tracks: u16, division: u16) -> Vec<u8> {
        let mut v = b"MThd".to_vec();
        v.extend_from_slice(&6u32.to_be_bytes());
        v.extend_from_slice(&format.to_be_bytes());
        v.extend_from_slice(&tracks.to_be_bytes());
        v.extend_from_slice(&division.to_be_bytes());
        v
    }

    fn track(body: &[u8]) -> Vec<u8> {
        let mut v = b"MTrk".to_vec();
        v.extend_from_slice(&(body.len() as u32).to_be_bytes());
        v.extend_from_slice(body);
        v
    }

    #[test]
    fn minimal_file() {
        let mut bytes = header(0, 1, 480);
        bytes.extend(track(&[0x00, 0xFF, 0x2F, 0x00]));
        let f = parse_smf(&bytes).unwrap();
        assert_eq!(f.format, Format::SingleTrack);
        assert_eq!(f.division, 480);
        assert_eq!(f.tracks, vec![vec![TrackEvent::new(0, EventKind::EndOfTrack)]]);
    }

    #[test]
    fn running_status_and_zero_velocity() {
        let mut bytes = header(0, 1, 96);
        // NoteOn 60 at 0, running-status NoteOn 60 vel 0 at 96, EOT
        bytes.extend(track(&[
            0x00, 0x90, 60, 100, 0x60, 60, 0x00, 0x00, 0xFF, 0x2F, 0x00,
        ]));
        let f = parse_smf(&bytes).unwrap();
        assert_eq!(
            f.tracks[0],
            vec![
                TrackEvent::new(0, EventKind::NoteOn { channel: 0, pitch: 60, velocity: 100 }),
                TrackEvent::new(96, EventKind::NoteOff { channel: 0, pitch: 60, velocity: 0 }),
                TrackEvent::new(96, EventKind::EndOfTrack),
            ]
        );
    }

    #[test]
    fn meta_and_sysex_kept() {
        let mut bytes = header(1, 1, 480);
        bytes.extend(track(&[
            0x00, 0xFF, 0x51, 0x03, 0x07, 0xA1, 0x20, // tempo 500000
            0x00, 0xFF, 0x58, 0x04, 4, 2, 24, 8, // 4/4
            0x00, 0xFF, 0x03, 0x02, b'h', b'i', // track name
            0x00, 0xF0, 0x02, 0x7E, 0xF7, // sysex
            0x00, 0xB0, 7, 100, // controller
            0x00, 0xC1, 5, // program
            0x00, 0xFF, 0x2F, 0x00,
        ]));
        let f = parse_smf(&bytes).unwrap();
        let kinds: Vec<_> = f.tracks[0].iter().map(|e| e.kind.clone()).collect();
        assert_eq!(
            kinds,
            vec![
                EventKind::SetTempo { micros_per_quarter: 500_000 },
                EventKind::TimeSignature {
                    numerator: 4,
                    denominator_power: 2,
                    clocks_per_click: 24,
                    thirty_seconds_per_quarter: 8
                },
                EventKind::OtherMeta { kind: 0x03, data: b"hi".to_vec() },
                EventKind::SysEx { status: 0xF0, data: vec![0x7E, 0xF7] },
                EventKind::OtherChannel { status: 0xB0, data: vec![7, 100] },
                EventKind::ProgramChange { channel: 1, program: 5 },
                EventKind::EndOfTrack,
            ]
        );
    }

    #[test]
    fn missing_end_of_track_is_appended() {
        let mut bytes = header(0, 1, 480);
        bytes.extend(track(&[0x10, 0x90, 60, 1]));
        let f = parse_smf(&bytes).unwrap();
        assert_eq!(f.tracks[0].last(), Some(&TrackEvent::new(16, EventKind::EndOfTrack)));
    }

    #[test]
    fn header_errors() {
        assert_eq!(parse_smf(b"RIFF\0\0\0\0WAVE"), Err(SmfError::BadMagic));
        assert_eq!(parse_smf(b""), Err(SmfError::BadMagic));
        assert_eq!(parse_smf(&header(0, 1, 0xE728)), Err(SmfError::UnsupportedSmpteDivision));
        assert_eq!(parse_smf(&header(3, 1, 480)), Err(SmfError::UnsupportedFormat(3)));
        assert!(matches!(parse_smf(&header(0, 1, 0)), Err(SmfError::MalformedHeader(_))));
        assert_eq!(parse_smf(&header(0, 1, 480)[..10]), Err(SmfError::TruncatedChunk));
    }

    #[test]
    fn chunk_errors() {
        let mut bytes = header(1, 2, 480);
        bytes.extend(track(&[0x00, 0xFF, 0x2F, 0x00]));
        assert_eq!(
            parse_smf(&bytes),
            Err(SmfError::TrackCountMismatch { declared: 2, found: 1 })
        );

        let mut bytes = header(0, 1, 480);
        let t = track(&[0x00, 0xFF, 0x2F, 0x00]);
        bytes.extend_from_slice(&t[..t.len() - 2]);
        assert_eq!(parse_smf(&bytes), Err(SmfError::TruncatedChunk));
    }

    #[test]
    fn unknown_chunks_skipped() {
        let mut bytes = header(0, 1, 480);
        bytes.extend_from_slice(b"XFIH\0\0\0\x02ab");
        bytes.extend(track(&[0x00, 0xFF, 0x2F, 0x00]));
        assert_eq!(parse_smf(&bytes).unwrap().tracks.len(), 1);
    }

    #[test]
    fn malformed_events() {
        // data byte with no running status
        let mut bytes = header(0, 1, 480);
        bytes.extend(track(&[0x00, 0x40, 0x40]));
        assert!(matches!(parse_smf(&bytes), Err(SmfError::MalformedEvent { .. })));
        // meta length past the chunk
        let mut bytes = header(0, 1, 480);
        bytes.extend(track(&[0x00, 0xFF, 0x01, 0x09, b'x']));
        assert!(matches!(parse_smf(&bytes), Err(SmfError::MalformedEvent { .. })));
        // system real-time status inside a file
        let mut bytes = header(0, 1, 480);
        bytes.extend(track(&[0x00, 0xF8]));
        assert!(matches!(parse_smf(&bytes), Err(SmfError::MalformedEvent { .. })));
    }
}
