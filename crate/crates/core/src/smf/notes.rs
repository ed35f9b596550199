use alloc::collections::VecDeque;
use alloc::vec::Vec;

use super::{EventKind, MidiFile};

/// A sounded note with its timing in ticks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoteEvent {
    pub pitch: u8,
    pub onset_tick: u64,
    /// Always at least 1.
    pub duration_tick: u64,
    pub velocity: u8,
    pub channel: u8,
}

/// Pairs NoteOn/NoteOff events into notes, across all tracks.
///
/// Overlapping notes of the same pitch and channel are paired first-on,
/// first-off. Notes still sounding at the end of their track are closed at
/// the track's last tick; orphan NoteOffs and zero-length notes are dropped.
/// The result is sorted by onset, then pitch.
pub fn extract_notes(file: &MidiFile) -> Vec<NoteEvent> {
    let mut notes = Vec::new();
    for track in &file.tracks {
        // (channel, pitch) -> FIFO of (onset, velocity)
        let mut open: Vec<VecDeque<(u64, u8)>> = Vec::new();
        open.resize_with(16 * 128, VecDeque::new);
        let slot = |channel: u8, pitch: u8| usize::from(channel & 0x0F) * 128 + usize::from(pitch & 0x7F);

        for event in track {
            match event.kind {
                EventKind::NoteOn {
                    channel,
                    pitch,
                    velocity,
                } => open[slot(channel, pitch)].push_back((event.tick, velocity)),
                EventKind::NoteOff { channel, pitch, .. } => {
                    if let Some((onset, velocity)) = open[slot(channel, pitch)].pop_front() {
                        push_note(&mut notes, pitch, onset, event.tick, velocity, channel);
                    }
                }
                _ => {}
            }
        }

        let end = track.last().map_or(0, |e| e.tick);
        for (index, queue) in open.iter_mut().enumerate() {
            let channel = (index / 128) as u8;
            let pitch = (index % 128) as u8;
            for (onset, velocity) in queue.drain(..) {
                push_note(&mut notes, pitch, onset, end, velocity, channel);
            }
        }
    }
    notes.sort_by_key(|n| (n.onset_tick, n.pitch, n.channel, n.duration_tick));
    notes
}

fn push_note(notes: &mut Vec<NoteEvent>, pitch: u8, onset: u64, off: u64, velocity: u8, channel: u8) {
    if off > onset {
        notes.push(NoteEvent {
            pitch,
            onset_tick: onset,
            duration_tick: off - onset,
            velocity,
            channel,
        });
    }
}
