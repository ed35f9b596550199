use alloc::vec::Vec;

use super::{EventKind, MidiFile};

/// Tempo in effect before the first SetTempo: 120 BPM.
pub const DEFAULT_TEMPO: u32 = 500_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TempoChange {
    pub tick: u64,
    pub micros_per_quarter: u32,
}

/// All SetTempo events of every track, ordered by tick.
pub fn tempo_map(file: &MidiFile) -> Vec<TempoChange> {
    let mut map: Vec<TempoChange> = file
        .tracks
        .iter()
        .flatten()
        .filter_map(|e| match e.kind {
            EventKind::SetTempo { micros_per_quarter } => Some(TempoChange {
                tick: e.tick,
                micros_per_quarter,
            }),
            _ => None,
        })
        .collect();
    map.sort_by_key(|t| t.tick);
    map
}

/// Wall-clock position of `tick`, integrating over the tempo segments.
pub fn tick_to_seconds(tick: u64, tempo_map: &[TempoChange], division: u16) -> f64 {
    let ticks_per_quarter = f64::from(division.max(1));
    let mut seconds = 0.0;
    let mut seg_start = 0u64;
    let mut tempo = DEFAULT_TEMPO;
    for change in tempo_map {
        if change.tick >= tick {
            break;
        }
        seconds += (change.tick - seg_start) as f64 * f64::from(tempo) / ticks_per_quarter;
        seg_start = change.tick;
        tempo = change.micros_per_quarter;
    }
    seconds += (tick - seg_start) as f64 * f64::from(tempo) / ticks_per_quarter;
    seconds / 1e6
}

/// Time of the last event in the file.
pub fn file_duration_seconds(file: &MidiFile) -> f64 {
    tick_to_seconds(file.last_tick(), &tempo_map(file), file.division)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn tempo(tick: u64, micros: u32) -> TempoChange {
        TempoChange { tick, micros_per_quarter: micros }
    }

    #[test]
    fn default_tempo_quarter() {
        assert_eq!(tick_to_seconds(480, &[], 480), 0.5);
        assert_eq!(tick_to_seconds(0, &[], 480), 0.0);
        assert_eq!(tick_to_seconds(0, &[tempo(0, 250_000)], 480), 0.0);
    }

    #[test]
    fn two_segments() {
        // 480 ticks at 0.5 s/quarter, then 480 at 0.25 s/quarter
        assert!((tick_to_seconds(960, &[tempo(480, 250_000)], 480) - 0.75).abs() < 1e-12);
        // a tempo change exactly at the query tick does not apply yet
        assert!((tick_to_seconds(480, &[tempo(480, 250_000)], 480) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn map_is_sorted_across_tracks() {
        use crate::smf::{Format, TrackEvent};
        let mut f = MidiFile::new(Format::Parallel, 96);
        f.tracks.push(vec![TrackEvent::new(50, EventKind::SetTempo { micros_per_quarter: 1 })]);
        f.tracks.push(vec![TrackEvent::new(10, EventKind::SetTempo { micros_per_quarter: 2 })]);
        assert_eq!(tempo_map(&f), vec![tempo(10, 2), tempo(50, 1)]);
    }

    proptest! {
        #[test]
        fn monotone_in_tick(
            changes in proptest::collection::vec((0u64..5000, 1u32..2_000_000), 0..6),
            a in 0u64..10_000,
            b in 0u64..10_000,
            division in 1u16..2000,
        ) {
            let mut map: Vec<_> = changes.into_iter().map(|(t, m)| tempo(t, m)).collect();
            map.sort_by_key(|t| t.tick);
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(tick_to_seconds(lo, &map, division) <= tick_to_seconds(hi, &map, division));
        }
    }
}
