use std::fmt::Write;

use melodyforge_core::pianoroll::{pitch_to_frequency, pitch_to_name};
use melodyforge_core::smf::{extract_notes, file_duration_seconds, parse_smf, tempo_map, tick_to_seconds, Format, SmfError};

/// Notes listed individually by [`describe`].
pub const LISTED_NOTES: usize = 16;

fn format_name(f: Format) -> &'static str {
    match f {
        Format::SingleTrack => "single track",
        Format::Parallel => "parallel tracks",
        Format::Sequential => "sequential tracks",
    }
}

/// Text summary of an SMF: header fields, counts, tempo map, duration and
/// the first [`LISTED_NOTES`] notes.
pub fn describe(bytes: &[u8]) -> Result<String, SmfError> {
    let midi = parse_smf(bytes)?;
    let notes = extract_notes(&midi);
    let tempos = tempo_map(&midi);
    let duration = file_duration_seconds(&midi);
    let mut out = String::new();
    let w = &mut out;
    // writing into a String cannot fail
    let _ = writeln!(w, "format:   {} ({})", midi.format.as_word(), format_name(midi.format));
    let _ = writeln!(w, "division: {} ticks per quarter", midi.division);
    let _ = writeln!(w, "tracks:   {}", midi.tracks.len());
    let _ = writeln!(w, "events:   {}", midi.event_count());
    let _ = writeln!(w, "notes:    {}", notes.len());
    let _ = writeln!(w, "duration: {duration:.1} s");
    if tempos.is_empty() {
        let _ = writeln!(w, "tempo map: none (120 BPM default)");
    } else {
        let _ = writeln!(w, "tempo map:");
        for t in &tempos {
            let _ = writeln!(
                w,
                "  tick {:>8}  {:>8} us/quarter  {:7.2} BPM",
                t.tick,
                t.micros_per_quarter,
                60_000_000.0 / f64::from(t.micros_per_quarter)
            );
        }
    }
    let _ = writeln!(w, "{} notes, {duration:.1} s", notes.len());
    if !notes.is_empty() {
        let _ = writeln!(w, "first notes:");
        let _ = writeln!(w, "  {:>9}  {:>9}  {:>5}  {:<4}  {:>9}  {:>3}  {:>2}", "onset s", "length s", "pitch", "name", "Hz", "vel", "ch");
        for n in notes.iter().take(LISTED_NOTES) {
            let start = tick_to_seconds(n.onset_tick, &tempos, midi.division);
            let end = tick_to_seconds(n.onset_tick + n.duration_tick, &tempos, midi.division);
            let pitch = u32::from(n.pitch);
            let _ = writeln!(
                w,
                "  {:>9.3}  {:>9.3}  {:>5}  {:<4}  {:>9.2}  {:>3}  {:>2}",
                start,
                end - start,
                n.pitch,
                pitch_to_name(pitch).unwrap_or_default(),
                pitch_to_frequency(pitch).unwrap_or(f64::NAN),
                n.velocity,
                n.channel
            );
        }
    }
    Ok(out)
}
