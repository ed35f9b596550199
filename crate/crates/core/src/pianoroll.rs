//! Melody tokens on a fixed time grid.
//!
//! A [`TokenSequence`] holds one token per grid step: a MIDI pitch (0–127)
//! for the highest note sounding in that step, [`REST`] for silence, and a
//! trailing [`END`]. Also here: note names and equal-temperament
//! frequencies.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::smf::{EventKind, Format, MidiFile, NoteEvent, TrackEvent};

pub const VOCAB_SIZE: usize = 130;
pub const REST: usize = 128;
pub const END: usize = 129;

/// Velocity and channel used for decoded notes.
pub const DECODE_VELOCITY: u8 = 80;
pub const DECODE_CHANNEL: u8 = 0;
pub const DEFAULT_DIVISION: u16 = 480;
pub const DEFAULT_TEMPO_BPM: f64 = 120.0;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PianoRollError {
    #[error("no notes to encode")]
    EmptyInput,
    #[error("token {0} is outside the vocabulary")]
    TokenOutOfRange(usize),
    #[error("pitch {0} is outside 0..=127")]
    PitchOutOfRange(u32),
    #[error("cannot parse note name {0:?}")]
    InvalidNoteName(String),
    #[error("invalid token sequence: {0}")]
    InvalidSequence(&'static str),
}

/// The token alphabet and its time grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Vocabulary {
    /// Grid steps per quarter note; 4 means sixteenth-note steps.
    pub steps_per_quarter: u32,
}

impl Default for Vocabulary {
    fn default() -> Self {
        Vocabulary {
            steps_per_quarter: 4,
        }
    }
}

impl Vocabulary {
    pub fn new(steps_per_quarter: u32) -> Self {
        assert!(steps_per_quarter > 0, "grid must be positive");
        Vocabulary { steps_per_quarter }
    }

    pub const fn size(&self) -> usize {
        VOCAB_SIZE
    }

    /// Seconds covered by one grid step at `tempo_bpm`.
    pub fn step_seconds(&self, tempo_bpm: f64) -> f64 {
        60.0 / tempo_bpm / f64::from(self.steps_per_quarter)
    }
}

/// Tokens on a grid; END, if present, is last.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSequence {
    tokens: Vec<usize>,
    steps_per_quarter: u32,
}

impl TokenSequence {
    pub fn new(tokens: Vec<usize>, vocab: Vocabulary) -> Result<Self, PianoRollError> {
        if let Some(&bad) = tokens.iter().find(|&&t| t >= VOCAB_SIZE) {
            return Err(PianoRollError::TokenOutOfRange(bad));
        }
        if let Some(pos) = tokens.iter().position(|&t| t == END) {
            if pos + 1 != tokens.len() {
                return Err(PianoRollError::InvalidSequence("END before the last position"));
            }
        }
        Ok(TokenSequence {
            tokens,
            steps_per_quarter: vocab.steps_per_quarter,
        })
    }

    pub fn tokens(&self) -> &[usize] {
        &self.tokens
    }

    pub fn into_tokens(self) -> Vec<usize> {
        self.tokens
    }

    pub fn vocabulary(&self) -> Vocabulary {
        Vocabulary::new(self.steps_per_quarter)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Number of grid steps, i.e. tokens excluding END.
    pub fn steps(&self) -> usize {
        self.tokens.iter().take_while(|&&t| t != END).count()
    }

    /// Newline-delimited integers, one token per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for t in &self.tokens {
            out.push_str(&format!("{t}\n"));
        }
        out
    }

    pub fn from_text(text: &str, vocab: Vocabulary) -> Result<Self, PianoRollError> {
        let mut tokens = Vec::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            let t: usize = line
                .parse()
                .map_err(|_| PianoRollError::InvalidSequence("non-integer token line"))?;
            tokens.push(t);
        }
        TokenSequence::new(tokens, vocab)
    }
}

fn quantize(tick: u64, division: u16, steps_per_quarter: u32) -> u64 {
    let division = u64::from(division.max(1));
    (2 * tick * u64::from(steps_per_quarter) + division) / (2 * division)
}

/// Quantizes notes onto the grid and reduces them to a melody.
///
/// Every step covered by at least one note takes the highest such pitch;
/// uncovered steps become REST. A note shorter than a step still claims the
/// step it starts in. END is appended after the last step.
pub fn to_token_sequence(
    notes: &[NoteEvent],
    division: u16,
    vocab: Vocabulary,
) -> Result<TokenSequence, PianoRollError> {
    if notes.is_empty() {
        return Err(PianoRollError::EmptyInput);
    }
    let spans: Vec<(usize, usize, usize)> = notes
        .iter()
        .map(|n| {
            let start = quantize(n.onset_tick, division, vocab.steps_per_quarter) as usize;
            let end = quantize(n.onset_tick + n.duration_tick, division, vocab.steps_per_quarter) as usize;
            (start, end.max(start + 1), usize::from(n.pitch.min(127)))
        })
        .collect();
    let total = spans.iter().map(|s| s.1).max().unwrap_or(0);

    let mut tokens = vec![REST; total];
    for &(start, end, pitch) in &spans {
        for slot in &mut tokens[start..end] {
            if *slot == REST || *slot < pitch {
                *slot = pitch;
            }
        }
    }
    tokens.push(END);
    TokenSequence::new(tokens, vocab)
}

pub fn one_hot(token: usize, vocab: &Vocabulary) -> Result<Vec<f64>, PianoRollError> {
    if token >= vocab.size() {
        return Err(PianoRollError::TokenOutOfRange(token));
    }
    let mut v = vec![0.0; vocab.size()];
    v[token] = 1.0;
    Ok(v)
}

fn step_tick(step: usize, division: u16, steps_per_quarter: u32) -> u64 {
    step as u64 * u64::from(division) / u64::from(steps_per_quarter)
}

/// Turns tokens back into a single-track MIDI file.
///
/// Runs of the same pitch become one sustained note, REST advances time and
/// END stops decoding. The track opens with a SetTempo for `tempo_bpm` and
/// its EndOfTrack sits at the end of the last step, so the file's duration
/// is exactly `steps * step_seconds`.
pub fn decode_tokens(seq: &TokenSequence, tempo_bpm: f64, division: u16) -> MidiFile {
    let spq = seq.steps_per_quarter;
    let micros = libm::round(60_000_000.0 / tempo_bpm).clamp(1.0, f64::from(0xFF_FFFFu32)) as u32;

    let mut events = vec![TrackEvent::new(
        0,
        EventKind::SetTempo {
            micros_per_quarter: micros,
        },
    )];
    let mut sounding: Option<(usize, u8)> = None;
    let close = |events: &mut Vec<TrackEvent>, start: usize, end: usize, pitch: u8| {
        events.push(TrackEvent::new(
            step_tick(start, division, spq),
            EventKind::NoteOn {
                channel: DECODE_CHANNEL,
                pitch,
                velocity: DECODE_VELOCITY,
            },
        ));
        events.push(TrackEvent::new(
            step_tick(end, division, spq),
            EventKind::NoteOff {
                channel: DECODE_CHANNEL,
                pitch,
                velocity: 0,
            },
        ));
    };

    let mut step = 0;
    for &token in seq.tokens() {
        if token == END {
            break;
        }
        match sounding {
            Some((_, p)) if usize::from(p) == token => {}
            Some((start, p)) => {
                close(&mut events, start, step, p);
                sounding = None;
            }
            None => {}
        }
        if token < 128 && sounding.is_none() {
            sounding = Some((step, token as u8));
        }
        step += 1;
    }
    if let Some((start, p)) = sounding {
        close(&mut events, start, step, p);
    }
    // NoteOff sorts before NoteOn at a shared tick
    events.sort_by_key(|e| (e.tick, !matches!(e.kind, EventKind::SetTempo { .. } | EventKind::NoteOff { .. })));
    events.push(TrackEvent::new(step_tick(step, division, spq), EventKind::EndOfTrack));

    MidiFile {
        format: Format::SingleTrack,
        division,
        tracks: vec![events],
    }
}

fn check_pitch(pitch: u32) -> Result<u8, PianoRollError> {
    u8::try_from(pitch)
        .ok()
        .filter(|&p| p < 128)
        .ok_or(PianoRollError::PitchOutOfRange(pitch))
}

/// Equal-tempered frequency with A4 (pitch 69) at 440 Hz.
pub fn pitch_to_frequency(pitch: u32) -> Result<f64, PianoRollError> {
    let p = check_pitch(pitch)?;
    Ok(440.0 * libm::exp2((f64::from(p) - 69.0) / 12.0))
}

const NAMES: [&str; 12] = ["C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B"];

/// Scientific pitch name, C4 = 60.
pub fn pitch_to_name(pitch: u32) -> Result<String, PianoRollError> {
    let p = i32::from(check_pitch(pitch)?);
    Ok(format!("{}{}", NAMES[(p % 12) as usize], p / 12 - 1))
}

/// Parses a name like `A4`, `C#5`, `Eb3` or `C-1` into a MIDI pitch.
pub fn name_to_pitch(name: &str) -> Result<u8, PianoRollError> {
    let invalid = || PianoRollError::InvalidNoteName(String::from(name));
    let s = name.trim();
    let mut chars = s.chars();
    let letter = chars.next().ok_or_else(invalid)?;
    let base: i32 = match letter.to_ascii_uppercase() {
        'C' => 0,
        'D' => 2,
        'E' => 4,
        'F' => 5,
        'G' => 7,
        'A' => 9,
        'B' => 11,
        _ => return Err(invalid()),
    };
    let rest = chars.as_str();
    let (shift, octave) = if let Some(r) = rest.strip_prefix('#') {
        (1, r)
    } else if let Some(r) = rest.strip_prefix('b') {
        (-1, r)
    } else {
        (0, rest)
    };
    if octave.is_empty() || octave.starts_with('+') {
        return Err(invalid());
    }
    let octave: i32 = octave.parse().map_err(|_| invalid())?;
    let pitch = (octave + 1)
        .checked_mul(12)
        .and_then(|x| x.checked_add(base + shift))
        .ok_or_else(invalid)?;
    if (0..128).contains(&pitch) {
        Ok(pitch as u8)
    } else {
        Err(invalid())
    }
}

/// Parses a comma-separated list of note names.
pub fn parse_note_list(list: &str) -> Result<Vec<u8>, PianoRollError> {
    let pitches = list
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(name_to_pitch)
        .collect::<Result<Vec<_>, _>>()?;
    if pitches.is_empty() {
        return Err(PianoRollError::InvalidNoteName(String::from(list)));
    }
    Ok(pitches)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smf::{extract_notes, parse_smf, serialize_smf};
    use proptest::prelude::*;

    fn note(pitch: u8, onset: u64, duration: u64) -> NoteEvent {
        NoteEvent {
            pitch,
            onset_tick: onset,
            duration_tick: duration,
            velocity: 64,
            channel: 0,
        }
    }

    const DIV: u16 = 480;
    const STEP: u64 = 120;

    fn tokens(notes: &[NoteEvent]) -> Vec<usize> {
        to_token_sequence(notes, DIV, Vocabulary::default()).unwrap().into_tokens()
    }

    #[test]
    fn encode_examples() {
        assert_eq!(tokens(&[note(69, 0, STEP)]), [69, END]);
        assert_eq!(
            tokens(&[note(60, 0, STEP), note(64, 0, STEP), note(67, 0, STEP)]),
            [67, END]
        );
        assert_eq!(tokens(&[note(62, 0, STEP), note(65, 2 * STEP, STEP)]), [62, REST, 65, END]);
        assert_eq!(
            to_token_sequence(&[], DIV, Vocabulary::default()),
            Err(PianoRollError::EmptyInput)
        );
    }

    #[test]
    fn encode_quantizes_and_keeps_short_notes() {
        // a 10-tick grace note still fills its step; onset 50 rounds to step 0
        assert_eq!(tokens(&[note(70, 50, 10)]), [70, END]);
        // onset 61 rounds up to step 1
        assert_eq!(tokens(&[note(70, 61, STEP)]), [REST, 70, END]);
        // skyline across overlapping notes of different lengths
        assert_eq!(
            tokens(&[note(60, 0, 3 * STEP), note(72, STEP, STEP)]),
            [60, 72, 60, END]
        );
    }

    #[test]
    fn one_hot_examples() {
        let v = Vocabulary::default();
        let first = one_hot(0, &v).unwrap();
        assert_eq!(first.len(), 130);
        assert_eq!(first[0], 1.0);
        assert_eq!(first.iter().sum::<f64>(), 1.0);
        assert_eq!(one_hot(129, &v).unwrap()[129], 1.0);
        assert_eq!(one_hot(130, &v), Err(PianoRollError::TokenOutOfRange(130)));
    }

    #[test]
    fn sequence_invariants() {
        let v = Vocabulary::default();
        assert!(TokenSequence::new(vec![60, END], v).is_ok());
        assert_eq!(
            TokenSequence::new(vec![END, 60], v),
            Err(PianoRollError::InvalidSequence("END before the last position"))
        );
        assert_eq!(TokenSequence::new(vec![131], v), Err(PianoRollError::TokenOutOfRange(131)));
        let s = TokenSequence::new(vec![60, REST, END], v).unwrap();
        assert_eq!(s.steps(), 2);
        assert_eq!(s.to_text(), "60\n128\n129\n");
        assert_eq!(TokenSequence::from_text(&s.to_text(), v).unwrap(), s);
    }

    #[test]
    fn decode_merges_runs() {
        let seq = TokenSequence::new(vec![69, 69, END], Vocabulary::default()).unwrap();
        let file = decode_tokens(&seq, 120.0, DIV);
        let notes = extract_notes(&file);
        assert_eq!(notes.len(), 1);
        assert_eq!(notes[0].pitch, 69);
        assert_eq!(notes[0].duration_tick, 2 * STEP);
        assert_eq!(notes[0].velocity, DECODE_VELOCITY);
        assert_eq!(
            file.tracks[0][0].kind,
            EventKind::SetTempo { micros_per_quarter: 500_000 }
        );
    }

    #[test]
    fn decode_rest_only() {
        let seq = TokenSequence::new(vec![REST, END], Vocabulary::default()).unwrap();
        let file = decode_tokens(&seq, 120.0, DIV);
        assert!(extract_notes(&file).is_empty());
        assert_eq!(file.last_tick(), STEP);
        let back = parse_smf(&serialize_smf(&file).unwrap()).unwrap();
        assert_eq!(back, file);
    }

    #[test]
    fn frequencies() {
        assert_eq!(pitch_to_frequency(69).unwrap(), 440.0);
        assert_eq!(pitch_to_frequency(81).unwrap(), 880.0);
        // 440 / 2^(9/12), evaluated independently
        let c4 = 440.0 / 2f64.powf(0.75);
        assert!((pitch_to_frequency(60).unwrap() - c4).abs() < 1e-9);
        assert!((pitch_to_frequency(60).unwrap() - 261.6256).abs() < 1e-3);
        assert_eq!(pitch_to_frequency(128), Err(PianoRollError::PitchOutOfRange(128)));
    }

    #[test]
    fn names() {
        assert_eq!(pitch_to_name(69).unwrap(), "A4");
        assert_eq!(pitch_to_name(60).unwrap(), "C4");
        assert_eq!(pitch_to_name(61).unwrap(), "C#4");
        assert_eq!(pitch_to_name(0).unwrap(), "C-1");
        assert_eq!(pitch_to_name(127).unwrap(), "G9");
        assert!(pitch_to_name(200).is_err());

        assert_eq!(name_to_pitch("A4"), Ok(69));
        assert_eq!(name_to_pitch("Db4"), Ok(61));
        assert_eq!(name_to_pitch("c-1"), Ok(0));
        assert_eq!(name_to_pitch("G9"), Ok(127));
        for bad in ["H9", "X4", "G#9", "A", "", "A+4", "Cb-1", "A4x"] {
            assert!(name_to_pitch(bad).is_err(), "{bad}");
        }
        assert_eq!(parse_note_list("A4, C5,E5"), Ok(vec![69, 72, 76]));
        assert!(parse_note_list(" , ").is_err());
    }

    proptest! {
        #[test]
        fn one_hot_is_binary_simplex(t in 0usize..130) {
            let v = one_hot(t, &Vocabulary::default()).unwrap();
            prop_assert!(v.iter().all(|&x| x == 0.0 || x == 1.0));
            prop_assert_eq!(v.iter().sum::<f64>(), 1.0);
        }

        #[test]
        fn octave_doubles_frequency(p in 0u32..=115) {
            let lo = pitch_to_frequency(p).unwrap();
            let hi = pitch_to_frequency(p + 12).unwrap();
            prop_assert!((hi - 2.0 * lo).abs() <= 1e-12 * hi);
        }

        #[test]
        fn names_round_trip(p in 0u32..128) {
            prop_assert_eq!(u32::from(name_to_pitch(&pitch_to_name(p).unwrap()).unwrap()), p);
        }

        // Random monophonic melodies on the grid: decoding keeps the pitch
        // at every step and re-encoding reproduces the tokens.
        #[test]
        fn decode_then_encode_is_identity(
            runs in proptest::collection::vec((prop_oneof![3 => 40usize..90, 1 => Just(REST)], 1usize..5), 1..20),
            spq in prop_oneof![Just(2u32), Just(4), Just(8)],
        ) {
            let mut raw: Vec<usize> = runs.iter().flat_map(|&(t, n)| core::iter::repeat_n(t, n)).collect();
            while raw.last() == Some(&REST) { raw.pop(); }
            prop_assume!(!raw.is_empty());
            raw.push(END);
            let vocab = Vocabulary::new(spq);
            let seq = TokenSequence::new(raw.clone(), vocab).unwrap();
            let file = decode_tokens(&seq, 100.0, DIV);
            let back = to_token_sequence(&extract_notes(&file), DIV, vocab).unwrap();
            prop_assert_eq!(back.tokens(), &raw[..]);
        }

        #[test]
        fn encoded_length_matches_duration(
            notes in proptest::collection::vec((30u8..100, 0u64..4000, 1u64..1000), 1..12),
        ) {
            let notes: Vec<_> = notes.into_iter().map(|(p, o, d)| note(p, o, d)).collect();
            let seq = to_token_sequence(&notes, DIV, Vocabulary::default()).unwrap();
            // independent: latest rounded end, in grid steps, of any note
            let last_end = notes.iter().map(|n| {
                let s = ((n.onset_tick as f64) / STEP as f64 + 0.5).floor() as usize;
                let e = (((n.onset_tick + n.duration_tick) as f64) / STEP as f64 + 0.5).floor() as usize;
                e.max(s + 1)
            }).max().unwrap();
            prop_assert_eq!(seq.len(), last_end + 1);
            prop_assert_eq!(*seq.tokens().last().unwrap(), END);
        }
    }
}
