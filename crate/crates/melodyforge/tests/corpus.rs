mod common;

use std::fs;

use common::fixture_dir;
use melodyforge::core::pianoroll::{Vocabulary, END};
use melodyforge::core::smf::{serialize_smf, EventKind, Format, MidiFile, TrackEvent};
use melodyforge::corpus::{load_corpus, midi_files, sequence_from_midi, CorpusError, SequenceError};

fn note(tick: u64, channel: u8, pitch: u8, on: bool) -> TrackEvent {
    let kind = if on {
        EventKind::NoteOn { channel, pitch, velocity: 90 }
    } else {
        EventKind::NoteOff { channel, pitch, velocity: 0 }
    };
    TrackEvent::new(tick, kind)
}

fn drum_and_bass() -> Vec<u8> {
    let mut midi = MidiFile::new(Format::SingleTrack, 4);
    midi.tracks.push(vec![
        note(0, 9, 90, true),
        note(0, 0, 40, true),
        note(1, 9, 90, false),
        note(2, 0, 40, false),
        note(3, 9, 36, true),
        note(4, 9, 36, false),
        TrackEvent::new(4, EventKind::EndOfTrack),
    ]);
    serialize_smf(&midi).unwrap()
}

#[test]
fn drums_are_not_melody() {
    let seq = sequence_from_midi(&drum_and_bass(), Vocabulary::default()).unwrap();
    assert_eq!(seq.tokens(), &[40, 40, END]);
}

#[test]
fn drums_only_file_has_no_notes() {
    let mut midi = MidiFile::new(Format::SingleTrack, 4);
    midi.tracks.push(vec![note(0, 9, 36, true), note(1, 9, 36, false), TrackEvent::new(1, EventKind::EndOfTrack)]);
    let err = sequence_from_midi(&serialize_smf(&midi).unwrap(), Vocabulary::default()).unwrap_err();
    assert!(matches!(err, SequenceError::NoNotes));
}

#[test]
fn fixture_corpus() {
    let corpus = load_corpus(&fixture_dir(), Vocabulary::default()).unwrap();
    assert_eq!(corpus.sequences.len(), 22);
    assert_eq!(corpus.files.len(), 22);
    assert_eq!(corpus.skipped.len(), 1);
    let skipped = &corpus.skipped[0];
    assert!(skipped.path.ends_with("test04.mid"));
    assert!(skipped.reason.contains("18 tracks but 19"), "{}", skipped.reason);
    assert!(corpus.sequences.iter().any(|s| s.len() > 3000));
}

#[test]
fn recursive_and_sorted() {
    let dir = tempfile::tempdir().unwrap();
    fs::create_dir(dir.path().join("sub")).unwrap();
    fs::write(dir.path().join("b.MID"), drum_and_bass()).unwrap();
    fs::write(dir.path().join("sub/a.midi"), drum_and_bass()).unwrap();
    fs::write(dir.path().join("notes.txt"), "x").unwrap();
    let files = midi_files(dir.path()).unwrap();
    assert_eq!(files, vec![dir.path().join("b.MID"), dir.path().join("sub/a.midi")]);
    let corpus = load_corpus(dir.path(), Vocabulary::default()).unwrap();
    assert_eq!(corpus.sequences.len(), 2);
}

#[test]
fn empty_and_missing_dirs() {
    let dir = tempfile::tempdir().unwrap();
    let err = load_corpus(dir.path(), Vocabulary::default()).unwrap_err();
    assert!(matches!(err, CorpusError::NoMidiFiles(_)));
    let err = load_corpus(&dir.path().join("nope"), Vocabulary::default()).unwrap_err();
    assert!(matches!(err, CorpusError::Io { .. }));
}
