use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use melodyforge_core::pianoroll::{to_token_sequence, PianoRollError, TokenSequence, Vocabulary};
use melodyforge_core::smf::{extract_notes, parse_smf, SmfError};

/// General MIDI percussion channel (channel 10, zero-based 9).
pub const DRUM_CHANNEL: u8 = 9;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("no MIDI files found in {}", .0.display())]
    NoMidiFiles(PathBuf),
    #[error("cannot read {}: {source}", .path.display())]
    Io { path: PathBuf, source: io::Error },
}

#[derive(Debug, thiserror::Error)]
pub enum SequenceError {
    #[error(transparent)]
    Parse(#[from] SmfError),
    #[error("no melodic notes")]
    NoNotes,
    #[error(transparent)]
    Tokens(#[from] PianoRollError),
}

#[derive(Debug)]
pub struct SkippedFile {
    pub path: PathBuf,
    pub reason: String,
}

#[derive(Debug, Default)]
pub struct Corpus {
    pub sequences: Vec<TokenSequence>,
    /// Source of each entry in `sequences`.
    pub files: Vec<PathBuf>,
    pub skipped: Vec<SkippedFile>,
}

fn is_midi(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("mid") || e.eq_ignore_ascii_case("midi"))
}

/// `.mid`/`.midi` files under `dir`, recursively, in path order.
pub fn midi_files(dir: &Path) -> Result<Vec<PathBuf>, CorpusError> {
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| CorpusError::Io { path, source }
    };
    let mut found = Vec::new();
    let mut pending = vec![dir.to_path_buf()];
    while let Some(d) = pending.pop() {
        for entry in fs::read_dir(&d).map_err(io_err(&d))? {
            let path = entry.map_err(io_err(&d))?.path();
            if path.is_dir() {
                pending.push(path);
            } else if is_midi(&path) {
                found.push(path);
            }
        }
    }
    found.sort();
    Ok(found)
}

/// Melody tokens of one MIDI file. Percussion on [`DRUM_CHANNEL`] is ignored.
pub fn sequence_from_midi(bytes: &[u8], vocab: Vocabulary) -> Result<TokenSequence, SequenceError> {
    let midi = parse_smf(bytes)?;
    let notes: Vec<_> = extract_notes(&midi)
        .into_iter()
        .filter(|n| n.channel != DRUM_CHANNEL)
        .collect();
    if notes.is_empty() {
        return Err(SequenceError::NoNotes);
    }
    Ok(to_token_sequence(&notes, midi.division, vocab)?)
}

/// Loads every usable MIDI file under `dir`. Files that fail to parse or
/// hold no melodic notes are listed in `skipped`; `sequences` may end up
/// empty.
pub fn load_corpus(dir: &Path, vocab: Vocabulary) -> Result<Corpus, CorpusError> {
    let paths = midi_files(dir)?;
    if paths.is_empty() {
        return Err(CorpusError::NoMidiFiles(dir.to_path_buf()));
    }
    let mut corpus = Corpus::default();
    for path in &paths {
        let bytes = fs::read(path).map_err(|source| CorpusError::Io {
            path: path.clone(),
            source,
        })?;
        match sequence_from_midi(&bytes, vocab) {
            Ok(seq) => {
                corpus.sequences.push(seq);
                corpus.files.push(path.clone());
            }
            Err(e) => corpus.skipped.push(SkippedFile {
                path: path.clone(),
                reason: e.to_string(),
            }),
        }
    }
    Ok(corpus)
}
