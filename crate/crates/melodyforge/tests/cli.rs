mod common;

use std::fs;

use common::{fixture_dir, melodyforge, random_model};
use melodyforge::core::checkpoint::save_checkpoint;
use melodyforge::core::smf::{extract_notes, file_duration_seconds, parse_smf, serialize_smf, EventKind, Format, MidiFile, TrackEvent};

fn stdout(o: &std::process::Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &std::process::Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_model(dir: &std::path::Path, hidden: usize) -> String {
    let path = dir.join("model.mfck");
    fs::write(&path, save_checkpoint(&random_model(hidden, 3))).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn inspect_fixture() {
    let path = fixture_dir().join("k525short.mid");
    let out = melodyforge(&["inspect", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    for field in ["format:", "division:", "tracks:", "events:", "notes:", "tempo map", "duration:", "first notes:", "Hz"] {
        assert!(text.contains(field), "missing {field}:\n{text}");
    }
}

#[test]
fn inspect_empty_track() {
    let dir = tempfile::tempdir().unwrap();
    let mut midi = MidiFile::new(Format::SingleTrack, 480);
    midi.tracks.push(vec![TrackEvent::new(0, EventKind::EndOfTrack)]);
    let path = dir.path().join("empty.mid");
    fs::write(&path, serialize_smf(&midi).unwrap()).unwrap();
    let out = melodyforge(&["inspect", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("0 notes, 0.0 s"));
}

#[test]
fn inspect_truncated() {
    let dir = tempfile::tempdir().unwrap();
    let bytes = fs::read(fixture_dir().join("test02.mid")).unwrap();
    let path = dir.path().join("cut.mid");
    fs::write(&path, &bytes[..bytes.len() / 2]).unwrap();
    let out = melodyforge(&["inspect", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("chunk extends past the end of the file"), "{}", stderr(&out));
}

#[test]
fn train_on_empty_dir() {
    let dir = tempfile::tempdir().unwrap();
    let out = melodyforge(&["train", "--data", dir.path().to_str().unwrap(), "--out", "/dev/null"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("no MIDI files found"));
}

#[test]
fn train_skips_corrupt_files() {
    let data = tempfile::tempdir().unwrap();
    fs::copy(fixture_dir().join("test06.mid"), data.path().join("good.mid")).unwrap();
    fs::write(data.path().join("bad.mid"), b"RIFF not a midi file").unwrap();
    let out_dir = tempfile::tempdir().unwrap();
    let model = out_dir.path().join("m.mfck");
    let out = melodyforge(&[
        "train", "--data", data.path().to_str().unwrap(), "--out", model.to_str().unwrap(),
        "--epochs", "2", "--hidden", "4", "--window", "16", "--stride", "16",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stderr(&out).contains("warning: skipping") && stderr(&out).contains("bad.mid"));
    assert!(stdout(&out).contains("training on 1 files (1 skipped)"));
    assert!(stdout(&out).contains("epoch    2"));
    let csv = fs::read_to_string(model.with_extension("csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "epoch,loss,accuracy,seconds");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("1,"));

    let midi = out_dir.path().join("g.mid");
    let gen = melodyforge(&[
        "generate", "--model", model.to_str().unwrap(), "--out", midi.to_str().unwrap(), "--seconds", "5",
    ]);
    assert!(gen.status.success(), "{}", stderr(&gen));
}

#[test]
fn train_with_only_corrupt_files() {
    let data = tempfile::tempdir().unwrap();
    fs::write(data.path().join("bad.mid"), b"junk").unwrap();
    let out = melodyforge(&["train", "--data", data.path().to_str().unwrap(), "--out", "/dev/null"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("bad.mid"));
}

#[test]
fn generate_defaults_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let model = write_model(dir.path(), 8);
    let a = dir.path().join("a.mid");
    let b = dir.path().join("b.mid");
    let tokens = dir.path().join("a.txt");
    for (out, extra) in [(&a, true), (&b, false)] {
        let mut args = vec!["generate", "--model", &model, "--out", out.to_str().unwrap(), "--seed-notes", "A4", "--rng-seed", "7"];
        if extra {
            args.extend(["--tokens", tokens.to_str().unwrap()]);
        }
        let o = melodyforge(&args);
        assert!(o.status.success(), "{}", stderr(&o));
        assert!(stdout(&o).contains("120.0 s nominal"), "{}", stdout(&o));
        assert!(stdout(&o).contains("rng seed 7"));
    }
    let bytes = fs::read(&a).unwrap();
    assert_eq!(bytes, fs::read(&b).unwrap());
    let midi = parse_smf(&bytes).unwrap();
    assert!((file_duration_seconds(&midi) - 120.0).abs() <= 6.0);
    assert_eq!(extract_notes(&midi)[0].pitch, 69);
    let text = fs::read_to_string(&tokens).unwrap();
    assert_eq!(text.lines().count(), 961);
    assert_eq!(text.lines().next(), Some("69"));
    assert_eq!(text.lines().last(), Some("129"));
}

#[test]
fn generate_errors() {
    let dir = tempfile::tempdir().unwrap();
    let model = write_model(dir.path(), 4);
    let out = dir.path().join("x.mid");
    let out = out.to_str().unwrap();

    let bad_seed = melodyforge(&["generate", "--model", &model, "--out", out, "--seed-notes", "H9"]);
    assert_eq!(bad_seed.status.code(), Some(3));

    let junk = dir.path().join("junk.mfck");
    fs::write(&junk, b"not a checkpoint").unwrap();
    let bad_model = melodyforge(&["generate", "--model", junk.to_str().unwrap(), "--out", out]);
    assert_eq!(bad_model.status.code(), Some(2));
    assert!(stderr(&bad_model).contains("bad magic"));

    let missing = melodyforge(&["generate", "--model", "/nonexistent.mfck", "--out", out]);
    assert_eq!(missing.status.code(), Some(2));
    let none = melodyforge(&["generate", "--out", out]);
    assert_eq!(none.status.code(), Some(2));
}

#[test]
fn model_env_overrides_flag() {
    let dir = tempfile::tempdir().unwrap();
    let model = write_model(dir.path(), 4);
    let out = dir.path().join("e.mid");
    let o = std::process::Command::new(env!("CARGO_BIN_EXE_melodyforge"))
        .args(["generate", "--model", "/nonexistent.mfck", "--out", out.to_str().unwrap(), "--seconds", "3"])
        .env("MELODYFORGE_MODEL", &model)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(out.exists());
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(melodyforge(&["train"]).status.code(), Some(2));
    assert_eq!(melodyforge(&["bogus"]).status.code(), Some(2));
    assert!(melodyforge(&["--help"]).status.success());
}
