//! The `melodyforge` command.
//!
//! Exit codes: 0 success, 1 other failures, 2 unusable corpus, checkpoint or
//! MIDI file (and usage errors), 3 unparseable seed note names.

use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use melodyforge_core::generator::generate;
use melodyforge_core::pianoroll::{decode_tokens, Vocabulary, DEFAULT_DIVISION};
use melodyforge_core::smf::{extract_notes, serialize_smf};
use melodyforge_core::trainer::{train_with_observer, EpochMetrics, TrainingConfig, TrainingObserver};

use crate::corpus::load_corpus;
use crate::files::{read_checkpoint, write_checkpoint, FileError, MetricsLog};
use crate::inspect::describe;
use crate::request::{resolve_request, RequestError, RequestFields};
use crate::service::{serve, ServiceConfig};

/// Overrides `--model` for `generate` and `serve`.
pub const MODEL_ENV: &str = "MELODYFORGE_MODEL";

pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_BAD_INPUT: u8 = 2;
pub const EXIT_BAD_SEED: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "melodyforge", version, about = "Train a melody model on MIDI files and generate new melodies")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model on a directory of MIDI files.
    Train(TrainArgs),
    /// Generate a melody from a seed and write it as a MIDI file.
    Generate(GenerateArgs),
    /// Summarize a MIDI file.
    Inspect(InspectArgs),
    /// Run the HTTP generation service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Directory searched recursively for .mid files.
    #[arg(long)]
    pub data: PathBuf,
    /// Checkpoint to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Metrics CSV; defaults to the checkpoint path with a .csv extension.
    #[arg(long)]
    pub metrics: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    pub epochs: usize,
    #[arg(long, default_value_t = 64)]
    pub window: usize,
    #[arg(long, default_value_t = 32)]
    pub stride: usize,
    /// Encoder hidden size per direction.
    #[arg(long, default_value_t = 128)]
    pub hidden: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    /// Windows per optimizer step.
    #[arg(long, default_value_t = 32)]
    pub batch: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Stop once an epoch's token accuracy reaches this.
    #[arg(long, default_value_t = 0.93)]
    pub stop_acc: f64,
    /// Always run the full number of epochs.
    #[arg(long)]
    pub no_early_stop: bool,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Checkpoint to load; the MELODYFORGE_MODEL environment variable takes precedence.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// MIDI file to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Comma-separated note names such as "A4,C5"; a random pitch when omitted.
    #[arg(long)]
    pub seed_notes: Option<String>,
    #[arg(long, default_value_t = 120.0)]
    pub seconds: f64,
    /// 0 always picks the most likely token.
    #[arg(long, default_value_t = 1.0)]
    pub temperature: f64,
    #[arg(long)]
    pub rng_seed: Option<u64>,
    /// Also write the generated tokens, one per line.
    #[arg(long)]
    pub tokens: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    pub file: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Checkpoint to serve; the MELODYFORGE_MODEL environment variable takes precedence.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub bind: SocketAddr,
    #[arg(long, default_value_t = ServiceConfig::DEFAULT_MAX_CONCURRENT)]
    pub max_concurrent: usize,
    #[arg(long, default_value_t = ServiceConfig::DEFAULT_MAX_SECONDS)]
    pub max_seconds: f64,
    /// Built studio UI to serve at /.
    #[arg(long)]
    pub static_dir: Option<PathBuf>,
}

fn fail(code: u8, message: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(code)
}

fn model_path(flag: Option<PathBuf>) -> Option<PathBuf> {
    std::env::var_os(MODEL_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
        .or(flag)
}

struct ProgressObserver {
    started: Instant,
    log: MetricsLog,
    write_error: Option<FileError>,
}

impl TrainingObserver for ProgressObserver {
    fn elapsed_seconds(&self) -> f64 {
        self.started.elapsed().as_secs_f64()
    }

    fn on_epoch(&mut self, m: &EpochMetrics) {
        println!(
            "epoch {:>4}  loss {:.4}  accuracy {:.4}  {:>7.1} s",
            m.epoch, m.loss, m.accuracy, m.seconds
        );
        if self.write_error.is_none() {
            self.write_error = self.log.append(m).err();
        }
    }
}

pub fn train(args: TrainArgs) -> ExitCode {
    let vocab = Vocabulary::default();
    let corpus = match load_corpus(&args.data, vocab) {
        Ok(c) => c,
        Err(e) => return fail(EXIT_BAD_INPUT, e),
    };
    for s in &corpus.skipped {
        eprintln!("warning: skipping {}: {}", s.path.display(), s.reason);
    }
    let needed = args.window + 1;
    let mut sequences = Vec::new();
    for (seq, path) in corpus.sequences.into_iter().zip(&corpus.files) {
        if seq.len() < needed {
            eprintln!(
                "warning: skipping {}: {} tokens, a window needs {needed}",
                path.display(),
                seq.len()
            );
        } else {
            sequences.push(seq);
        }
    }
    let skipped = corpus.files.len() + corpus.skipped.len() - sequences.len();
    println!(
        "training on {} files ({} skipped), {} tokens",
        sequences.len(),
        skipped,
        sequences.iter().map(|s| s.len()).sum::<usize>()
    );
    if sequences.is_empty() {
        return fail(EXIT_BAD_INPUT, format!("no usable MIDI files in {}", args.data.display()));
    }

    let config = TrainingConfig {
        window_len: args.window,
        stride: args.stride,
        epochs_max: args.epochs,
        accuracy_stop: (!args.no_early_stop).then_some(args.stop_acc),
        learning_rate: args.lr,
        batch_size: args.batch,
        rng_seed: args.seed,
        hidden: args.hidden,
        ..TrainingConfig::default()
    };
    if let Err(e) = config.validate() {
        return fail(EXIT_BAD_INPUT, e);
    }
    let metrics_path = args.metrics.unwrap_or_else(|| args.out.with_extension("csv"));
    let log = match MetricsLog::create(&metrics_path) {
        Ok(l) => l,
        Err(e) => return fail(EXIT_FAILURE, e),
    };
    let mut observer = ProgressObserver {
        started: Instant::now(),
        log,
        write_error: None,
    };
    let (checkpoint, metrics) = match train_with_observer(&sequences, &config, &mut observer) {
        Ok(r) => r,
        Err(e) => return fail(EXIT_FAILURE, e),
    };
    if let Some(e) = observer.write_error {
        return fail(EXIT_FAILURE, e);
    }
    if let Err(e) = write_checkpoint(&args.out, &checkpoint) {
        return fail(EXIT_FAILURE, e);
    }
    let last = metrics.last().expect("at least one epoch");
    println!(
        "stopped after {} epochs: loss {:.4}, accuracy {:.4}",
        metrics.len(),
        last.loss,
        last.accuracy
    );
    println!("wrote {} and {}", args.out.display(), metrics_path.display());
    ExitCode::SUCCESS
}

pub fn generate_command(args: GenerateArgs) -> ExitCode {
    let Some(path) = model_path(args.model) else {
        return fail(EXIT_BAD_INPUT, format!("no model given (use --model or {MODEL_ENV})"));
    };
    let model = match read_checkpoint(&path) {
        Ok(m) => m,
        Err(e) => return fail(EXIT_BAD_INPUT, e),
    };
    let fields = RequestFields {
        seed_notes: args.seed_notes,
        seconds: Some(args.seconds),
        temperature: Some(args.temperature),
        rng_seed: args.rng_seed,
    };
    let req = match resolve_request(&fields, f64::INFINITY) {
        Ok(r) => r,
        Err(e @ RequestError::BadSeed(_)) => return fail(EXIT_BAD_SEED, e),
        Err(e) => return fail(EXIT_FAILURE, e),
    };
    let seq = match generate(&req, &model) {
        Ok(s) => s,
        Err(e) => return fail(EXIT_FAILURE, e),
    };
    let midi = decode_tokens(&seq, req.tempo_bpm, DEFAULT_DIVISION);
    let bytes = match serialize_smf(&midi) {
        Ok(b) => b,
        Err(e) => return fail(EXIT_FAILURE, e),
    };
    if let Err(e) = write_file(&args.out, &bytes) {
        return fail(EXIT_FAILURE, e);
    }
    if let Some(tokens_path) = &args.tokens {
        if let Err(e) = write_file(tokens_path, seq.to_text().as_bytes()) {
            return fail(EXIT_FAILURE, e);
        }
    }
    let seconds = seq.steps() as f64 * seq.vocabulary().step_seconds(req.tempo_bpm);
    println!(
        "wrote {}: {} notes, {:.1} s nominal (rng seed {})",
        args.out.display(),
        extract_notes(&midi).len(),
        seconds,
        req.rng_seed
    );
    ExitCode::SUCCESS
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), FileError> {
    fs::write(path, bytes).map_err(|source| FileError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn inspect(args: InspectArgs) -> ExitCode {
    let bytes = match fs::read(&args.file) {
        Ok(b) => b,
        Err(e) => return fail(EXIT_BAD_INPUT, format!("{}: {e}", args.file.display())),
    };
    match describe(&bytes) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => fail(EXIT_BAD_INPUT, format!("{}: {e}", args.file.display())),
    }
}

pub fn serve_command(args: ServeArgs) -> ExitCode {
    let Some(path) = model_path(args.model) else {
        return fail(EXIT_BAD_INPUT, format!("no model given (use --model or {MODEL_ENV})"));
    };
    if args.max_concurrent == 0 || args.max_seconds.is_nan() || args.max_seconds <= 0.0 {
        return fail(EXIT_BAD_INPUT, "service limits must be positive");
    }
    let config = ServiceConfig {
        model_path: path,
        bind: args.bind,
        max_concurrent: args.max_concurrent,
        max_seconds: args.max_seconds,
        static_dir: args.static_dir,
    };
    let runtime = match tokio::runtime::Runtime::new() {
        Ok(r) => r,
        Err(e) => return fail(EXIT_FAILURE, e),
    };
    match runtime.block_on(serve(config)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(EXIT_FAILURE, e),
    }
}

pub fn run(cli: Cli) -> ExitCode {
    match cli.command {
        Command::Train(a) => train(a),
        Command::Generate(a) => generate_command(a),
        Command::Inspect(a) => inspect(a),
        Command::Serve(a) => serve_command(a),
    }
}

pub fn main() -> ExitCode {
    run(Cli::parse())
}
