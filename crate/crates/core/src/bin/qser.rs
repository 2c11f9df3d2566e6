//! Command-line driver: preprocess a corpus, train, evaluate, predict,
//! inspect artifacts, and generate the synthetic fixtures.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use qser_core::checkpoint::{serialized_len, Checkpoint};
use qser_core::config::{parse_config_file, resolve_seed, ResolvedConfig};
use qser_core::dataset::{
    assign_splits, compute_db_stats, load_split, scan_corpus, DatasetManifest, LabelScheme,
    SampleRecord, Split, MANIFEST_FILE,
};
use qser_core::error::{Error, Result};
use qser_core::feature::{process_waveform_with_preview, read_qimg, write_qimg_atomic};
use qser_core::fixtures::{generate_spectrogram_fixture, generate_wav_corpus};
use qser_core::model::{count_parameters, QcnnModel};
use qser_core::train::{argmax, evaluate, train, EvalReport};
use qser_core::wav::read_wav;

const DEFAULT_SEED: u64 = 42;

#[derive(Parser)]
#[command(
    name = "qser",
    version,
    about = "Quaternion CNN speech emotion recognition over RGB mel-spectrograms"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum LabelerArg {
    Folder,
    Ravdess,
}

#[derive(Clone, Copy, ValueEnum)]
enum SplitArg {
    Train,
    Test,
}

#[derive(Clone, Copy, ValueEnum)]
enum FixtureKind {
    /// Two-label synthetic wav corpus (8 files).
    WavCorpus,
    /// 60-sample four-class spectrogram feature set with manifest.
    Spectrograms,
}

#[derive(Subcommand)]
enum Command {
    /// Convert a wav corpus into quaternion feature records and a manifest.
    Preprocess {
        /// Corpus root directory.
        #[arg(long)]
        corpus: PathBuf,
        /// How files map to labels.
        #[arg(long, value_enum, default_value = "folder")]
        labeler: LabelerArg,
        /// Output directory for the manifest and feature records.
        #[arg(long)]
        out: PathBuf,
        /// Optional key=value config file.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Also write a PNG preview next to each feature record.
        #[arg(long)]
        png: bool,
        /// Split seed (beats config file and QSER_SEED).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train on a preprocessed manifest.
    Train {
        #[arg(long)]
        manifest: PathBuf,
        /// Checkpoint output path; the best-validation checkpoint and the
        /// metrics log are written next to it.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        batch_size: Option<usize>,
        /// Adam learning rate.
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        dropout: Option<f64>,
        #[arg(long)]
        validation_steps: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Evaluate a checkpoint against a manifest split.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, value_enum, default_value = "test")]
        split: SplitArg,
        /// Machine-readable report on stdout.
        #[arg(long)]
        json: bool,
    },
    /// Classify raw wav files with a trained checkpoint.
    Predict {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Input wav files.
        #[arg(required = true)]
        wavs: Vec<PathBuf>,
    },
    /// Print a summary of a manifest, checkpoint, or feature record.
    Inspect { file: PathBuf },
    /// Generate a deterministic synthetic fixture.
    Fixture {
        #[arg(long, value_enum)]
        kind: FixtureKind,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Preprocess {
            corpus,
            labeler,
            out,
            config,
            png,
            seed,
        } => cmd_preprocess(&corpus, labeler, &out, config.as_deref(), png, seed),
        Command::Train {
            manifest,
            out,
            config,
            epochs,
            batch_size,
            lr,
            dropout,
            validation_steps,
            seed,
        } => cmd_train(
            &manifest,
            &out,
            config.as_deref(),
            TrainFlags {
                epochs,
                batch_size,
                lr,
                dropout,
                validation_steps,
                seed,
            },
        ),
        Command::Eval {
            checkpoint,
            manifest,
            split,
            json,
        } => cmd_eval(&checkpoint, &manifest, split, json),
        Command::Predict { checkpoint, wavs } => cmd_predict(&checkpoint, &wavs),
        Command::Inspect { file } => cmd_inspect(&file),
        Command::Fixture { kind, out, seed } => cmd_fixture(kind, &out, seed),
    }
}

fn load_file_config(path: Option<&Path>) -> Result<(ResolvedConfig, BTreeMap<String, String>)> {
    let mut resolved = ResolvedConfig::default();
    let entries = match path {
        Some(p) => parse_config_file(p)?,
        None => BTreeMap::new(),
    };
    resolved.apply_file(&entries)?;
    Ok((resolved, entries))
}

fn config_file_seed(entries: &BTreeMap<String, String>) -> Option<u64> {
    entries.get("train.seed").and_then(|v| v.parse().ok())
}

fn cmd_preprocess(
    corpus: &Path,
    labeler: LabelerArg,
    out: &Path,
    config: Option<&Path>,
    png: bool,
    seed_flag: Option<u64>,
) -> Result<()> {
    let (mut resolved, entries) = load_file_config(config)?;
    resolved.train.seed = resolve_seed(seed_flag, config_file_seed(&entries), DEFAULT_SEED)?;
    resolved.feature.validate()?;
    println!("{}", resolved.echo_line());

    let scheme = match labeler {
        LabelerArg::Folder => LabelScheme::Folder,
        LabelerArg::Ravdess => LabelScheme::RavdessFilename,
    };
    let scan = scan_corpus(corpus, scheme)?;
    report_skips("scan", &scan.skipped);

    let stats = compute_db_stats(corpus, &scan.entries, &resolved.feature)?;
    report_skips("decode", &stats.skipped);
    println!(
        "corpus: {} usable files, {} labels, db range [{}, {}]",
        stats.durations.len(),
        scan.labels.len(),
        stats.db_min,
        stats.db_max
    );

    // survivors only, in scan (lexicographic) order
    let survivors: Vec<(usize, f64)> = stats.durations.clone();
    let labels_of: Vec<usize> = survivors
        .iter()
        .map(|&(idx, _)| scan.entries[idx].label)
        .collect();
    let (splits, warnings) = assign_splits(&labels_of, scan.labels.len(), resolved.train.seed);
    for w in &warnings {
        eprintln!("warning: {w}");
    }

    let features_dir = out.join(qser_core::dataset::FEATURES_DIR);
    std::fs::create_dir_all(&features_dir).map_err(|e| Error::io(&features_dir, e))?;

    let mut records = Vec::with_capacity(survivors.len());
    for (position, (&(entry_idx, duration), &split)) in
        survivors.iter().zip(&splits).enumerate()
    {
        let entry = &scan.entries[entry_idx];
        let feature_file = qser_core::dataset::feature_file_name(position, &entry.rel_path);
        let w = read_wav(&corpus.join(&entry.rel_path))?;
        let (img, rgb) =
            process_waveform_with_preview(&w, &resolved.feature, stats.db_min, stats.db_max)?;
        let feature_path = out.join(&feature_file);
        write_qimg_atomic(&feature_path, &img)?;
        if png {
            rgb.save_png(&feature_path.with_extension("png"))?;
        }
        records.push(SampleRecord {
            rel_path: entry.rel_path.clone(),
            feature_file,
            label: entry.label,
            split,
            duration_secs: duration,
        });
    }

    let manifest = DatasetManifest {
        root: corpus.to_string_lossy().into_owned(),
        seed: resolved.train.seed,
        db_min: stats.db_min,
        db_max: stats.db_max,
        feature_hash: resolved.feature.hash(),
        labels: scan.labels,
        records,
    };
    let manifest_path = out.join(MANIFEST_FILE);
    manifest.save(&manifest_path)?;

    let train_n = manifest.train_records().count();
    let test_n = manifest.test_records().count();
    println!(
        "wrote {} feature records ({} train / {} test) and {}",
        manifest.records.len(),
        train_n,
        test_n,
        manifest_path.display()
    );
    Ok(())
}

struct TrainFlags {
    epochs: Option<usize>,
    batch_size: Option<usize>,
    lr: Option<f64>,
    dropout: Option<f64>,
    validation_steps: Option<usize>,
    seed: Option<u64>,
}

fn cmd_train(
    manifest_path: &Path,
    out: &Path,
    config: Option<&Path>,
    flags: TrainFlags,
) -> Result<()> {
    let (mut resolved, entries) = load_file_config(config)?;
    // flags beat the config file
    if let Some(v) = flags.epochs {
        resolved.train.epochs = v;
    }
    if let Some(v) = flags.batch_size {
        resolved.train.batch_size = v;
    }
    if let Some(v) = flags.lr {
        resolved.train.learning_rate = v;
    }
    if let Some(v) = flags.dropout {
        resolved.train.dropout_p = v;
    }
    if let Some(v) = flags.validation_steps {
        resolved.train.validation_steps = v;
    }
    resolved.train.seed = resolve_seed(flags.seed, config_file_seed(&entries), DEFAULT_SEED)?;
    println!("{}", resolved.echo_line());

    let manifest = DatasetManifest::load(manifest_path)?;
    if manifest.feature_hash != resolved.feature.hash() {
        return Err(Error::Compatibility(format!(
            "manifest was preprocessed with feature hash {:016x}, current config hashes to {:016x}; \
             pass the same feature config used at preprocess time",
            manifest.feature_hash,
            resolved.feature.hash()
        )));
    }

    let manifest_dir = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let train_set = load_split(&manifest, manifest_dir, Split::Train)?;
    let test_set = load_split(&manifest, manifest_dir, Split::Test)?;
    let spec = resolved.model.to_spec(manifest.labels.len());
    spec.validate()?;

    let counts = count_parameters(&spec)?;
    println!(
        "parameters: conv1 {} (real-conv equivalent {}), conv2 {} (real-conv equivalent {}), dense {}, total {}",
        counts.conv1,
        counts.conv1_real_equivalent,
        counts.conv2,
        counts.conv2_real_equivalent,
        counts.dense,
        counts.total
    );
    println!(
        "serialized size: {} bytes ({:.1} MiB)",
        serialized_len(&spec, &manifest.labels),
        serialized_len(&spec, &manifest.labels) as f64 / (1024.0 * 1024.0)
    );
    println!(
        "training on {} samples, validating on {} ({} steps/epoch cap)",
        train_set.len(),
        test_set.len(),
        resolved.train.validation_steps
    );

    let mut metric_lines = Vec::new();
    let outcome = train(&train_set, &test_set, &spec, &resolved.train, |m| {
        let line = m.csv_line();
        println!("{line}");
        metric_lines.push(line);
    })?;

    let make_checkpoint = |model: QcnnModel| {
        Checkpoint::new(
            model,
            resolved.feature.clone(),
            manifest.db_min,
            manifest.db_max,
            manifest.labels.clone(),
        )
    };
    make_checkpoint(outcome.final_model).save(out)?;
    let best_path = sibling_path(out, ".best.qser");
    make_checkpoint(outcome.best_model).save(&best_path)?;

    let metrics_path = sibling_path(out, ".metrics.csv");
    let mut body = metric_lines.join("\n");
    if !body.is_empty() {
        body.push('\n');
    }
    std::fs::write(&metrics_path, body).map_err(|e| Error::io(&metrics_path, e))?;

    println!(
        "wrote final checkpoint {}, best checkpoint {} (epoch {}), metrics {}",
        out.display(),
        best_path.display(),
        outcome
            .best_epoch
            .map(|e| e.to_string())
            .unwrap_or_else(|| "-".into()),
        metrics_path.display()
    );
    Ok(())
}

fn report_skips(stage: &str, skipped: &[(String, String)]) {
    for (path, reason) in skipped {
        eprintln!("skipped ({stage}): {path}: {reason}");
    }
}

/// `model.qser` → `model<suffix>` next to the original.
fn sibling_path(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "checkpoint".into());
    path.with_file_name(format!("{stem}{suffix}"))
}

#[derive(serde::Serialize)]
struct EvalOutput<'a> {
    split: &'a str,
    labels: &'a [String],
    #[serde(flatten)]
    report: &'a EvalReport,
}

fn cmd_eval(checkpoint: &Path, manifest_path: &Path, split: SplitArg, json: bool) -> Result<()> {
    let ckpt = Checkpoint::load(checkpoint)?;
    let manifest = DatasetManifest::load(manifest_path)?;
    if ckpt.feature_hash != manifest.feature_hash {
        return Err(Error::Compatibility(format!(
            "checkpoint feature hash {:016x} does not match manifest {:016x}",
            ckpt.feature_hash, manifest.feature_hash
        )));
    }
    if ckpt.labels != manifest.labels {
        return Err(Error::Compatibility(format!(
            "checkpoint labels {:?} do not match manifest labels {:?}",
            ckpt.labels, manifest.labels
        )));
    }

    let split = match split {
        SplitArg::Train => Split::Train,
        SplitArg::Test => Split::Test,
    };
    let manifest_dir = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let samples = load_split(&manifest, manifest_dir, split)?;
    let report = evaluate(&ckpt.model, &samples, ckpt.labels.len())?;

    if json {
        let out = EvalOutput {
            split: split.as_str(),
            labels: &ckpt.labels,
            report: &report,
        };
        println!(
            "{}",
            serde_json::to_string_pretty(&out)
                .map_err(|e| Error::Input(format!("json encoding failed: {e}")))?
        );
        return Ok(());
    }

    println!("split: {}  samples: {}", split.as_str(), report.sample_count);
    println!("accuracy: {:.4}", report.accuracy);
    println!("unweighted accuracy: {:.4}", report.unweighted_accuracy);
    for (idx, label) in ckpt.labels.iter().enumerate() {
        println!(
            "class {label}: recall {:.4} ({} samples)",
            report.per_class_recall[idx], report.per_class_count[idx]
        );
    }
    println!("confusion matrix (rows true, columns predicted):");
    let width = ckpt.labels.iter().map(|l| l.len()).max().unwrap_or(5).max(5);
    print!("{:>width$} ", "");
    for label in &ckpt.labels {
        print!("{label:>width$} ");
    }
    println!();
    for (idx, label) in ckpt.labels.iter().enumerate() {
        print!("{label:>width$} ");
        for &count in &report.confusion[idx] {
            print!("{count:>width$} ");
        }
        println!();
    }
    Ok(())
}

fn cmd_predict(checkpoint: &Path, wavs: &[PathBuf]) -> Result<()> {
    let ckpt = Checkpoint::load(checkpoint)?;
    let stdout = std::io::stdout();
    let mut failures = 0usize;
    for path in wavs {
        let result = read_wav(path).and_then(|w| {
            let img = qser_core::feature::process_waveform(
                &w,
                &ckpt.feature_config,
                ckpt.db_min,
                ckpt.db_max,
            )?;
            ckpt.model.predict(&img)
        });
        match result {
            Ok(probs) => {
                let label = &ckpt.labels[argmax(&probs)];
                let vector: Vec<String> = probs.iter().map(|p| format!("{p:.6}")).collect();
                let mut lock = stdout.lock();
                let _ = writeln!(lock, "{}\t{label}\t{}", path.display(), vector.join(","));
            }
            Err(e) => {
                failures += 1;
                eprintln!("error: {}: {e}", path.display());
            }
        }
    }
    if failures == wavs.len() {
        return Err(Error::Data("no input file could be classified".into()));
    }
    Ok(())
}

fn cmd_inspect(file: &Path) -> Result<()> {
    let bytes = std::fs::read(file).map_err(|e| Error::io(file, e))?;
    if bytes.starts_with(b"QSER") {
        let ckpt = Checkpoint::load(file)?;
        let s = &ckpt.model.spec;
        println!("checkpoint {}", file.display());
        println!(
            "  architecture: {}x{}x{} -> conv {}x{} ({}) -> pool {} -> conv ({}) -> dense -> {} classes",
            s.input_height,
            s.input_width,
            s.input_channels,
            s.kernel_size,
            s.kernel_size,
            s.conv1_kernels,
            s.pool_window,
            s.conv2_kernels,
            s.num_classes
        );
        println!("  labels: {}", ckpt.labels.join(", "));
        println!(
            "  feature config: fft {} hop {} mels {} floor {} dB (hash {:016x})",
            ckpt.feature_config.fft_size,
            ckpt.feature_config.hop,
            ckpt.feature_config.n_mels,
            ckpt.feature_config.floor_db,
            ckpt.feature_hash
        );
        println!("  db range: [{}, {}]", ckpt.db_min, ckpt.db_max);
        println!(
            "  parameters: {} ({} bytes on disk)",
            ckpt.model.parameter_count(),
            bytes.len()
        );
    } else if bytes.starts_with(b"QIMG") {
        let img = read_qimg(file)?;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for q in img.pixels() {
            for c in [q.i, q.j, q.k] {
                lo = lo.min(c);
                hi = hi.max(c);
            }
        }
        println!("feature record {}", file.display());
        println!("  shape: {}x{}x{}", img.height, img.width, img.channels);
        println!("  pure: {}", img.is_pure());
        println!("  component range: [{lo}, {hi}]");
    } else if bytes.starts_with(qser_core::dataset::MANIFEST_HEADER.as_bytes()) {
        let manifest = DatasetManifest::load(file)?;
        println!("manifest {}", file.display());
        println!("  root: {}", manifest.root);
        println!("  seed: {}", manifest.seed);
        println!("  db range: [{}, {}]", manifest.db_min, manifest.db_max);
        println!("  feature hash: {:016x}", manifest.feature_hash);
        for (idx, label) in manifest.labels.iter().enumerate() {
            let train = manifest
                .records
                .iter()
                .filter(|r| r.label == idx && r.split == Split::Train)
                .count();
            let test = manifest
                .records
                .iter()
                .filter(|r| r.label == idx && r.split == Split::Test)
                .count();
            println!("  label {label}: {train} train / {test} test");
        }
        println!("  records: {}", manifest.records.len());
    } else {
        return Err(Error::Input(format!(
            "{}: not a checkpoint, feature record, or manifest",
            file.display()
        )));
    }
    Ok(())
}

fn cmd_fixture(kind: FixtureKind, out: &Path, seed: Option<u64>) -> Result<()> {
    let seed = resolve_seed(seed, None, DEFAULT_SEED)?;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    match kind {
        FixtureKind::WavCorpus => {
            generate_wav_corpus(out)?;
            println!("wrote 8 wav files under {}", out.display());
        }
        FixtureKind::Spectrograms => {
            let manifest = generate_spectrogram_fixture(out, seed)?;
            println!(
                "wrote {} feature records and {} under {}",
                manifest.records.len(),
                MANIFEST_FILE,
                out.display()
            );
        }
    }
    Ok(())
}
