//! Corpus ingestion, labeling, corpus-level dB statistics, stratified
//! splitting, and the manifest file.
//!
//! The manifest is a human-readable text file so splits stay inspectable
//! and diffable. Records are ordered lexicographically by relative path,
//! which makes every downstream artifact independent of directory
//! enumeration order.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::feature::{compute_mel_spectrogram, read_qimg, FeatureConfig};
use crate::train::Sample;
use crate::wav;

pub const MANIFEST_HEADER: &str = "qser-manifest v1";
/// Manifest file name written next to the feature records.
pub const MANIFEST_FILE: &str = "manifest.txt";
/// Subdirectory holding the binary feature records.
pub const FEATURES_DIR: &str = "features";

/// How wav files map to emotion labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelScheme {
    /// Label = name of the file's parent directory (`root/<label>/x.wav`).
    Folder,
    /// Label parsed from the third hyphen-separated code of the RAVDESS
    /// file naming convention.
    RavdessFilename,
}

impl LabelScheme {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "folder" => Ok(Self::Folder),
            "ravdess" => Ok(Self::RavdessFilename),
            other => Err(Error::Config(format!(
                "unknown labeler '{other}' (expected 'folder' or 'ravdess')"
            ))),
        }
    }
}

/// RAVDESS emotion codes (third filename field).
pub const RAVDESS_EMOTIONS: [(&str, &str); 8] = [
    ("01", "neutral"),
    ("02", "calm"),
    ("03", "happy"),
    ("04", "sad"),
    ("05", "angry"),
    ("06", "fearful"),
    ("07", "disgust"),
    ("08", "surprised"),
];

pub fn ravdess_label(file_stem: &str) -> Option<&'static str> {
    let code = file_stem.split('-').nth(2)?;
    RAVDESS_EMOTIONS
        .iter()
        .find(|(c, _)| *c == code)
        .map(|(_, name)| *name)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn as_str(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            other => Err(Error::Data(format!("unknown split tag '{other}'"))),
        }
    }
}

/// One corpus utterance.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    /// Path of the source wav relative to the corpus root, with forward
    /// slashes.
    pub rel_path: String,
    /// Feature record path relative to the manifest directory.
    pub feature_file: String,
    pub label: usize,
    pub split: Split,
    pub duration_secs: f64,
}

/// Corpus index: label table, split assignment, corpus dB extremes, and
/// the feature-config fingerprint everything was preprocessed with.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub root: String,
    pub seed: u64,
    pub db_min: f64,
    pub db_max: f64,
    pub feature_hash: u64,
    pub labels: Vec<String>,
    pub records: Vec<SampleRecord>,
}

/// Files skipped during scanning or preprocessing, with reasons.
pub type SkipReport = Vec<(String, String)>;

/// An utterance discovered by [`scan_corpus`], not yet split or measured.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanEntry {
    pub rel_path: String,
    pub label: usize,
}

pub struct ScanOutcome {
    pub entries: Vec<ScanEntry>,
    pub labels: Vec<String>,
    pub skipped: SkipReport,
}

fn walk_wavs(dir: &Path, root: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let mut children: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .collect();
    children.sort();
    for child in children {
        if child.is_dir() {
            walk_wavs(&child, root, out)?;
        } else if child
            .extension()
            .map(|e| e.eq_ignore_ascii_case("wav"))
            .unwrap_or(false)
        {
            out.push(child);
        }
    }
    Ok(())
}

/// Walks the corpus, assigns labels per the scheme, and builds the label
/// table (alphabetically sorted, indices dense). Files that cannot be
/// labelled land in the skip report; an empty result is a data error.
pub fn scan_corpus(root: &Path, scheme: LabelScheme) -> Result<ScanOutcome> {
    if !root.is_dir() {
        return Err(Error::Data(format!(
            "corpus root {} is not a directory",
            root.display()
        )));
    }
    let mut files = Vec::new();
    walk_wavs(root, root, &mut files)?;

    let mut skipped = Vec::new();
    let mut labelled: Vec<(String, String)> = Vec::new(); // (rel_path, label name)
    for path in files {
        let rel = path
            .strip_prefix(root)
            .expect("walker only yields children of root")
            .to_string_lossy()
            .replace('\\', "/");
        if rel.contains('\n') || rel.contains('\t') {
            skipped.push((rel, "path contains control characters".into()));
            continue;
        }
        let label = match scheme {
            LabelScheme::Folder => match Path::new(&rel).parent().and_then(|p| p.file_name()) {
                Some(name) => Some(name.to_string_lossy().into_owned()),
                None => None,
            },
            LabelScheme::RavdessFilename => path
                .file_stem()
                .and_then(|s| ravdess_label(&s.to_string_lossy()))
                .map(|s| s.to_string()),
        };
        match label {
            Some(name) if !name.is_empty() => labelled.push((rel, name)),
            _ => skipped.push((
                rel,
                match scheme {
                    LabelScheme::Folder => "file is not inside a label directory".into(),
                    LabelScheme::RavdessFilename => {
                        "filename does not follow the RAVDESS code pattern".into()
                    }
                },
            )),
        }
    }
    if labelled.is_empty() {
        return Err(Error::Data(format!(
            "no usable wav files under {}",
            root.display()
        )));
    }

    // deterministic ordering and dense alphabetic label indices
    labelled.sort_by(|a, b| a.0.cmp(&b.0));
    let mut label_set: Vec<String> = labelled.iter().map(|(_, l)| l.clone()).collect();
    label_set.sort();
    label_set.dedup();
    let index: BTreeMap<&str, usize> = label_set
        .iter()
        .enumerate()
        .map(|(i, l)| (l.as_str(), i))
        .collect();
    let entries = labelled
        .iter()
        .map(|(rel, label)| ScanEntry {
            rel_path: rel.clone(),
            label: index[label.as_str()],
        })
        .collect();
    Ok(ScanOutcome {
        entries,
        labels: label_set,
        skipped,
    })
}

/// Corpus-wide mel-spectrogram dB extremes, plus each usable file's
/// duration. Undecodable files are excluded and reported, not fatal.
pub struct DbStatsOutcome {
    pub db_min: f64,
    pub db_max: f64,
    /// (entry index kept, duration seconds), in input order.
    pub durations: Vec<(usize, f64)>,
    pub skipped: SkipReport,
}

pub fn compute_db_stats(
    root: &Path,
    entries: &[ScanEntry],
    cfg: &FeatureConfig,
) -> Result<DbStatsOutcome> {
    let mut db_min = f64::INFINITY;
    let mut db_max = f64::NEG_INFINITY;
    let mut durations = Vec::with_capacity(entries.len());
    let mut skipped = Vec::new();
    for (idx, entry) in entries.iter().enumerate() {
        let path = root.join(&entry.rel_path);
        let mel = match wav::read_wav(&path).and_then(|w| {
            let mel = compute_mel_spectrogram(&w, cfg)?;
            Ok((w.duration_secs(), mel))
        }) {
            Ok((dur, mel)) => {
                durations.push((idx, dur));
                mel
            }
            Err(e) => {
                skipped.push((entry.rel_path.clone(), e.to_string()));
                continue;
            }
        };
        for &v in &mel.values {
            db_min = db_min.min(v);
            db_max = db_max.max(v);
        }
    }
    if durations.is_empty() {
        return Err(Error::Data(
            "no corpus file survived feature extraction".into(),
        ));
    }
    Ok(DbStatsOutcome {
        db_min,
        db_max,
        durations,
        skipped,
    })
}

/// Stratified 80/20 split: per label, a seeded shuffle sends
/// `round(0.2·n)` samples (at least 1 when `n ≥ 2`) to the test split. A
/// single-sample class goes entirely to train, with a warning.
pub fn assign_splits(labels_of: &[usize], n_labels: usize, seed: u64) -> (Vec<Split>, Vec<String>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut splits = vec![Split::Train; labels_of.len()];
    let mut warnings = Vec::new();
    for label in 0..n_labels {
        let mut members: Vec<usize> = (0..labels_of.len())
            .filter(|&i| labels_of[i] == label)
            .collect();
        let n = members.len();
        if n == 0 {
            continue;
        }
        if n == 1 {
            warnings.push(format!(
                "label {label} has a single sample; keeping it in the training split"
            ));
            continue;
        }
        if n < 5 {
            warnings.push(format!(
                "label {label} has only {n} samples; the 80/20 split will be coarse"
            ));
        }
        let test_count = ((0.2 * n as f64).round() as usize).max(1);
        members.shuffle(&mut rng);
        for &idx in &members[..test_count] {
            splits[idx] = Split::Test;
        }
    }
    (splits, warnings)
}

/// Feature record name for a corpus entry: position-prefixed so sanitized
/// names can never collide.
pub fn feature_file_name(index: usize, rel_path: &str) -> String {
    let sanitized: String = rel_path
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '.' || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect();
    let stem = sanitized.strip_suffix(".wav").unwrap_or(&sanitized);
    format!("{FEATURES_DIR}/{index:04}_{stem}.qimg")
}

impl DatasetManifest {
    pub fn train_records(&self) -> impl Iterator<Item = &SampleRecord> {
        self.records.iter().filter(|r| r.split == Split::Train)
    }

    pub fn test_records(&self) -> impl Iterator<Item = &SampleRecord> {
        self.records.iter().filter(|r| r.split == Split::Test)
    }

    pub fn encode(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{MANIFEST_HEADER}");
        let _ = writeln!(out, "root {}", self.root);
        let _ = writeln!(out, "seed {}", self.seed);
        let _ = writeln!(out, "db_min {}", self.db_min);
        let _ = writeln!(out, "db_max {}", self.db_max);
        let _ = writeln!(out, "feature_hash {:016x}", self.feature_hash);
        let _ = writeln!(out, "labels {}", self.labels.len());
        for (i, label) in self.labels.iter().enumerate() {
            let _ = writeln!(out, "label {i} {label}");
        }
        let _ = writeln!(out, "records {}", self.records.len());
        for r in &self.records {
            let _ = writeln!(
                out,
                "record {} {} {} {} {}",
                r.split.as_str(),
                r.label,
                r.duration_secs,
                r.feature_file,
                r.rel_path
            );
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.encode()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::decode(&text).map_err(|e| match e {
            Error::Data(msg) => Error::Data(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn decode(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next() != Some(MANIFEST_HEADER) {
            return Err(Error::Data(format!(
                "not a manifest (expected header '{MANIFEST_HEADER}')"
            )));
        }
        let mut root = None;
        let mut seed = None;
        let mut db_min = None;
        let mut db_max = None;
        let mut feature_hash = None;
        let mut labels: Vec<String> = Vec::new();
        let mut records: Vec<SampleRecord> = Vec::new();

        for line in lines {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, rest) = line
                .split_once(' ')
                .ok_or_else(|| Error::Data(format!("malformed line '{line}'")))?;
            match key {
                "root" => root = Some(rest.to_string()),
                "seed" => seed = Some(parse_field(rest, "seed")?),
                "db_min" => db_min = Some(parse_field(rest, "db_min")?),
                "db_max" => db_max = Some(parse_field(rest, "db_max")?),
                "feature_hash" => {
                    feature_hash = Some(u64::from_str_radix(rest, 16).map_err(|_| {
                        Error::Data(format!("bad feature_hash '{rest}'"))
                    })?)
                }
                "labels" | "records" => {} // counts are implied by the lines
                "label" => {
                    let (idx, name) = rest
                        .split_once(' ')
                        .ok_or_else(|| Error::Data(format!("malformed label line '{line}'")))?;
                    let idx: usize = parse_field(idx, "label index")?;
                    if idx != labels.len() {
                        return Err(Error::Data(format!(
                            "label indices must be dense; saw {idx} after {}",
                            labels.len()
                        )));
                    }
                    labels.push(name.to_string());
                }
                "record" => {
                    let mut parts = rest.splitn(5, ' ');
                    let split = Split::parse(
                        parts
                            .next()
                            .ok_or_else(|| Error::Data("record missing split".into()))?,
                    )?;
                    let label: usize = parse_field(
                        parts
                            .next()
                            .ok_or_else(|| Error::Data("record missing label".into()))?,
                        "record label",
                    )?;
                    let duration_secs: f64 = parse_field(
                        parts
                            .next()
                            .ok_or_else(|| Error::Data("record missing duration".into()))?,
                        "record duration",
                    )?;
                    let feature_file = parts
                        .next()
                        .ok_or_else(|| Error::Data("record missing feature file".into()))?
                        .to_string();
                    let rel_path = parts
                        .next()
                        .ok_or_else(|| Error::Data("record missing path".into()))?
                        .to_string();
                    records.push(SampleRecord {
                        rel_path,
                        feature_file,
                        label,
                        split,
                        duration_secs,
                    });
                }
                other => return Err(Error::Data(format!("unknown manifest key '{other}'"))),
            }
        }

        let manifest = Self {
            root: root.ok_or_else(|| Error::Data("manifest missing root".into()))?,
            seed: seed.ok_or_else(|| Error::Data("manifest missing seed".into()))?,
            db_min: db_min.ok_or_else(|| Error::Data("manifest missing db_min".into()))?,
            db_max: db_max.ok_or_else(|| Error::Data("manifest missing db_max".into()))?,
            feature_hash: feature_hash
                .ok_or_else(|| Error::Data("manifest missing feature_hash".into()))?,
            labels,
            records,
        };
        for r in &manifest.records {
            if r.label >= manifest.labels.len() {
                return Err(Error::Data(format!(
                    "record '{}' has label {} but only {} labels are declared",
                    r.rel_path,
                    r.label,
                    manifest.labels.len()
                )));
            }
        }
        Ok(manifest)
    }
}

fn parse_field<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::Data(format!("bad {what} value '{s}'")))
}

/// Reads every feature record of one split into memory.
pub fn load_split(manifest: &DatasetManifest, manifest_dir: &Path, split: Split) -> Result<Vec<Sample>> {
    let mut out = Vec::new();
    for record in manifest.records.iter().filter(|r| r.split == split) {
        let img = read_qimg(&manifest_dir.join(&record.feature_file))?;
        out.push((img, record.label));
    }
    Ok(out)
}
