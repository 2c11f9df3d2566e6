//! Deterministic synthetic fixtures: a tiny two-class wav corpus for
//! exercising the preprocessing pipeline end to end, and a 60-sample
//! four-class spectrogram set that a correct implementation must be able
//! to memorize. Both are pure functions of their arguments, so committed
//! copies can always be regenerated bit-identically.

use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{
    assign_splits, feature_file_name, DatasetManifest, SampleRecord, Split, FEATURES_DIR,
    MANIFEST_FILE,
};
use crate::error::{Error, Result};
use crate::feature::{
    encode_quaternion, write_qimg, FeatureConfig, RgbImage, IMAGE_HEIGHT, IMAGE_WIDTH,
};
use crate::wav::write_wav_mono_16;

/// Two labels × four 1-second tones at 8 kHz. The "calm" files sit in a
/// low band, the "angry" files high with a harmonic, so their
/// mel-spectrograms separate cleanly.
pub fn generate_wav_corpus(dir: &Path) -> Result<()> {
    let sr = 8000u32;
    let n = sr as usize;
    for (label, base, harmonic) in [("calm", 220.0, 0.0), ("angry", 1400.0, 0.35)] {
        let label_dir = dir.join(label);
        std::fs::create_dir_all(&label_dir).map_err(|e| Error::io(&label_dir, e))?;
        for file_idx in 0..4usize {
            let freq = base * (1.0 + 0.18 * file_idx as f64);
            let samples: Vec<f64> = (0..n)
                .map(|t| {
                    let time = t as f64 / sr as f64;
                    // gentle attack/decay so frames differ within a file
                    let env = (PI * time).sin();
                    let tone = (2.0 * PI * freq * time).sin()
                        + harmonic * (2.0 * PI * 2.0 * freq * time).sin();
                    0.6 * env * tone
                })
                .collect();
            write_wav_mono_16(&label_dir.join(format!("tone{file_idx}.wav")), &samples, sr)?;
        }
    }
    Ok(())
}

pub const SPECTROGRAM_FIXTURE_LABELS: [&str; 4] = ["angry", "calm", "happy", "sad"];
pub const SPECTROGRAM_FIXTURE_PER_CLASS: usize = 15;

/// Color and blob placement per class. Intensities are kept moderate so
/// the randomly-initialized convolution stack does not saturate the color
/// cube before training starts.
fn class_pattern(label: usize) -> ([f64; 3], (usize, usize)) {
    match label {
        0 => ([0.34, 0.06, 0.06], (6, 8)),   // angry: red, top-left
        1 => ([0.06, 0.08, 0.34], (6, 44)),  // calm: blue, top-right
        2 => ([0.30, 0.28, 0.05], (28, 8)),  // happy: yellow, bottom-left
        _ => ([0.05, 0.28, 0.28], (28, 44)), // sad: cyan, bottom-right
    }
}

/// Renders one synthetic sample: dim background, one class-colored
/// rectangle with jittered position and amplitude, light pixel noise.
pub fn synth_spectrogram(label: usize, rng: &mut ChaCha8Rng) -> RgbImage {
    let (color, (base_r, base_c)) = class_pattern(label);
    let jitter_r = rng.random_range(0..5);
    let jitter_c = rng.random_range(0..9);
    let amp = rng.random_range(0.8..1.0);
    let (r0, c0) = (base_r + jitter_r, base_c + jitter_c);
    let (r1, c1) = (r0 + 14, c0 + 20);

    let mut pixels = vec![[0.05, 0.05, 0.05]; IMAGE_HEIGHT * IMAGE_WIDTH];
    for (idx, px) in pixels.iter_mut().enumerate() {
        let row = idx / IMAGE_WIDTH;
        let col = idx % IMAGE_WIDTH;
        let inside = row >= r0 && row < r1 && col >= c0 && col < c1;
        for ch in 0..3 {
            let signal = if inside { color[ch] * amp } else { 0.0 };
            let noise = 0.015 * rng.random_range(-1.0..1.0);
            px[ch] = (px[ch] + signal + noise).clamp(0.0, 1.0);
        }
    }
    RgbImage::new(pixels).expect("synthetic pixels are in range")
}

/// Writes the 60-sample four-class spectrogram fixture: feature records
/// plus a split manifest. The manifest's `rel_path` entries are synthetic
/// (there are no source wavs); training and evaluation only ever read the
/// feature files.
pub fn generate_spectrogram_fixture(dir: &Path, seed: u64) -> Result<DatasetManifest> {
    let features_dir = dir.join(FEATURES_DIR);
    std::fs::create_dir_all(&features_dir).map_err(|e| Error::io(&features_dir, e))?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::new();
    let mut labels_of = Vec::new();
    let mut images = Vec::new();
    for (label, name) in SPECTROGRAM_FIXTURE_LABELS.iter().enumerate() {
        for sample in 0..SPECTROGRAM_FIXTURE_PER_CLASS {
            let rel_path = format!("{name}/synthetic{sample:02}.wav");
            let index = records.len();
            let feature_file = feature_file_name(index, &rel_path);
            images.push(synth_spectrogram(label, &mut rng));
            labels_of.push(label);
            records.push(SampleRecord {
                rel_path,
                feature_file,
                label,
                split: Split::Train,
                duration_secs: 1.0,
            });
        }
    }

    let (splits, _) = assign_splits(&labels_of, SPECTROGRAM_FIXTURE_LABELS.len(), seed);
    for (record, split) in records.iter_mut().zip(splits) {
        record.split = split;
    }
    for (record, image) in records.iter().zip(&images) {
        write_qimg(&dir.join(&record.feature_file), &encode_quaternion(image))?;
    }

    let manifest = DatasetManifest {
        root: "synthetic-fixture".into(),
        seed,
        db_min: -80.0,
        db_max: 0.0,
        feature_hash: FeatureConfig::default().hash(),
        labels: SPECTROGRAM_FIXTURE_LABELS
            .iter()
            .map(|s| s.to_string())
            .collect(),
        records,
    };
    manifest.save(&dir.join(MANIFEST_FILE))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::load_split;

    #[test]
    fn wav_corpus_is_deterministic() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        generate_wav_corpus(a.path()).unwrap();
        generate_wav_corpus(b.path()).unwrap();
        for label in ["calm", "angry"] {
            for idx in 0..4 {
                let name = format!("{label}/tone{idx}.wav");
                let x = std::fs::read(a.path().join(&name)).unwrap();
                let y = std::fs::read(b.path().join(&name)).unwrap();
                assert_eq!(x, y, "{name}");
                assert!(x.len() > 44);
            }
        }
    }

    #[test]
    fn spectrogram_fixture_layout() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = generate_spectrogram_fixture(dir.path(), 7).unwrap();
        assert_eq!(manifest.records.len(), 60);
        assert_eq!(manifest.labels.len(), 4);
        // stratified 12/3 per class
        for label in 0..4 {
            let train = manifest
                .records
                .iter()
                .filter(|r| r.label == label && r.split == Split::Train)
                .count();
            let test = manifest
                .records
                .iter()
                .filter(|r| r.label == label && r.split == Split::Test)
                .count();
            assert_eq!((train, test), (12, 3));
        }

        let train = load_split(&manifest, dir.path(), Split::Train).unwrap();
        assert_eq!(train.len(), 48);
        let (img, _) = &train[0];
        assert_eq!((img.height, img.width, img.channels), (50, 75, 1));
        assert!(img.is_pure());
    }

    #[test]
    fn spectrogram_fixture_is_seed_deterministic() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let ma = generate_spectrogram_fixture(a.path(), 3).unwrap();
        let mb = generate_spectrogram_fixture(b.path(), 3).unwrap();
        assert_eq!(ma, mb);
        for record in &ma.records {
            let x = std::fs::read(a.path().join(&record.feature_file)).unwrap();
            let y = std::fs::read(b.path().join(&record.feature_file)).unwrap();
            assert_eq!(x, y);
        }
        let mc = generate_spectrogram_fixture(a.path(), 4).unwrap();
        assert_ne!(ma, mc);
    }
}
