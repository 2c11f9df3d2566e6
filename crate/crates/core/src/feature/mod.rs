//! Waveform → RGB mel-spectrogram → pure-quaternion image pipeline.
//!
//! Every stage is a stateless transform, so a corpus can be preprocessed
//! one file per worker; the only cross-file state (corpus dB extremes) is
//! computed in a separate reduction pass beforehand.

pub mod colormap;
pub mod image;
pub mod mel;
pub mod qimg;
pub mod stft;

pub use colormap::Colormap;
pub use image::{
    decode_quaternion, encode_quaternion, render_rgb, QuaternionImage, RgbImage, IMAGE_HEIGHT,
    IMAGE_WIDTH,
};
pub use mel::{compute_mel_spectrogram, mel_scale, mel_to_hz, normalize_db, MelSpectrogram};
pub use qimg::{read_qimg, write_qimg, write_qimg_atomic};

use crate::error::{Error, Result};
use crate::wav::Waveform;

/// Spectral analysis settings. Defaults are standard speech values; the
/// output image size is fixed at 50×75 regardless.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureConfig {
    pub fft_size: usize,
    pub hop: usize,
    pub n_mels: usize,
    pub floor_db: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            fft_size: 1024,
            hop: 512,
            n_mels: 128,
            floor_db: -80.0,
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.fft_size < 2 || !self.fft_size.is_power_of_two() {
            return Err(Error::Config(format!(
                "feature.fft_size must be a power of two >= 2, got {}",
                self.fft_size
            )));
        }
        if self.hop == 0 {
            return Err(Error::Config("feature.hop must be positive".into()));
        }
        if self.n_mels == 0 {
            return Err(Error::Config("feature.n_mels must be positive".into()));
        }
        if !self.floor_db.is_finite() || self.floor_db >= 0.0 {
            return Err(Error::Config(format!(
                "feature.floor_db must be a finite negative value, got {}",
                self.floor_db
            )));
        }
        Ok(())
    }

    /// Stable fingerprint of everything that shapes the feature bytes:
    /// the analysis settings, the colormap, and the record format version.
    /// Manifests and checkpoints carry it so incompatible artifacts are
    /// rejected instead of silently mis-evaluated.
    pub fn hash(&self) -> u64 {
        let cmap = Colormap::viridis();
        let canon = format!(
            "qimg={}|fft={}|hop={}|mels={}|floor={}|h={}|w={}|cmap={}-{}",
            qimg::QIMG_VERSION,
            self.fft_size,
            self.hop,
            self.n_mels,
            self.floor_db,
            IMAGE_HEIGHT,
            IMAGE_WIDTH,
            cmap.name(),
            cmap.version(),
        );
        fnv1a64(canon.as_bytes())
    }
}

/// 64-bit FNV-1a, used for the feature-config fingerprint.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Full per-utterance transform given corpus dB extremes: mel spectrogram,
/// normalization, colormap render, quaternion encoding.
pub fn process_waveform(
    w: &Waveform,
    cfg: &FeatureConfig,
    db_min: f64,
    db_max: f64,
) -> Result<QuaternionImage> {
    let (img, _) = process_waveform_with_preview(w, cfg, db_min, db_max)?;
    Ok(img)
}

/// Like [`process_waveform`] but also hands back the rendered RGB image so
/// callers can write a PNG preview without recomputing.
pub fn process_waveform_with_preview(
    w: &Waveform,
    cfg: &FeatureConfig,
    db_min: f64,
    db_max: f64,
) -> Result<(QuaternionImage, RgbImage)> {
    let spec = compute_mel_spectrogram(w, cfg)?;
    let norm = normalize_db(&spec, db_min, db_max)?;
    let rgb = render_rgb(&norm, spec.mel_bins, spec.frame_count, Colormap::viridis())?;
    Ok((encode_quaternion(&rgb), rgb))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn tone(freq: f64, secs: f64, sr: u32) -> Waveform {
        let n = (secs * sr as f64) as usize;
        Waveform::new(
            (0..n)
                .map(|t| 0.7 * (2.0 * PI * freq * t as f64 / sr as f64).sin())
                .collect(),
            sr,
        )
        .unwrap()
    }

    #[test]
    fn pipeline_is_deterministic() {
        let cfg = FeatureConfig::default();
        let w = tone(523.25, 1.2, 16000);
        let a = process_waveform(&w, &cfg, -80.0, 0.0).unwrap();
        let b = process_waveform(&w, &cfg, -80.0, 0.0).unwrap();
        assert_eq!(a, b);

        let mut bytes_a = Vec::new();
        let mut bytes_b = Vec::new();
        qimg::encode_qimg(&a, &mut bytes_a).unwrap();
        qimg::encode_qimg(&b, &mut bytes_b).unwrap();
        assert_eq!(bytes_a, bytes_b);
    }

    #[test]
    fn output_pixels_are_pure_unit_range() {
        let cfg = FeatureConfig::default();
        let w = tone(300.0, 0.8, 8000);
        let img = process_waveform(&w, &cfg, -80.0, 0.0).unwrap();
        assert_eq!((img.height, img.width, img.channels), (50, 75, 1));
        assert!(img.is_pure());
        for q in img.pixels() {
            for c in [q.i, q.j, q.k] {
                assert!((0.0..=1.0).contains(&c));
            }
        }
    }

    #[test]
    fn hash_tracks_config_changes() {
        let a = FeatureConfig::default();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.n_mels = 64;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn config_validation() {
        assert!(FeatureConfig::default().validate().is_ok());
        let bad = FeatureConfig {
            fft_size: 1000,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = FeatureConfig {
            floor_db: 3.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
