//! Mel-scale frequency warping and the triangular filterbank.

use crate::error::{Error, Result};
use crate::wav::Waveform;

use super::stft::power_spectrogram;
use super::FeatureConfig;

/// Mel value of a frequency in Hz: `2595·log₁₀(1 + f/700)`.
pub fn mel_scale(f: f64) -> Result<f64> {
    if !(f >= 0.0) {
        return Err(Error::Domain(format!("mel scale needs f >= 0 Hz, got {f}")));
    }
    Ok(2595.0 * (1.0 + f / 700.0).log10())
}

/// Inverse of [`mel_scale`].
pub fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Time-frequency magnitudes in decibels, `[n_mels × n_frames]` row-major
/// by mel bin. 0 dB is the loudest cell of the utterance; everything is
/// floored at the configured floor.
#[derive(Debug, Clone)]
pub struct MelSpectrogram {
    pub values: Vec<f64>,
    pub mel_bins: usize,
    pub frame_count: usize,
}

impl MelSpectrogram {
    #[inline]
    pub fn at(&self, mel: usize, frame: usize) -> f64 {
        self.values[mel * self.frame_count + frame]
    }
}

/// Triangular mel filterbank over FFT bins, filters spaced evenly on the
/// mel axis across `[0, sample_rate/2]`.
pub struct MelFilterbank {
    // per filter: first FFT bin touched and the weights from there on
    filters: Vec<(usize, Vec<f64>)>,
    pub centers_hz: Vec<f64>,
}

impl MelFilterbank {
    pub fn new(n_mels: usize, fft_size: usize, sample_rate: u32) -> Result<Self> {
        if n_mels == 0 {
            return Err(Error::Config("n_mels must be positive".into()));
        }
        let nyquist = sample_rate as f64 / 2.0;
        let mel_max = mel_scale(nyquist)?;
        // n_mels + 2 edge points, evenly spaced in mel; adjacent triples
        // define each triangle (left edge, center, right edge)
        let edges_hz: Vec<f64> = (0..n_mels + 2)
            .map(|i| mel_to_hz(mel_max * i as f64 / (n_mels + 1) as f64))
            .collect();

        let n_bins = fft_size / 2 + 1;
        let bin_hz = sample_rate as f64 / fft_size as f64;
        let mut filters = Vec::with_capacity(n_mels);
        let mut centers_hz = Vec::with_capacity(n_mels);
        for m in 0..n_mels {
            let (left, center, right) = (edges_hz[m], edges_hz[m + 1], edges_hz[m + 2]);
            centers_hz.push(center);
            let mut start = None;
            let mut weights = Vec::new();
            for bin in 0..n_bins {
                let f = bin as f64 * bin_hz;
                let w = if f <= left || f >= right {
                    0.0
                } else if f <= center {
                    (f - left) / (center - left)
                } else {
                    (right - f) / (right - center)
                };
                if w > 0.0 {
                    if start.is_none() {
                        start = Some(bin);
                    }
                    weights.push(w);
                } else if start.is_some() {
                    break;
                }
            }
            filters.push((start.unwrap_or(0), weights));
        }
        Ok(Self {
            filters,
            centers_hz,
        })
    }

    pub fn n_mels(&self) -> usize {
        self.filters.len()
    }

    /// Applies every filter to one power-spectrum frame.
    pub fn apply(&self, power: &[f64], out: &mut [f64]) {
        for (dst, (start, weights)) in out.iter_mut().zip(&self.filters) {
            let mut acc = 0.0;
            for (w, p) in weights.iter().zip(&power[*start..]) {
                acc += w * p;
            }
            *dst = acc;
        }
    }
}

/// Full waveform → dB mel-spectrogram transform: Hann STFT, power spectrum,
/// mel filterbank, then `10·log₁₀` referenced to the utterance maximum with
/// the configured floor.
pub fn compute_mel_spectrogram(w: &Waveform, cfg: &FeatureConfig) -> Result<MelSpectrogram> {
    cfg.validate()?;
    let spec = power_spectrogram(&w.samples, cfg.fft_size, cfg.hop)?;
    let bank = MelFilterbank::new(cfg.n_mels, cfg.fft_size, w.sample_rate)?;

    let n_frames = spec.len();
    let mut mel_power = vec![0.0; cfg.n_mels * n_frames];
    let mut frame_out = vec![0.0; cfg.n_mels];
    for (t, frame) in spec.iter().enumerate() {
        bank.apply(frame, &mut frame_out);
        for (m, &v) in frame_out.iter().enumerate() {
            mel_power[m * n_frames + t] = v;
        }
    }

    let max = mel_power.iter().cloned().fold(0.0f64, f64::max);
    let floor = cfg.floor_db;
    let values: Vec<f64> = if max <= 0.0 {
        // silence: zero spectrum clamps to the floor everywhere
        vec![floor; mel_power.len()]
    } else {
        mel_power
            .iter()
            .map(|&p| {
                if p <= 0.0 {
                    floor
                } else {
                    (10.0 * (p / max).log10()).max(floor)
                }
            })
            .collect()
    };

    Ok(MelSpectrogram {
        values,
        mel_bins: cfg.n_mels,
        frame_count: n_frames,
    })
}

/// Affine rescale of dB values into `[0, 1]` against corpus-wide extremes,
/// clamping anything outside the range.
pub fn normalize_db(s: &MelSpectrogram, db_min: f64, db_max: f64) -> Result<Vec<f64>> {
    if !(db_max > db_min) || !db_min.is_finite() || !db_max.is_finite() {
        return Err(Error::Config(format!(
            "need db_max > db_min, got min {db_min}, max {db_max}"
        )));
    }
    let span = db_max - db_min;
    Ok(s.values
        .iter()
        .map(|&v| ((v - db_min) / span).clamp(0.0, 1.0))
        .collect())
}
