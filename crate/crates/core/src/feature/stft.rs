//! Short-time Fourier transform over a Hann window.
//!
//! The FFT is a plain scalar radix-2 implementation with a precomputed
//! twiddle table so the preprocessing pipeline produces the same bytes on
//! every run regardless of CPU feature level.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Radix-2 complex FFT plan for a fixed power-of-two size.
pub struct Fft {
    n: usize,
    // twiddles e^{-2πik/n} for k in 0..n/2
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl Fft {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::Config(format!(
                "fft size must be a power of two >= 2, got {n}"
            )));
        }
        let half = n / 2;
        let mut cos = Vec::with_capacity(half);
        let mut sin = Vec::with_capacity(half);
        for k in 0..half {
            let ang = -2.0 * PI * k as f64 / n as f64;
            cos.push(ang.cos());
            sin.push(ang.sin());
        }
        Ok(Self { n, cos, sin })
    }

    /// In-place decimation-in-time transform.
    pub fn forward(&self, re: &mut [f64], im: &mut [f64]) {
        let n = self.n;
        debug_assert_eq!(re.len(), n);
        debug_assert_eq!(im.len(), n);

        // bit-reversal permutation
        let mut j = 0usize;
        for i in 1..n {
            let mut bit = n >> 1;
            while j & bit != 0 {
                j ^= bit;
                bit >>= 1;
            }
            j |= bit;
            if i < j {
                re.swap(i, j);
                im.swap(i, j);
            }
        }

        let mut len = 2;
        while len <= n {
            let stride = n / len;
            let half = len / 2;
            let mut base = 0;
            while base < n {
                for k in 0..half {
                    let w_re = self.cos[k * stride];
                    let w_im = self.sin[k * stride];
                    let a = base + k;
                    let b = a + half;
                    let t_re = re[b] * w_re - im[b] * w_im;
                    let t_im = re[b] * w_im + im[b] * w_re;
                    re[b] = re[a] - t_re;
                    im[b] = im[a] - t_im;
                    re[a] += t_re;
                    im[a] += t_im;
                }
                base += len;
            }
            len <<= 1;
        }
    }
}

/// Periodic Hann window of length `n`.
pub fn hann_window(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
        .collect()
}

/// Number of full analysis frames for a signal of `len` samples.
pub fn frame_count(len: usize, fft_size: usize, hop: usize) -> usize {
    if len < fft_size {
        0
    } else {
        1 + (len - fft_size) / hop
    }
}

/// Power spectrogram: `frame_count` rows of `fft_size/2 + 1` bins, each the
/// squared magnitude of the windowed DFT.
pub fn power_spectrogram(samples: &[f64], fft_size: usize, hop: usize) -> Result<Vec<Vec<f64>>> {
    if hop == 0 {
        return Err(Error::Config("hop must be positive".into()));
    }
    if samples.len() < fft_size {
        return Err(Error::Input(format!(
            "waveform too short: {} samples, need at least {fft_size}",
            samples.len()
        )));
    }
    let fft = Fft::new(fft_size)?;
    let window = hann_window(fft_size);
    let n_bins = fft_size / 2 + 1;
    let n_frames = frame_count(samples.len(), fft_size, hop);

    let mut re = vec![0.0; fft_size];
    let mut im = vec![0.0; fft_size];
    let mut out = Vec::with_capacity(n_frames);
    for t in 0..n_frames {
        let start = t * hop;
        for (x, (s, w)) in re
            .iter_mut()
            .zip(samples[start..start + fft_size].iter().zip(&window))
        {
            *x = s * w;
        }
        im.fill(0.0);
        fft.forward(&mut re, &mut im);
        let mut row = Vec::with_capacity(n_bins);
        for b in 0..n_bins {
            row.push(re[b] * re[b] + im[b] * im[b]);
        }
        out.push(row);
    }
    Ok(out)
}
