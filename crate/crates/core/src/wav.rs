//! Minimal PCM WAV reader (8/16/24-bit integer and 32-bit float) plus a
//! 16-bit writer used by the fixture generator.

use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};

/// Mono speech waveform with amplitudes in `[−1, 1]`.
#[derive(Debug, Clone)]
pub struct Waveform {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Input("waveform must be non-empty".into()));
        }
        if sample_rate == 0 {
            return Err(Error::Input("sample rate must be positive".into()));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::Input("waveform contains non-finite samples".into()));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

const FORMAT_PCM: u16 = 1;
const FORMAT_FLOAT: u16 = 3;
const FORMAT_EXTENSIBLE: u16 = 0xFFFE;

/// Reads a WAV file and mixes all channels down to mono by averaging.
pub fn read_wav(path: &Path) -> Result<Waveform> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    decode_wav(&bytes).map_err(|e| match e {
        Error::Input(msg) => Error::Input(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Decodes WAV bytes; mono output, multi-channel input averaged per frame.
pub fn decode_wav(bytes: &[u8]) -> Result<Waveform> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(Error::Input("not a RIFF/WAVE file".into()));
    }

    let mut fmt: Option<(u16, u16, u32, u16)> = None; // (format, channels, rate, bits)
    let mut data: Option<&[u8]> = None;

    let mut off = 12usize;
    while off + 8 <= bytes.len() {
        let id = &bytes[off..off + 4];
        let size = u32::from_le_bytes(bytes[off + 4..off + 8].try_into().unwrap()) as usize;
        let body_start = off + 8;
        let body_end = body_start.checked_add(size).filter(|&e| e <= bytes.len());
        let body_end = match body_end {
            Some(e) => e,
            None => {
                if id == b"data" {
                    // tolerate a truncated final data chunk
                    bytes.len()
                } else {
                    return Err(Error::Input("truncated chunk".into()));
                }
            }
        };
        let body = &bytes[body_start..body_end];
        match id {
            b"fmt " => {
                if body.len() < 16 {
                    return Err(Error::Input("fmt chunk too short".into()));
                }
                let mut format = u16::from_le_bytes(body[0..2].try_into().unwrap());
                let channels = u16::from_le_bytes(body[2..4].try_into().unwrap());
                let rate = u32::from_le_bytes(body[4..8].try_into().unwrap());
                let bits = u16::from_le_bytes(body[14..16].try_into().unwrap());
                if format == FORMAT_EXTENSIBLE {
                    // SubFormat GUID starts at byte 24 of the fmt body;
                    // its first two bytes are the plain format tag.
                    if body.len() < 26 {
                        return Err(Error::Input("extensible fmt chunk too short".into()));
                    }
                    format = u16::from_le_bytes(body[24..26].try_into().unwrap());
                }
                fmt = Some((format, channels, rate, bits));
            }
            b"data" => data = Some(body),
            _ => {}
        }
        // chunks are word-aligned
        off = body_start + size + (size & 1);
    }

    let (format, channels, rate, bits) = fmt.ok_or_else(|| Error::Input("missing fmt chunk".into()))?;
    let data = data.ok_or_else(|| Error::Input("missing data chunk".into()))?;
    if channels == 0 {
        return Err(Error::Input("zero channels".into()));
    }
    if rate == 0 {
        return Err(Error::Input("zero sample rate".into()));
    }

    let decode_frame: fn(&[u8]) -> f64;
    let bytes_per_sample = match (format, bits) {
        (FORMAT_PCM, 8) => {
            decode_frame = |b| (b[0] as f64 - 128.0) / 128.0;
            1
        }
        (FORMAT_PCM, 16) => {
            decode_frame = |b| i16::from_le_bytes([b[0], b[1]]) as f64 / 32768.0;
            2
        }
        (FORMAT_PCM, 24) => {
            decode_frame = |b| {
                let v = i32::from_le_bytes([0, b[0], b[1], b[2]]) >> 8;
                v as f64 / 8_388_608.0
            };
            3
        }
        (FORMAT_PCM, 32) => {
            decode_frame = |b| i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64 / 2_147_483_648.0;
            4
        }
        (FORMAT_FLOAT, 32) => {
            decode_frame = |b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64;
            4
        }
        _ => {
            return Err(Error::Input(format!(
                "unsupported wav encoding: format tag {format}, {bits} bits"
            )))
        }
    };

    let frame_bytes = bytes_per_sample * channels as usize;
    let n_frames = data.len() / frame_bytes;
    if n_frames == 0 {
        return Err(Error::Input("empty data chunk".into()));
    }

    let mut samples = Vec::with_capacity(n_frames);
    let inv_ch = 1.0 / channels as f64;
    for frame in 0..n_frames {
        let base = frame * frame_bytes;
        let mut acc = 0.0;
        for ch in 0..channels as usize {
            let s = base + ch * bytes_per_sample;
            acc += decode_frame(&data[s..s + bytes_per_sample]);
        }
        samples.push((acc * inv_ch).clamp(-1.0, 1.0));
    }

    Waveform::new(samples, rate)
}

/// Writes a mono 16-bit PCM WAV file.
pub fn write_wav_mono_16(path: &Path, samples: &[f64], sample_rate: u32) -> Result<()> {
    let mut out = Vec::with_capacity(44 + samples.len() * 2);
    let data_size = (samples.len() * 2) as u32;
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_size).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&FORMAT_PCM.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&sample_rate.to_le_bytes());
    out.extend_from_slice(&(sample_rate * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_size.to_le_bytes());
    for &s in samples {
        let v = (s.clamp(-1.0, 1.0) * 32767.0).round() as i16;
        out.extend_from_slice(&v.to_le_bytes());
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}
