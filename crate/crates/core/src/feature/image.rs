//! Color-image and quaternion-image containers plus the render step that
//! turns a normalized mel grid into the fixed-size RGB input image.

use std::path::Path;

use crate::error::{Error, Result};
use crate::quat::Quaternion;

use super::colormap::Colormap;

/// Height of the rendered input image.
pub const IMAGE_HEIGHT: usize = 50;
/// Width of the rendered input image.
pub const IMAGE_WIDTH: usize = 75;

/// Fixed-size RGB image with channels in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbImage {
    pixels: Vec<[f64; 3]>,
}

impl RgbImage {
    /// `pixels` must hold exactly 50×75 entries in row-major order, every
    /// channel inside `[0, 1]`.
    pub fn new(pixels: Vec<[f64; 3]>) -> Result<Self> {
        if pixels.len() != IMAGE_HEIGHT * IMAGE_WIDTH {
            return Err(Error::Shape(format!(
                "rgb image must be {IMAGE_HEIGHT}x{IMAGE_WIDTH}, got {} pixels",
                pixels.len()
            )));
        }
        for p in &pixels {
            for &c in p {
                if !(0.0..=1.0).contains(&c) {
                    return Err(Error::Input(format!("channel value {c} outside [0, 1]")));
                }
            }
        }
        Ok(Self { pixels })
    }

    pub fn height(&self) -> usize {
        IMAGE_HEIGHT
    }

    pub fn width(&self) -> usize {
        IMAGE_WIDTH
    }

    #[inline]
    pub fn pixel(&self, row: usize, col: usize) -> [f64; 3] {
        self.pixels[row * IMAGE_WIDTH + col]
    }

    pub fn pixels(&self) -> &[[f64; 3]] {
        &self.pixels
    }

    /// 8-bit PNG preview. Display only; the binary feature record is the
    /// canonical representation.
    pub fn save_png(&self, path: &Path) -> Result<()> {
        let mut buf = image::RgbImage::new(IMAGE_WIDTH as u32, IMAGE_HEIGHT as u32);
        for (idx, p) in self.pixels.iter().enumerate() {
            let x = (idx % IMAGE_WIDTH) as u32;
            let y = (idx / IMAGE_WIDTH) as u32;
            buf.put_pixel(
                x,
                y,
                image::Rgb([
                    (p[0] * 255.0).round() as u8,
                    (p[1] * 255.0).round() as u8,
                    (p[2] * 255.0).round() as u8,
                ]),
            );
        }
        buf.save(path)
            .map_err(|e| Error::Input(format!("png write failed for {}: {e}", path.display())))
    }
}

/// H×W×C grid of quaternions. Feature maps flowing through the network are
/// pure (zero real part); channel count grows as convolutions stack.
#[derive(Debug, Clone, PartialEq)]
pub struct QuaternionImage {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pixels: Vec<Quaternion>,
}

impl QuaternionImage {
    pub fn zeros(height: usize, width: usize, channels: usize) -> Self {
        Self {
            height,
            width,
            channels,
            pixels: vec![Quaternion::ZERO; height * width * channels],
        }
    }

    pub fn from_pixels(
        height: usize,
        width: usize,
        channels: usize,
        pixels: Vec<Quaternion>,
    ) -> Result<Self> {
        if pixels.len() != height * width * channels {
            return Err(Error::Shape(format!(
                "expected {}x{}x{} = {} pixels, got {}",
                height,
                width,
                channels,
                height * width * channels,
                pixels.len()
            )));
        }
        Ok(Self {
            height,
            width,
            channels,
            pixels,
        })
    }

    #[inline]
    pub fn index(&self, row: usize, col: usize, ch: usize) -> usize {
        (row * self.width + col) * self.channels + ch
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize, ch: usize) -> Quaternion {
        self.pixels[self.index(row, col, ch)]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, ch: usize, q: Quaternion) {
        let idx = self.index(row, col, ch);
        self.pixels[idx] = q;
    }

    pub fn pixels(&self) -> &[Quaternion] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [Quaternion] {
        &mut self.pixels
    }

    /// True when every pixel has an exactly zero real part.
    pub fn is_pure(&self) -> bool {
        self.pixels.iter().all(|q| q.r == 0.0)
    }

    pub fn max_abs_real(&self) -> f64 {
        self.pixels.iter().map(|q| q.r.abs()).fold(0.0, f64::max)
    }
}

/// Encodes an RGB image as a single-channel pure-quaternion matrix:
/// pixel `(r, g, b)` becomes `0 + r·i + g·j + b·k`.
pub fn encode_quaternion(img: &RgbImage) -> QuaternionImage {
    let pixels = img
        .pixels()
        .iter()
        .map(|&[r, g, b]| Quaternion::pure(r, g, b))
        .collect();
    QuaternionImage::from_pixels(img.height(), img.width(), 1, pixels)
        .expect("rgb image dimensions are fixed")
}

/// Inverse of [`encode_quaternion`]; exact for feature images built by the
/// pipeline.
pub fn decode_quaternion(img: &QuaternionImage) -> Result<RgbImage> {
    if img.channels != 1 || img.height != IMAGE_HEIGHT || img.width != IMAGE_WIDTH {
        return Err(Error::Shape(format!(
            "expected {IMAGE_HEIGHT}x{IMAGE_WIDTH}x1 quaternion image, got {}x{}x{}",
            img.height, img.width, img.channels
        )));
    }
    RgbImage::new(img.pixels().iter().map(|q| [q.i, q.j, q.k]).collect())
}

/// Renders a normalized `[rows × cols]` grid (row 0 = lowest frequency)
/// into the fixed 50×75 RGB image: colormap lookup per cell, bilinear
/// resize, and a vertical flip so frequency ascends bottom-to-top.
pub fn render_rgb(norm: &[f64], rows: usize, cols: usize, cmap: &Colormap) -> Result<RgbImage> {
    if rows == 0 || cols == 0 || norm.len() != rows * cols {
        return Err(Error::Shape(format!(
            "normalized grid {rows}x{cols} does not match {} values",
            norm.len()
        )));
    }

    let colored: Vec<[f64; 3]> = norm.iter().map(|&v| cmap.lookup(v)).collect();

    // edge-aligned sampling: output corners map exactly onto input corners
    let src_pos = |out_idx: usize, out_len: usize, in_len: usize| -> (usize, usize, f64) {
        if in_len == 1 || out_len == 1 {
            return (0, 0, 0.0);
        }
        let pos = out_idx as f64 * (in_len - 1) as f64 / (out_len - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = (lo + 1).min(in_len - 1);
        (lo, hi, pos - lo as f64)
    };

    let mut out = Vec::with_capacity(IMAGE_HEIGHT * IMAGE_WIDTH);
    for r in 0..IMAGE_HEIGHT {
        // flip: image row 0 shows the top of the frequency axis
        let (y0, y1, fy) = src_pos(IMAGE_HEIGHT - 1 - r, IMAGE_HEIGHT, rows);
        for c in 0..IMAGE_WIDTH {
            let (x0, x1, fx) = src_pos(c, IMAGE_WIDTH, cols);
            let mut px = [0.0; 3];
            for ch in 0..3 {
                let p00 = colored[y0 * cols + x0][ch];
                let p01 = colored[y0 * cols + x1][ch];
                let p10 = colored[y1 * cols + x0][ch];
                let p11 = colored[y1 * cols + x1][ch];
                let top = p00 + (p01 - p00) * fx;
                let bottom = p10 + (p11 - p10) * fx;
                px[ch] = (top + (bottom - top) * fy).clamp(0.0, 1.0);
            }
            out.push(px);
        }
    }
    RgbImage::new(out)
}
