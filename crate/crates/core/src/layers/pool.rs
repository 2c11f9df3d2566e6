//! Max pooling on the imaginary parts and the flatten bridge to the
//! real-valued head.

use crate::error::{Error, Result};
use crate::feature::QuaternionImage;
use crate::quat::Quaternion;

/// Forward state for [`qmaxpool_backward`]: the selected input index per
/// output cell, plus shapes for validation.
pub struct PoolCache {
    argmax: Vec<usize>,
    in_h: usize,
    in_w: usize,
    out_h: usize,
    out_w: usize,
    channels: usize,
}

/// Per channel, each `window×window` block (stride = window) emits the
/// single quaternion whose imaginary part has the largest Euclidean norm;
/// ties go to the earliest position in row-major order. Trailing rows and
/// columns that do not fill a window are dropped.
pub fn qmaxpool(input: &QuaternionImage, window: usize) -> Result<(QuaternionImage, PoolCache)> {
    if window == 0 {
        return Err(Error::Config("pool window must be positive".into()));
    }
    if input.height < window || input.width < window {
        return Err(Error::Shape(format!(
            "input {}x{} smaller than pool window {window}",
            input.height, input.width
        )));
    }
    let out_h = input.height / window;
    let out_w = input.width / window;
    let c = input.channels;
    let mut out = QuaternionImage::zeros(out_h, out_w, c);
    let mut argmax = vec![0usize; out_h * out_w * c];

    for ch in 0..c {
        for oy in 0..out_h {
            for ox in 0..out_w {
                let mut best_idx = 0usize;
                let mut best_norm = f64::NEG_INFINITY;
                for wy in 0..window {
                    for wx in 0..window {
                        let idx = input.index(oy * window + wy, ox * window + wx, ch);
                        let q = &input.pixels()[idx];
                        let n = q.i * q.i + q.j * q.j + q.k * q.k;
                        if n > best_norm {
                            best_norm = n;
                            best_idx = idx;
                        }
                    }
                }
                out.set(oy, ox, ch, input.pixels()[best_idx]);
                argmax[(oy * out_w + ox) * c + ch] = best_idx;
            }
        }
    }

    Ok((
        out,
        PoolCache {
            argmax,
            in_h: input.height,
            in_w: input.width,
            out_h,
            out_w,
            channels: c,
        },
    ))
}

/// Routes each upstream gradient to the position that won its window.
pub fn qmaxpool_backward(
    grad_out: &QuaternionImage,
    cache: PoolCache,
) -> Result<QuaternionImage> {
    if grad_out.height != cache.out_h
        || grad_out.width != cache.out_w
        || grad_out.channels != cache.channels
    {
        return Err(Error::State(
            "upstream gradient does not match the cached pool output shape".into(),
        ));
    }
    let mut grad_in = QuaternionImage::zeros(cache.in_h, cache.in_w, cache.channels);
    for (g, &idx) in grad_out.pixels().iter().zip(&cache.argmax) {
        let dst = &mut grad_in.pixels_mut()[idx];
        *dst = *dst + *g;
    }
    Ok(grad_in)
}

/// Shape bookkeeping for [`unflatten_gradient`].
pub struct FlattenCache {
    height: usize,
    width: usize,
    channels: usize,
}

/// Serializes the imaginary parts as reals: row-major spatial order, then
/// channel, then (i, j, k) — `H·W·C·3` values.
pub fn flatten(input: &QuaternionImage) -> (Vec<f64>, FlattenCache) {
    let mut out = Vec::with_capacity(input.pixels().len() * 3);
    for q in input.pixels() {
        out.push(q.i);
        out.push(q.j);
        out.push(q.k);
    }
    (
        out,
        FlattenCache {
            height: input.height,
            width: input.width,
            channels: input.channels,
        },
    )
}

/// Rebuilds a pure quaternion gradient image from a flat real gradient.
pub fn unflatten_gradient(grad: &[f64], cache: FlattenCache) -> Result<QuaternionImage> {
    let n = cache.height * cache.width * cache.channels;
    if grad.len() != n * 3 {
        return Err(Error::State(format!(
            "flat gradient has {} values, cached shape implies {}",
            grad.len(),
            n * 3
        )));
    }
    let mut img = QuaternionImage::zeros(cache.height, cache.width, cache.channels);
    for (q, chunk) in img.pixels_mut().iter_mut().zip(grad.chunks_exact(3)) {
        *q = Quaternion::pure(chunk[0], chunk[1], chunk[2]);
    }
    Ok(img)
}
