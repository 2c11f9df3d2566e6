//! Quaternion ReLU, softmax, and dropout.

use crate::error::{Error, Result};
use crate::feature::QuaternionImage;
use rand::Rng;

/// Forward state for [`qrelu_backward`]: the pre-activation image.
pub struct ReluCache {
    input: QuaternionImage,
}

/// Quaternion ReLU: Euclidean projection of each pixel onto the valid
/// color cube — every imaginary component clamped into `[0, 1]`, the real
/// part forced to zero. Invalid rotations are thereby reset to the nearest
/// point in color space.
pub fn qrelu(input: &QuaternionImage) -> (QuaternionImage, ReluCache) {
    let mut out = input.clone();
    for q in out.pixels_mut() {
        q.r = 0.0;
        q.i = q.i.clamp(0.0, 1.0);
        q.j = q.j.clamp(0.0, 1.0);
        q.k = q.k.clamp(0.0, 1.0);
    }
    (
        out,
        ReluCache {
            input: input.clone(),
        },
    )
}

/// Projection subgradient: upstream gradient passes only where the input
/// component was strictly inside `(0, 1)`; clamped components and the real
/// part get zero.
pub fn qrelu_backward(
    grad_out: &QuaternionImage,
    cache: ReluCache,
) -> Result<QuaternionImage> {
    let input = cache.input;
    if grad_out.height != input.height
        || grad_out.width != input.width
        || grad_out.channels != input.channels
    {
        return Err(Error::State(
            "upstream gradient does not match the cached activation shape".into(),
        ));
    }
    let mut grad_in = QuaternionImage::zeros(input.height, input.width, input.channels);
    let interior = |x: f64| x > 0.0 && x < 1.0;
    for ((gi, go), inp) in grad_in
        .pixels_mut()
        .iter_mut()
        .zip(grad_out.pixels())
        .zip(input.pixels())
    {
        gi.r = 0.0;
        gi.i = if interior(inp.i) { go.i } else { 0.0 };
        gi.j = if interior(inp.j) { go.j } else { 0.0 };
        gi.k = if interior(inp.k) { go.k } else { 0.0 };
    }
    Ok(grad_in)
}

/// Numerically stable softmax: shifts by the row maximum before
/// exponentiating.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|&e| e / sum).collect()
}

/// Inverted-dropout mask: each entry is `0` with probability `p`, else
/// `1/(1−p)`, so eval mode needs no rescaling.
pub fn sample_dropout_mask<R: Rng>(len: usize, p: f64, rng: &mut R) -> Vec<f64> {
    debug_assert!((0.0..1.0).contains(&p));
    let keep = 1.0 / (1.0 - p);
    (0..len)
        .map(|_| if rng.random::<f64>() < p { 0.0 } else { keep })
        .collect()
}

/// Applies a dropout mask elementwise (identical in forward and backward).
pub fn apply_dropout_mask(x: &[f64], mask: &[f64]) -> Vec<f64> {
    debug_assert_eq!(x.len(), mask.len());
    x.iter().zip(mask).map(|(a, m)| a * m).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quat::Quaternion;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn qrelu_interior_point_unchanged() {
        let mut img = QuaternionImage::zeros(1, 1, 1);
        img.set(0, 0, 0, Quaternion::pure(0.5, 0.5, 0.5));
        let (out, _) = qrelu(&img);
        assert_eq!(out.get(0, 0, 0), Quaternion::pure(0.5, 0.5, 0.5));
    }

    #[test]
    fn qrelu_clamps_componentwise() {
        let mut img = QuaternionImage::zeros(1, 1, 1);
        img.set(0, 0, 0, Quaternion::new(0.9, -0.2, 1.3, 0.5));
        let (out, _) = qrelu(&img);
        assert_eq!(out.get(0, 0, 0), Quaternion::pure(0.0, 1.0, 0.5));
    }

    #[test]
    fn qrelu_gradient_masks_clamped_components() {
        let mut img = QuaternionImage::zeros(1, 1, 1);
        img.set(0, 0, 0, Quaternion::new(0.3, -0.2, 1.3, 0.5));
        let (_, cache) = qrelu(&img);
        let mut g = QuaternionImage::zeros(1, 1, 1);
        g.set(0, 0, 0, Quaternion::new(7.0, 2.0, 3.0, 4.0));
        let gin = qrelu_backward(&g, cache).unwrap();
        // i clamped at 0, j clamped at 1 → zero; k interior → pass-through;
        // real part never propagates
        assert_eq!(gin.get(0, 0, 0), Quaternion::pure(0.0, 0.0, 4.0));
    }

    #[test]
    fn qrelu_boundary_components_block_gradient() {
        let mut img = QuaternionImage::zeros(1, 1, 1);
        img.set(0, 0, 0, Quaternion::pure(0.0, 1.0, 0.9999));
        let (_, cache) = qrelu(&img);
        let mut g = QuaternionImage::zeros(1, 1, 1);
        g.set(0, 0, 0, Quaternion::pure(1.0, 1.0, 1.0));
        let gin = qrelu_backward(&g, cache).unwrap();
        assert_eq!(gin.get(0, 0, 0), Quaternion::pure(0.0, 0.0, 1.0));
    }

    #[test]
    fn softmax_uniform_and_normalized() {
        let probs = softmax(&[3.7; 8]);
        for &p in &probs {
            assert!((p - 0.125).abs() < 1e-12);
        }

        let mut rng = ChaCha8Rng::seed_from_u64(12);
        use rand::Rng;
        for _ in 0..50 {
            let logits: Vec<f64> = (0..6).map(|_| rng.random_range(-30.0..30.0)).collect();
            let probs = softmax(&logits);
            let sum: f64 = probs.iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
            assert!(probs.iter().all(|&p| p >= 0.0));
        }
    }

    #[test]
    fn softmax_survives_large_logits() {
        let probs = softmax(&[1e4, 1e4 - 5.0]);
        assert!(probs.iter().all(|p| p.is_finite()));
        assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dropout_mask_statistics_and_scaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mask = sample_dropout_mask(100_000, 0.3, &mut rng);
        let zeros = mask.iter().filter(|&&m| m == 0.0).count();
        let rate = zeros as f64 / mask.len() as f64;
        assert!((rate - 0.3).abs() < 0.01);
        let keep = 1.0 / 0.7;
        assert!(mask.iter().all(|&m| m == 0.0 || (m - keep).abs() < 1e-15));

        // E[mask] = 1 ⇒ activations keep their scale in expectation
        let mean: f64 = mask.iter().sum::<f64>() / mask.len() as f64;
        assert!((mean - 1.0).abs() < 0.02);
    }

    #[test]
    fn dropout_same_seed_same_mask() {
        let mut a = ChaCha8Rng::seed_from_u64(5);
        let mut b = ChaCha8Rng::seed_from_u64(5);
        assert_eq!(
            sample_dropout_mask(64, 0.3, &mut a),
            sample_dropout_mask(64, 0.3, &mut b)
        );
    }
}
