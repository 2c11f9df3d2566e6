//! The network: two quaternion convolution blocks feeding a real-valued
//! dense + softmax head.
//!
//! Stack: qconv (32 kernels, 3×3) → quaternion ReLU → 2×2 imaginary
//! max-pool → qconv (64 kernels) → quaternion ReLU → flatten → dropout →
//! dense → softmax.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::feature::{QuaternionImage, IMAGE_HEIGHT, IMAGE_WIDTH};
use crate::layers::{
    apply_dropout_mask, dense_backward, dense_forward, flatten, qconv2d_backward, qconv2d_forward,
    qmaxpool, qmaxpool_backward, qrelu, qrelu_backward, softmax, unflatten_gradient, ConvCache,
    DenseLayer, FlattenCache, PoolCache, QConvLayer, ReluCache, SCALE_MIN,
};

/// Architecture description. Consecutive layer shapes must compose; the
/// defaults are the 50×75 two-block configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub input_height: usize,
    pub input_width: usize,
    pub input_channels: usize,
    pub conv1_kernels: usize,
    pub conv2_kernels: usize,
    pub kernel_size: usize,
    pub pool_window: usize,
    pub num_classes: usize,
}

impl ModelSpec {
    pub fn with_classes(num_classes: usize) -> Self {
        Self {
            input_height: IMAGE_HEIGHT,
            input_width: IMAGE_WIDTH,
            input_channels: 1,
            conv1_kernels: 32,
            conv2_kernels: 64,
            kernel_size: 3,
            pool_window: 2,
            num_classes,
        }
    }

    /// Spatial dimensions after each stage:
    /// `(conv1 out, pooled, conv2 out)`.
    pub fn stage_dims(&self) -> Result<[(usize, usize); 3]> {
        let l = self.kernel_size;
        if self.input_height < l || self.input_width < l {
            return Err(Error::Shape(format!(
                "input {}x{} smaller than kernel {l}",
                self.input_height, self.input_width
            )));
        }
        let c1 = (self.input_height - l + 1, self.input_width - l + 1);
        if c1.0 < self.pool_window || c1.1 < self.pool_window {
            return Err(Error::Shape("first conv output smaller than pool window".into()));
        }
        let p = (c1.0 / self.pool_window, c1.1 / self.pool_window);
        if p.0 < l || p.1 < l {
            return Err(Error::Shape("pooled map smaller than second kernel".into()));
        }
        let c2 = (p.0 - l + 1, p.1 - l + 1);
        Ok([c1, p, c2])
    }

    /// Length of the flattened real vector feeding the dense head.
    pub fn flat_dim(&self) -> Result<usize> {
        let [_, _, c2] = self.stage_dims()?;
        Ok(c2.0 * c2.1 * self.conv2_kernels * 3)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_classes < 2 {
            return Err(Error::Config(format!(
                "need at least 2 classes, got {}",
                self.num_classes
            )));
        }
        if self.input_channels == 0
            || self.conv1_kernels == 0
            || self.conv2_kernels == 0
            || self.kernel_size == 0
            || self.pool_window == 0
        {
            return Err(Error::Config("model dimensions must be positive".into()));
        }
        self.stage_dims()?;
        Ok(())
    }
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self::with_classes(8)
    }
}

/// Per-layer and total parameter counts, with the real-convolution
/// baseline the quaternion kernels replace (one 3-channel real kernel per
/// quaternion channel pair).
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ParameterCount {
    pub conv1: usize,
    pub conv2: usize,
    pub dense: usize,
    pub total: usize,
    pub conv1_real_equivalent: usize,
    pub conv2_real_equivalent: usize,
}

impl ParameterCount {
    pub fn conv_total(&self) -> usize {
        self.conv1 + self.conv2
    }

    pub fn conv_real_equivalent_total(&self) -> usize {
        self.conv1_real_equivalent + self.conv2_real_equivalent
    }
}

/// Exact per-layer parameter counts for a spec: each quaternion kernel
/// element holds two parameters (scale, angle); the dense head holds
/// weights plus biases.
pub fn count_parameters(spec: &ModelSpec) -> Result<ParameterCount> {
    spec.validate()?;
    let l2 = spec.kernel_size * spec.kernel_size;
    let conv1 = spec.conv1_kernels * spec.input_channels * l2 * 2;
    let conv2 = spec.conv2_kernels * spec.conv1_kernels * l2 * 2;
    let dense = spec.num_classes * (spec.flat_dim()? + 1);
    Ok(ParameterCount {
        conv1,
        conv2,
        dense,
        total: conv1 + conv2 + dense,
        // a real conv consuming the 3 color planes needs 3·in real channels
        conv1_real_equivalent: spec.conv1_kernels * 3 * spec.input_channels * l2,
        conv2_real_equivalent: spec.conv2_kernels * 3 * spec.conv1_kernels * l2,
    })
}

/// The trainable network.
#[derive(Debug, Clone, PartialEq)]
pub struct QcnnModel {
    pub spec: ModelSpec,
    pub conv1: QConvLayer,
    pub conv2: QConvLayer,
    pub dense: DenseLayer,
}

/// Gradients mirroring the parameter groups of [`QcnnModel`].
pub struct ModelGrads {
    pub conv1_scale: Vec<f64>,
    pub conv1_angle: Vec<f64>,
    pub conv2_scale: Vec<f64>,
    pub conv2_angle: Vec<f64>,
    pub dense_weights: Vec<f64>,
    pub dense_biases: Vec<f64>,
}

impl ModelGrads {
    pub fn zeros_like(model: &QcnnModel) -> Self {
        Self {
            conv1_scale: vec![0.0; model.conv1.scale.len()],
            conv1_angle: vec![0.0; model.conv1.angle.len()],
            conv2_scale: vec![0.0; model.conv2.scale.len()],
            conv2_angle: vec![0.0; model.conv2.angle.len()],
            dense_weights: vec![0.0; model.dense.weights.len()],
            dense_biases: vec![0.0; model.dense.biases.len()],
        }
    }

    /// Accumulates another sample's gradients; callers fix the reduction
    /// order so results are run-to-run identical.
    pub fn add(&mut self, other: &ModelGrads) {
        for (a, b) in self.iter_groups_mut().into_iter().zip(other.iter_groups()) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for group in self.iter_groups_mut() {
            for v in group {
                *v *= factor;
            }
        }
    }

    pub fn iter_groups(&self) -> [&[f64]; 6] {
        [
            &self.conv1_scale,
            &self.conv1_angle,
            &self.conv2_scale,
            &self.conv2_angle,
            &self.dense_weights,
            &self.dense_biases,
        ]
    }

    pub fn iter_groups_mut(&mut self) -> [&mut [f64]; 6] {
        [
            &mut self.conv1_scale,
            &mut self.conv1_angle,
            &mut self.conv2_scale,
            &mut self.conv2_angle,
            &mut self.dense_weights,
            &mut self.dense_biases,
        ]
    }

    /// Name of the first parameter group holding a non-finite value.
    pub fn first_non_finite(&self) -> Option<&'static str> {
        const NAMES: [&str; 6] = [
            "conv1.scale",
            "conv1.angle",
            "conv2.scale",
            "conv2.angle",
            "dense.weights",
            "dense.biases",
        ];
        for (group, name) in self.iter_groups().into_iter().zip(NAMES) {
            if group.iter().any(|v| !v.is_finite()) {
                return Some(name);
            }
        }
        None
    }
}

/// Everything the backward pass needs from one forward evaluation.
pub struct ForwardCache {
    conv1: ConvCache,
    relu1: ReluCache,
    pool: PoolCache,
    conv2: ConvCache,
    relu2: ReluCache,
    flat: FlattenCache,
    dropout_mask: Option<Vec<f64>>,
    dense: crate::layers::DenseCache,
}

impl QcnnModel {
    /// Seeded initialization. Kernel angles are uniform in `[−π, π]`;
    /// kernel scales are uniform in `(0, σ]` with the Glorot bound
    /// `σ = √(6/(fan_in + fan_out))` counted over the receptive field,
    /// then clamped up to the scale floor. Dense weights are
    /// Glorot-uniform, biases zero.
    pub fn init(spec: &ModelSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut conv1 = QConvLayer::new(spec.input_channels, spec.conv1_kernels, spec.kernel_size)?;
        let mut conv2 = QConvLayer::new(spec.conv1_kernels, spec.conv2_kernels, spec.kernel_size)?;
        init_conv(&mut conv1, &mut rng);
        init_conv(&mut conv2, &mut rng);

        let flat = spec.flat_dim()?;
        let mut dense = DenseLayer::new(flat, spec.num_classes)?;
        let bound = (6.0 / (flat + spec.num_classes) as f64).sqrt();
        for w in &mut dense.weights {
            *w = rng.random_range(-bound..bound);
        }

        Ok(Self {
            spec: spec.clone(),
            conv1,
            conv2,
            dense,
        })
    }

    /// Forward pass. `dropout_mask`, when given, is applied to the
    /// flattened vector (training mode); `None` is evaluation mode.
    pub fn forward(
        &self,
        input: &QuaternionImage,
        dropout_mask: Option<&[f64]>,
    ) -> Result<(Vec<f64>, ForwardCache)> {
        if input.height != self.spec.input_height
            || input.width != self.spec.input_width
            || input.channels != self.spec.input_channels
        {
            return Err(Error::Shape(format!(
                "input {}x{}x{} does not match model input {}x{}x{}",
                input.height,
                input.width,
                input.channels,
                self.spec.input_height,
                self.spec.input_width,
                self.spec.input_channels
            )));
        }
        let (a1, conv1_cache) = qconv2d_forward(input, &self.conv1)?;
        let (a2, relu1_cache) = qrelu(&a1);
        let (a3, pool_cache) = qmaxpool(&a2, self.spec.pool_window)?;
        let (a4, conv2_cache) = qconv2d_forward(&a3, &self.conv2)?;
        let (a5, relu2_cache) = qrelu(&a4);
        let (mut flat_vec, flat_cache) = flatten(&a5);
        let dropout_mask = match dropout_mask {
            Some(mask) => {
                if mask.len() != flat_vec.len() {
                    return Err(Error::Shape(format!(
                        "dropout mask has {} entries, flattened vector has {}",
                        mask.len(),
                        flat_vec.len()
                    )));
                }
                flat_vec = apply_dropout_mask(&flat_vec, mask);
                Some(mask.to_vec())
            }
            None => None,
        };
        let (logits, dense_cache) = dense_forward(&self.dense, &flat_vec)?;
        Ok((
            logits,
            ForwardCache {
                conv1: conv1_cache,
                relu1: relu1_cache,
                pool: pool_cache,
                conv2: conv2_cache,
                relu2: relu2_cache,
                flat: flat_cache,
                dropout_mask,
                dense: dense_cache,
            },
        ))
    }

    /// Evaluation-mode class distribution.
    pub fn predict(&self, input: &QuaternionImage) -> Result<Vec<f64>> {
        let (logits, _) = self.forward(input, None)?;
        Ok(softmax(&logits))
    }

    /// Backpropagates a logit gradient through the whole stack.
    pub fn backward(&self, grad_logits: &[f64], cache: ForwardCache) -> Result<ModelGrads> {
        let (dense_grads, grad_flat) = dense_backward(&self.dense, grad_logits, cache.dense)?;
        let grad_flat = match &cache.dropout_mask {
            Some(mask) => apply_dropout_mask(&grad_flat, mask),
            None => grad_flat,
        };
        let grad_a5 = unflatten_gradient(&grad_flat, cache.flat)?;
        let grad_a4 = qrelu_backward(&grad_a5, cache.relu2)?;
        let (grad_a3, conv2_scale, conv2_angle) =
            qconv2d_backward(&grad_a4, cache.conv2, &self.conv2)?;
        let grad_a2 = qmaxpool_backward(&grad_a3, cache.pool)?;
        let grad_a1 = qrelu_backward(&grad_a2, cache.relu1)?;
        let (_, conv1_scale, conv1_angle) = qconv2d_backward(&grad_a1, cache.conv1, &self.conv1)?;
        Ok(ModelGrads {
            conv1_scale,
            conv1_angle,
            conv2_scale,
            conv2_angle,
            dense_weights: dense_grads.weights,
            dense_biases: dense_grads.biases,
        })
    }

    /// Mutable views of the six parameter groups, in the same order as
    /// [`ModelGrads::iter_groups`].
    pub fn param_groups_mut(&mut self) -> [&mut Vec<f64>; 6] {
        [
            &mut self.conv1.scale,
            &mut self.conv1.angle,
            &mut self.conv2.scale,
            &mut self.conv2.angle,
            &mut self.dense.weights,
            &mut self.dense.biases,
        ]
    }

    pub fn param_groups(&self) -> [&Vec<f64>; 6] {
        [
            &self.conv1.scale,
            &self.conv1.angle,
            &self.conv2.scale,
            &self.conv2.angle,
            &self.dense.weights,
            &self.dense.biases,
        ]
    }

    /// Applies the scale floor to both convolution layers; called after
    /// every optimizer step.
    pub fn clamp_scales(&mut self) {
        self.conv1.clamp_scales();
        self.conv2.clamp_scales();
    }

    pub fn parameter_count(&self) -> usize {
        self.conv1.parameter_count() + self.conv2.parameter_count() + self.dense.parameter_count()
    }
}

/// Upper bound of the uniform scale draw for a conv layer.
///
/// The Glorot bound `√(6/(fan_in+fan_out))` alone is not usable here: the
/// scales are all positive (mean σ/2), and uniformly random rotations of
/// positive color vectors average to their gray-axis projection, so a
/// layer has a mean-signal gain of `fan_in·σ/2`. At Glorot's σ the second
/// conv amplifies typical inputs ~12×, every component saturates the
/// [0,1]³ projection, and gradients die. Capping the gain at one keeps
/// activations inside the cube at realistic input levels.
pub fn scale_init_bound(layer: &QConvLayer) -> f64 {
    let l2 = layer.kernel_size * layer.kernel_size;
    let fan_in = layer.in_channels * l2;
    let fan_out = layer.out_channels * l2;
    let glorot = (6.0 / (fan_in + fan_out) as f64).sqrt();
    glorot.min(2.0 / fan_in as f64)
}

fn init_conv<R: Rng>(layer: &mut QConvLayer, rng: &mut R) {
    let sigma = scale_init_bound(layer);
    // draw order is fixed: angle then scale per element
    for e in 0..layer.scale.len() {
        layer.angle[e] = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
        // uniform in (0, σ]: reflect the half-open range, then floor
        let draw = sigma - rng.random_range(0.0..sigma);
        layer.scale[e] = draw.max(SCALE_MIN);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quat::Quaternion;

    fn micro_spec() -> ModelSpec {
        ModelSpec {
            input_height: 10,
            input_width: 12,
            input_channels: 1,
            conv1_kernels: 2,
            conv2_kernels: 3,
            kernel_size: 3,
            pool_window: 2,
            num_classes: 2,
        }
    }

    fn random_input(spec: &ModelSpec, seed: u64) -> QuaternionImage {
        use rand::{Rng, SeedableRng};
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut img =
            QuaternionImage::zeros(spec.input_height, spec.input_width, spec.input_channels);
        for q in img.pixels_mut() {
            *q = Quaternion::pure(
                rng.random_range(0.05..0.95),
                rng.random_range(0.05..0.95),
                rng.random_range(0.05..0.95),
            );
        }
        img
    }

    #[test]
    fn default_spec_dimensions() {
        let spec = ModelSpec::with_classes(8);
        let [c1, p, c2] = spec.stage_dims().unwrap();
        assert_eq!(c1, (48, 73));
        assert_eq!(p, (24, 36));
        assert_eq!(c2, (22, 34));
        assert_eq!(spec.flat_dim().unwrap(), 143_616);
    }

    #[test]
    fn paper_parameter_counts() {
        let counts = count_parameters(&ModelSpec::with_classes(8)).unwrap();
        assert_eq!(counts.conv1, 576);
        assert_eq!(counts.conv2, 36_864);
        assert_eq!(counts.dense, 1_148_936);
        assert_eq!(counts.conv1_real_equivalent, 864);
        assert_eq!(counts.conv2_real_equivalent, 55_296);
        assert!(counts.conv_total() < counts.conv_real_equivalent_total());
        // the quaternion stack is exactly 2/3 of its real counterpart
        assert_eq!(counts.conv_total() * 3, counts.conv_real_equivalent_total() * 2);
    }

    #[test]
    fn init_is_deterministic_and_in_range() {
        let spec = micro_spec();
        let a = QcnnModel::init(&spec, 99).unwrap();
        let b = QcnnModel::init(&spec, 99).unwrap();
        assert_eq!(a, b);
        let c = QcnnModel::init(&spec, 100).unwrap();
        assert_ne!(a, c);

        let sigma1 = scale_init_bound(&a.conv1);
        assert!(a.conv1.scale.iter().all(|&s| s > 0.0 && s <= sigma1));
        let sigma2 = scale_init_bound(&a.conv2);
        assert!(a.conv2.scale.iter().all(|&s| s > 0.0 && s <= sigma2));
        assert!(a
            .conv1
            .angle
            .iter()
            .all(|&t| (-std::f64::consts::PI..=std::f64::consts::PI).contains(&t)));
        assert!(a.dense.biases.iter().all(|&b| b == 0.0));
    }

    #[test]
    fn dense_init_matches_glorot_moments() {
        // std of U[−a, a] is a/√3 = √(2/(fan_in+fan_out))
        let spec = ModelSpec {
            input_height: 10,
            input_width: 12,
            input_channels: 1,
            conv1_kernels: 2,
            conv2_kernels: 100,
            kernel_size: 3,
            pool_window: 2,
            num_classes: 50,
        };
        let model = QcnnModel::init(&spec, 1).unwrap();
        let n = model.dense.weights.len() as f64;
        let mean: f64 = model.dense.weights.iter().sum::<f64>() / n;
        let var: f64 = model
            .dense
            .weights
            .iter()
            .map(|w| (w - mean) * (w - mean))
            .sum::<f64>()
            / n;
        let want =
            (2.0 / (model.dense.in_dim + model.dense.out_dim) as f64).sqrt();
        assert!((var.sqrt() - want).abs() / want < 0.1, "std {} vs {want}", var.sqrt());
    }

    #[test]
    fn forward_shapes_and_softmax() {
        let spec = micro_spec();
        let model = QcnnModel::init(&spec, 5).unwrap();
        let input = random_input(&spec, 17);
        let (logits, _) = model.forward(&input, None).unwrap();
        assert_eq!(logits.len(), 2);
        let probs = model.predict(&input).unwrap();
        assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn forward_rejects_wrong_input_shape() {
        let model = QcnnModel::init(&micro_spec(), 5).unwrap();
        let bad = QuaternionImage::zeros(9, 12, 1);
        assert!(matches!(model.forward(&bad, None), Err(Error::Shape(_))));
    }

    /// End-to-end gradient check on the micro model: cross-entropy loss
    /// gradients for every parameter against central finite differences.
    #[test]
    fn full_model_gradients_match_finite_differences() {
        use crate::train::cross_entropy;

        let spec = micro_spec();
        let mut model = QcnnModel::init(&spec, 123).unwrap();
        let input = random_input(&spec, 7);
        let label = 1usize;

        let loss_of = |m: &QcnnModel| -> f64 {
            let (logits, _) = m.forward(&input, None).unwrap();
            cross_entropy(&softmax(&logits), label).unwrap().0
        };

        let (logits, cache) = model.forward(&input, None).unwrap();
        let (_, grad_logits) = cross_entropy(&softmax(&logits), label).unwrap();
        let grads = model.backward(&grad_logits, cache).unwrap();

        let eps = 1e-5;
        let rel = |n: f64, a: f64| (n - a).abs() / (n.abs() + a.abs()).max(1e-8);
        let mut max_rel: f64 = 0.0;
        let grad_groups = grads.iter_groups();
        for g in 0..6 {
            let analytic = grad_groups[g].to_vec();
            let len = analytic.len();
            for idx in 0..len {
                let orig = model.param_groups()[g][idx];
                model.param_groups_mut()[g][idx] = orig + eps;
                let plus = loss_of(&model);
                model.param_groups_mut()[g][idx] = orig - eps;
                let minus = loss_of(&model);
                model.param_groups_mut()[g][idx] = orig;
                let num = (plus - minus) / (2.0 * eps);
                let r = rel(num, analytic[idx]);
                if num.abs() + analytic[idx].abs() > 1e-7 {
                    max_rel = max_rel.max(r);
                    assert!(
                        r < 1e-4,
                        "group {g} idx {idx}: fd {num} vs analytic {}",
                        analytic[idx]
                    );
                }
            }
        }
        assert!(max_rel < 1e-4, "max relative error {max_rel}");
    }

    #[test]
    fn dropout_mask_flows_through_forward_and_backward() {
        let spec = micro_spec();
        let model = QcnnModel::init(&spec, 3).unwrap();
        let input = random_input(&spec, 4);
        let flat = spec.flat_dim().unwrap();

        // all-zero mask kills the dense input: logits are the biases
        let zero_mask = vec![0.0; flat];
        let (logits, cache) = model.forward(&input, Some(&zero_mask)).unwrap();
        assert_eq!(logits, model.dense.biases);
        let grads = model.backward(&[1.0, -1.0], cache).unwrap();
        assert!(grads.conv1_scale.iter().all(|&v| v == 0.0));
        assert!(grads.conv2_angle.iter().all(|&v| v == 0.0));

        // eval mode == identity mask
        let ones = vec![1.0; flat];
        let (with_mask, _) = model.forward(&input, Some(&ones)).unwrap();
        let (without, _) = model.forward(&input, None).unwrap();
        assert_eq!(with_mask, without);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut spec = micro_spec();
        spec.num_classes = 1;
        assert!(spec.validate().is_err());

        let mut spec = micro_spec();
        spec.input_height = 2;
        assert!(spec.validate().is_err());

        let mut spec = micro_spec();
        spec.input_height = 7; // conv → 5, pool → 2, conv2 needs ≥ 3
        assert!(spec.validate().is_err());
    }
}
