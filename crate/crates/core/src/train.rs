//! Loss, optimizer, training loop, and evaluation.
//!
//! Training is a pure function of (dataset, spec, config including seed):
//! initialization, shuffling, dropout, and validation sampling all draw
//! from seeded generators in a fixed order, so repeated runs produce
//! identical parameter trajectories and metric logs.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::feature::QuaternionImage;
use crate::layers::{sample_dropout_mask, softmax};
use crate::model::{ModelGrads, ModelSpec, QcnnModel};

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub dropout_p: f64,
    pub seed: u64,
    pub validation_steps: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            batch_size: 32,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            dropout_p: 0.3,
            seed: 42,
            validation_steps: 9,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.validation_steps == 0 {
            return Err(Error::Config(
                "train.batch_size and train.validation_steps must be positive".into(),
            ));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::Config("train.learning_rate must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::Config("adam betas must lie in [0, 1)".into()));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Config("adam epsilon must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_p) {
            return Err(Error::Config(format!(
                "train.dropout_p must lie in [0, 1), got {}",
                self.dropout_p
            )));
        }
        Ok(())
    }
}

/// Categorical cross-entropy on a class distribution: the loss
/// `−log(probs[label])` with probabilities floored at 1e-12, and the
/// combined softmax+CE gradient with respect to the logits,
/// `probs − onehot(label)`.
pub fn cross_entropy(probs: &[f64], label: usize) -> Result<(f64, Vec<f64>)> {
    if label >= probs.len() {
        return Err(Error::Input(format!(
            "label {label} out of range for {} classes",
            probs.len()
        )));
    }
    let loss = -probs[label].max(1e-12).ln();
    let mut grad = probs.to_vec();
    grad[label] -= 1.0;
    Ok((loss, grad))
}

/// Adam moment accumulators, one pair per parameter group.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub step: u64,
}

impl AdamState {
    pub fn for_model(model: &QcnnModel) -> Self {
        let sizes: Vec<usize> = model.param_groups().iter().map(|g| g.len()).collect();
        Self {
            m: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            v: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            step: 0,
        }
    }
}

/// One bias-corrected Adam update over a flat parameter slice. `step` is
/// the 1-based update count.
pub fn adam_step(
    params: &mut [f64],
    grads: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    step: u64,
    cfg: &TrainConfig,
) {
    debug_assert_eq!(params.len(), grads.len());
    let bc1 = 1.0 - cfg.beta1.powi(step as i32);
    let bc2 = 1.0 - cfg.beta2.powi(step as i32);
    for i in 0..params.len() {
        let g = grads[i];
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        params[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
    }
}

/// Applies one optimizer step to every parameter group, then re-clamps the
/// kernel scales. Non-finite gradients abort with the offending layer.
pub fn apply_adam(
    model: &mut QcnnModel,
    grads: &ModelGrads,
    state: &mut AdamState,
    cfg: &TrainConfig,
) -> Result<()> {
    if let Some(layer) = grads.first_non_finite() {
        return Err(Error::Numerics(format!(
            "non-finite gradient in {layer}; aborting epoch"
        )));
    }
    state.step += 1;
    let step = state.step;
    let grad_groups = grads.iter_groups();
    for (idx, group) in model.param_groups_mut().into_iter().enumerate() {
        adam_step(
            group,
            grad_groups[idx],
            &mut state.m[idx],
            &mut state.v[idx],
            step,
            cfg,
        );
    }
    model.clamp_scales();
    Ok(())
}

/// One labelled training example.
pub type Sample = (QuaternionImage, usize);

/// One line of the metrics log.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_acc: f64,
}

impl EpochMetrics {
    /// The documented log format: `epoch,train_loss,train_acc,val_acc`.
    pub fn csv_line(&self) -> String {
        format!(
            "{},{:.6},{:.6},{:.6}",
            self.epoch, self.train_loss, self.train_acc, self.val_acc
        )
    }
}

pub struct TrainOutcome {
    pub final_model: QcnnModel,
    pub best_model: QcnnModel,
    /// Epoch (1-based) of the best validation accuracy; `None` when no
    /// epochs ran.
    pub best_epoch: Option<usize>,
    pub metrics: Vec<EpochMetrics>,
}

/// Index of the largest probability, ties broken by the lowest class.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Epoch loop: seeded shuffle, mini-batch forward/backward with dropout,
/// Adam updates, then validation accuracy over `validation_steps` batches
/// sampled from the test split. Returns the final model, the checkpoint
/// with the best validation accuracy, and the full metrics log.
pub fn train(
    train_set: &[Sample],
    test_set: &[Sample],
    spec: &ModelSpec,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochMetrics),
) -> Result<TrainOutcome> {
    spec.validate()?;
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(Error::Data("training split is empty".into()));
    }
    let mut class_seen = vec![false; spec.num_classes];
    for (_, label) in train_set {
        if *label >= spec.num_classes {
            return Err(Error::Data(format!(
                "label {label} out of range for {} classes",
                spec.num_classes
            )));
        }
        class_seen[*label] = true;
    }
    if let Some(missing) = class_seen.iter().position(|seen| !seen) {
        return Err(Error::Data(format!(
            "class {missing} has no samples in the training split"
        )));
    }

    let mut model = QcnnModel::init(spec, cfg.seed)?;
    let mut state = AdamState::for_model(&model);
    // distinct stream from the init draw so adding parameters does not
    // reshuffle the data ordering
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9E37_79B9_7F4A_7C15);
    let flat_dim = spec.flat_dim()?;

    let mut best_model = model.clone();
    let mut best_epoch = None;
    let mut best_val = f64::NEG_INFINITY;
    let mut metrics = Vec::with_capacity(cfg.epochs);

    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut val_order: Vec<usize> = (0..test_set.len()).collect();

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut correct = 0usize;

        for batch in order.chunks(cfg.batch_size) {
            let masks: Vec<Option<Vec<f64>>> = batch
                .iter()
                .map(|_| {
                    if cfg.dropout_p > 0.0 {
                        Some(sample_dropout_mask(flat_dim, cfg.dropout_p, &mut rng))
                    } else {
                        None
                    }
                })
                .collect();

            let mut batch_grads = ModelGrads::zeros_like(&model);
            for (&idx, mask) in batch.iter().zip(&masks) {
                let (img, label) = &train_set[idx];
                let (logits, cache) = model.forward(img, mask.as_deref())?;
                let probs = softmax(&logits);
                let (loss, grad_logits) = cross_entropy(&probs, *label)?;
                if !loss.is_finite() {
                    return Err(Error::Numerics(format!(
                        "non-finite loss at epoch {epoch}"
                    )));
                }
                epoch_loss += loss;
                if argmax(&probs) == *label {
                    correct += 1;
                }
                let grads = model.backward(&grad_logits, cache)?;
                batch_grads.add(&grads);
            }
            batch_grads.scale(1.0 / batch.len() as f64);
            apply_adam(&mut model, &batch_grads, &mut state, cfg)?;
        }

        let val_acc = if test_set.is_empty() {
            0.0
        } else {
            val_order.shuffle(&mut rng);
            let take = (cfg.validation_steps * cfg.batch_size).min(test_set.len());
            let mut val_correct = 0usize;
            for &idx in &val_order[..take] {
                let (img, label) = &test_set[idx];
                let probs = model.predict(img)?;
                if argmax(&probs) == *label {
                    val_correct += 1;
                }
            }
            val_correct as f64 / take as f64
        };

        let record = EpochMetrics {
            epoch,
            train_loss: epoch_loss / train_set.len() as f64,
            train_acc: correct as f64 / train_set.len() as f64,
            val_acc,
        };
        on_epoch(&record);
        if val_acc > best_val {
            best_val = val_acc;
            best_model = model.clone();
            best_epoch = Some(epoch);
        }
        metrics.push(record);
    }

    Ok(TrainOutcome {
        final_model: model,
        best_model,
        best_epoch,
        metrics,
    })
}

/// Per-class tallies of an evaluation run.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct EvalReport {
    /// Fraction of samples whose argmax matches the label.
    pub accuracy: f64,
    /// Unweighted mean of per-class recalls over classes with samples.
    pub unweighted_accuracy: f64,
    pub per_class_recall: Vec<f64>,
    pub per_class_count: Vec<usize>,
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<usize>>,
    pub sample_count: usize,
}

/// Deterministic full evaluation of a sample set.
pub fn evaluate(model: &QcnnModel, samples: &[Sample], num_classes: usize) -> Result<EvalReport> {
    if samples.is_empty() {
        return Err(Error::Data("evaluation split is empty".into()));
    }
    let mut confusion = vec![vec![0usize; num_classes]; num_classes];
    for (img, label) in samples {
        if *label >= num_classes {
            return Err(Error::Data(format!(
                "label {label} out of range for {num_classes} classes"
            )));
        }
        let probs = model.predict(img)?;
        confusion[*label][argmax(&probs)] += 1;
    }
    let mut correct = 0usize;
    let mut per_class_recall = Vec::with_capacity(num_classes);
    let mut per_class_count = Vec::with_capacity(num_classes);
    let mut recall_sum = 0.0;
    let mut classes_present = 0usize;
    for (c, row) in confusion.iter().enumerate() {
        let count: usize = row.iter().sum();
        correct += row[c];
        per_class_count.push(count);
        if count > 0 {
            let recall = row[c] as f64 / count as f64;
            per_class_recall.push(recall);
            recall_sum += recall;
            classes_present += 1;
        } else {
            per_class_recall.push(0.0);
        }
    }
    Ok(EvalReport {
        accuracy: correct as f64 / samples.len() as f64,
        unweighted_accuracy: recall_sum / classes_present.max(1) as f64,
        per_class_recall,
        per_class_count,
        confusion,
        sample_count: samples.len(),
    })
}
