//! Real-valued fully-connected head.

use crate::error::{Error, Result};

/// Affine layer `y = W·x + b` with `weights` stored `[out_dim × in_dim]`
/// row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

/// Forward state for [`dense_backward`]: the layer input.
pub struct DenseCache {
    input: Vec<f64>,
}

pub struct DenseGrads {
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl DenseLayer {
    pub fn new(in_dim: usize, out_dim: usize) -> Result<Self> {
        if in_dim == 0 || out_dim == 0 {
            return Err(Error::Shape("dense dimensions must be positive".into()));
        }
        Ok(Self {
            in_dim,
            out_dim,
            weights: vec![0.0; out_dim * in_dim],
            biases: vec![0.0; out_dim],
        })
    }

    pub fn parameter_count(&self) -> usize {
        self.weights.len() + self.biases.len()
    }
}

pub fn dense_forward(layer: &DenseLayer, x: &[f64]) -> Result<(Vec<f64>, DenseCache)> {
    if x.len() != layer.in_dim {
        return Err(Error::Shape(format!(
            "dense layer expects {} inputs, got {}",
            layer.in_dim,
            x.len()
        )));
    }
    let mut y = layer.biases.clone();
    for (o, out) in y.iter_mut().enumerate() {
        let row = &layer.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
        let mut acc = 0.0;
        for (w, v) in row.iter().zip(x) {
            acc += w * v;
        }
        *out += acc;
    }
    Ok((y, DenseCache { input: x.to_vec() }))
}

/// Returns parameter gradients and the gradient with respect to the input.
pub fn dense_backward(
    layer: &DenseLayer,
    grad_out: &[f64],
    cache: DenseCache,
) -> Result<(DenseGrads, Vec<f64>)> {
    if grad_out.len() != layer.out_dim {
        return Err(Error::Shape(format!(
            "dense gradient has {} values, layer emits {}",
            grad_out.len(),
            layer.out_dim
        )));
    }
    if cache.input.len() != layer.in_dim {
        return Err(Error::State(
            "dense cache does not belong to this layer".into(),
        ));
    }
    let x = &cache.input;
    let mut grad_w = vec![0.0; layer.out_dim * layer.in_dim];
    let mut grad_x = vec![0.0; layer.in_dim];
    for (o, &g) in grad_out.iter().enumerate() {
        let row = o * layer.in_dim;
        if g != 0.0 {
            for (idx, &xv) in x.iter().enumerate() {
                grad_w[row + idx] = g * xv;
            }
        }
        let w_row = &layer.weights[row..row + layer.in_dim];
        for (gx, &w) in grad_x.iter_mut().zip(w_row) {
            *gx += g * w;
        }
    }
    Ok((
        DenseGrads {
            weights: grad_w,
            biases: grad_out.to_vec(),
        },
        grad_x,
    ))
}
