//! Network layers: quaternion convolution, quaternion ReLU, imaginary
//! max-pooling, flatten, dropout, dense, softmax.
//!
//! Forward passes are pure with respect to layer parameters. Each forward
//! returns a cache value that the matching backward call consumes by
//! value, so a cache can never be replayed.

pub mod activ;
pub mod conv;
pub mod dense;
pub mod pool;

pub use activ::{apply_dropout_mask, qrelu, qrelu_backward, sample_dropout_mask, softmax, ReluCache};
pub use conv::{
    qconv2d_backward, qconv2d_forward, ConvCache, QConvLayer, QKernel, SCALE_MIN,
};
pub use dense::{dense_backward, dense_forward, DenseCache, DenseGrads, DenseLayer};
pub use pool::{flatten, qmaxpool, qmaxpool_backward, unflatten_gradient, FlattenCache, PoolCache};
