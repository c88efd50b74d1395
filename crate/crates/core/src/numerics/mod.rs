//! Dense tensors, reverse-mode differentiation, optimization and checkpoints.

mod checkpoint;
pub mod gradcheck;
mod kernels;
mod optim;
mod params;
mod tape;
mod tensor;

pub use checkpoint::{Checkpoint, FORMAT_VERSION};
pub use optim::{Adam, AdamConfig};
pub use params::{BoundParams, ParamStore};
pub use tape::{Gradients, Tape, Var, LAYER_NORM_EPS};
pub use tensor::Tensor;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NumericsError {
    #[error("shape mismatch in {op}: {lhs:?} vs {rhs:?}")]
    ShapeMismatch {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },
    #[error("invalid shape {0:?}: extents must be positive")]
    InvalidShape(Vec<usize>),
    #[error("data length {len} does not match shape {shape:?}")]
    DataLength { shape: Vec<usize>, len: usize },
    #[error("ragged rows")]
    Ragged,
    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),
    #[error("expected a scalar, got shape {0:?}")]
    NotScalar(Vec<usize>),
    #[error("value is not recorded on this tape")]
    NoTape,
    #[error("axis {axis} out of range for rank {rank}")]
    InvalidAxis { axis: usize, rank: usize },
    #[error("invalid permutation {0:?}")]
    InvalidPermutation(Vec<usize>),
    #[error("index out of range along axis {axis} (extent {extent})")]
    IndexOutOfRange { axis: usize, extent: usize },
    #[error("concat of zero tensors")]
    EmptyConcat,
    #[error("invalid target indices")]
    InvalidTargets,
    #[error("missing parameter {0}")]
    MissingParam(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    /// Failure raised by a model built on top of the tape.
    #[error("{0}")]
    Model(String),
}

/// Matrix product over the last two axes with broadcast batch axes.
pub fn matmul(a: &Tensor, b: &Tensor) -> Result<Tensor, NumericsError> {
    let out = kernels::matmul_t(a, b, false, false)?;
    out.ensure_finite("matmul")?;
    Ok(out)
}

/// Numerically stable softmax along `axis`.
pub fn softmax(x: &Tensor, axis: usize) -> Result<Tensor, NumericsError> {
    kernels::softmax(x, axis)
}

/// Normalizes each slice along `axis` to zero mean and unit variance, then
/// applies `gain` and `bias`.
pub fn layer_norm(
    x: &Tensor,
    gain: &Tensor,
    bias: &Tensor,
    axis: usize,
) -> Result<Tensor, NumericsError> {
    Ok(kernels::layer_norm(x, gain, bias, axis, LAYER_NORM_EPS)?.0)
}

/// Scales each slice along `axis` to unit L2 norm. Zero slices stay zero.
pub fn l2_normalize(x: &Tensor, axis: usize) -> Result<Tensor, NumericsError> {
    Ok(kernels::l2_normalize(x, axis)?.0)
}

pub fn permute(x: &Tensor, perm: &[usize]) -> Result<Tensor, NumericsError> {
    kernels::permute(x, perm)
}

pub fn concat(parts: &[&Tensor], axis: usize) -> Result<Tensor, NumericsError> {
    kernels::concat(parts, axis)
}
