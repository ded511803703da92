//! Small f64 neural toolkit: dense, convolution, transposed convolution and
//! tanh recurrent layers, activations, losses, Adam and a sequential
//! container. Every layer has a hand-written backward pass checked against
//! finite differences in [`gradcheck`].

mod adam;
mod checkpoint;
mod conv;
pub(crate) use conv::gemm;
pub mod gradcheck;
mod layer;
mod loss;
mod network;
mod resize;
mod rnn;
mod tensor;

use thiserror::Error;

pub use adam::{Adam, BETA1, BETA2, EPSILON};
pub use checkpoint::{read_checkpoint, write_checkpoint, Checkpoint, CHECKPOINT_VERSION};
pub(crate) use layer::sigmoid;
pub use layer::{Layer, LayerSpec, Param};
pub use loss::{cross_entropy, kl_loss, log_softmax, mse_loss, softmax_rows};
pub use network::Network;
pub use resize::{resize_rows, row_source_frame};
pub use tensor::Tensor;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("backward called without a cached forward pass")]
    NoCachedForward,
    #[error("invalid layer configuration: {0}")]
    InvalidSpec(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, NnError>;

pub(crate) fn shape_err(what: impl Into<String>) -> NnError {
    NnError::ShapeMismatch(what.into())
}
