//! Differentiable building blocks with hand-written gradients.
//!
//! Everything here works in `f64` on plain slices; there is no autodiff
//! graph. Each `*_forward`/`*_step` returns the cache its backward needs.

mod adam;
mod dense;
pub mod finite_diff;
mod loss;
mod lstm;
mod tensor;

pub use adam::{adam_update, AdamConfig, AdamState};
pub use dense::{dense_backward, dense_forward, DenseCache, DenseGrads};
pub use loss::{bce_loss, sigmoid, BCE_EPSILON};
pub use lstm::{
    lstm_backward, lstm_forward, lstm_step, LstmCache, LstmGrads, LstmState, LstmWeights,
};
pub use tensor::{MatRef, Tensor2};
