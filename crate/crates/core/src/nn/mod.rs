//! Small differentiable building blocks: dense layers, dropout, softmax cross-entropy and
//! first-order optimizers.

pub mod dense;
pub mod loss;
pub mod optim;

pub use dense::{Activation, Batch, Cache, Dense, DenseNet, Gradients};
pub use loss::{softmax, softmax_cross_entropy};
pub use optim::{optimize_step, Algorithm, OptimizerState};
