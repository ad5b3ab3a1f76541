//! Dense feedforward networks: construction, forward evaluation and
//! full-batch gradient descent on mean squared error.

mod activation;
mod dataset;
mod network;
mod train;

pub use activation::Activation;
pub use dataset::{Dataset, LayerActivations, Semantics};
pub(crate) use network::dot;
pub use network::{random_mlp, ArchConfig, DenseLayer, MlpNetwork};
pub(crate) use train::BackpropScratch;
pub use train::{gradient, gradient_descent, rmse, train_backprop, OptConfig, Trainable, Trained};
