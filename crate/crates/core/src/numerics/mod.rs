//! Dense linear algebra, activations, losses, Adam and the seeded RNG.

pub mod activation;
pub mod adam;
pub mod loss;
pub mod matrix;
pub mod rng;

pub use activation::{relu, relu_grad, sigmoid};
pub use adam::{AdamConfig, AdamState};
pub use loss::{loss_and_grad, LossKind};
pub use matrix::Mat;
pub use rng::Rng;
