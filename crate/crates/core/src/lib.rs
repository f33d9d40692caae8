//! Feature-leveling networks.
//!
//! Fully connected ReLU networks whose every hidden layer is preceded by a
//! per-feature hard-concrete gate. A gate value of exactly zero sends the
//! feature straight to the final generalized-linear (GLM) layer; a positive
//! value passes it, scaled, into the next hidden layer. Training minimizes
//! the data loss plus an expected-L0 penalty on the gates, which yields
//! per-level feature attributions from the GLM weights and prunes layers
//! that stop receiving input.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix it to `f64`, which is what training and the gradient
//! checks use.

pub mod data;
pub mod error;
pub mod gates;
pub mod io;
pub mod network;
pub mod numerics;
pub mod reports;
pub mod scalar;

pub use error::{Error, FormatError, Result};
pub use gates::{binary_complement, GateConstants, GateSample, HardConcreteGate};
pub use network::{FeatureLevelNet, Link, Mode, Task, TrainConfig, TrainHistory};
pub use numerics::{AdamConfig, AdamState, LossKind, Mat, Rng};
pub use reports::{LevelReport, MetricKind};
pub use scalar::Scalar;

pub type Matrix = Mat<f64>;
pub type Gate = HardConcreteGate<f64>;
pub type Net = FeatureLevelNet<f64>;
pub type PrunedNet = network::PrunedNet<f64>;
pub type Dataset = data::Dataset<f64>;
