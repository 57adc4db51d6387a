//! Bayesian generalized nonlinear models: feature generation, GLM marginal
//! likelihoods and genetically modified mode jumping MCMC.

pub mod config;
pub mod data;
pub mod error;
pub mod evaluator;
pub mod experiments;
pub mod feature;
pub mod glm;
pub mod gmjmcmc;
pub mod linalg;
pub mod math;
pub mod mjmcmc;
pub mod model_space;
pub mod parallel;
pub mod predict;
pub mod run;
mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type FeatureF64 = feature::Feature<f64>;
pub type FeatureF32 = feature::Feature<f32>;
pub type MatrixF64 = linalg::Matrix<f64>;
pub type MatrixF32 = linalg::Matrix<f32>;
