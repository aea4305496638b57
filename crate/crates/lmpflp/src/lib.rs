//! Lagrangian-multiplier-preserving approximation machinery for facility
//! location and k-median.

pub mod factor_lp;
pub mod instance;
pub mod jms;
pub mod local_search;
pub mod lp;
pub mod pipeline;
pub mod scalar;
pub mod structure;

pub use scalar::Scalar;

pub type Instance = instance::Instance<f64>;
pub type Solution = instance::Solution<f64>;
pub type Instance32 = instance::Instance<f32>;
pub type Solution32 = instance::Solution<f32>;
