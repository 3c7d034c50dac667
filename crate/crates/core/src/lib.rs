pub mod bayes;
pub mod config;
pub mod design;
pub mod error;
pub mod experiments;
pub mod gp;
pub mod kernels;
pub mod mcmc;
pub mod metrics;
pub mod quadrature;
pub mod rng;
pub mod surrogate;

pub use error::{Error, Result};
