pub mod agent;
pub mod checkpoint;
pub mod cli;
pub mod codec;
pub mod diffusion;
pub mod env;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod nn;
pub mod profiles;
pub mod replay;
pub mod rl_baselines;
pub mod rng;
pub mod scenario;
pub mod schedulers;
pub mod training;

pub use error::{Error, Result};
