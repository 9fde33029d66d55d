pub mod agent;
pub mod autodiff;
pub mod cells;
pub mod envs;
pub mod error;
pub mod harness;
pub mod optim;
pub mod reservoir;
pub mod rng;
pub mod spectral;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::Matrix;
