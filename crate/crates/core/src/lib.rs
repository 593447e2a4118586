pub mod adversary;
pub mod cli;
pub mod costmodel;
pub mod error;
pub mod experiments;
pub mod protocol;
pub mod qsim;
pub mod rng;
pub mod session;

pub use error::{Error, Result};
