pub mod dynamics;
pub mod env;
pub mod error;
pub mod eval;
pub mod nn;
pub mod ppo;
pub mod training;

pub use error::{Error, Result};
