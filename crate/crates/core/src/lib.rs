pub mod error;
pub mod experiments;
pub mod numerics;
pub mod quantize;
pub mod symspace;
pub mod toric;

pub use error::{Error, Result};
