// validation uses `!(x > 0.0)` on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bessel;
pub mod cli;
pub mod disk;
pub mod error;
pub mod kernel;
pub mod moment;
pub mod poly;
pub mod propagator;
pub mod simulator;
pub mod stability;
pub mod symbol;

pub use error::{Error, Result};
