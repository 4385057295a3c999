// NaN-rejecting guards are written as `!(x < bound)` on purpose
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod combinatorics;
pub mod config_space;
pub mod error;
pub mod experiment;
pub mod interferometer;
pub mod io;
pub mod matrix;
pub mod perm;
pub mod permanent;
pub mod probability;
pub mod rng;
pub mod sampler;

pub use error::{Error, Result};
