// Validation writes `!(x >= 0.0)` so that NaN is rejected as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Dense numeric loops index several arrays with the same counter.
#![allow(clippy::needless_range_loop)]

pub mod ccga;
pub mod config;
pub mod error;
pub mod evaluation;
pub mod formulation;
pub mod io;
pub mod network;
pub mod schedule;
pub mod system;
pub mod uncertainty;

pub use error::{Error, Result};
