#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod autodiff;
pub mod error;
pub mod inverse;
pub mod io;
pub mod mom;
pub mod specfun;
pub mod surface;

pub use error::{Error, Result};
