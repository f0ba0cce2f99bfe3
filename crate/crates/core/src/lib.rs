#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod capacitance;
pub mod dynamics;
pub mod error;
pub mod io;
pub mod oracle;
pub mod params;
pub mod rate;
pub mod specfun;
pub mod sweep;
pub mod units;
pub mod verify;

pub use error::{Error, Result};
