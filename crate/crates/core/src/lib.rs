//! Stated-choice experiment toolkit: design generation, random-utility
//! choice simulation and MNL / mixed-logit estimation.

// `!(x > t)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod design;
pub mod error;
pub mod estimate;
pub mod par;
pub mod population;
pub mod rng;
pub mod scenario;
pub mod simulate;
pub mod table;

pub use error::{Error, Result};
