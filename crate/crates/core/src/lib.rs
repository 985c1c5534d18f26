#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::large_enum_variant)]

pub mod dynamics;
pub mod error;
pub mod fields;
pub mod frames;
pub mod geometry;
pub mod grid;
pub mod hamiltonians;
pub mod numeric;
pub mod oracle;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};
