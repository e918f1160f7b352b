//! Construction and verification of grooved star-shaped bodies that roll
//! along a prescribed periodic planar curve on an inclined plane.
//!
//! The pipeline runs planar curve → spherical lift → closing radius →
//! carved body → rolling simulation. Each stage is a pure function over
//! immutable data; see the module docs for the numerical conventions.

// `!(x > 0.0)` is the NaN-rejecting form used by every validator
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod carve;
pub mod closure;
pub mod curves;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod io;
pub mod lift;
pub mod numeric;
pub mod verify;

pub use error::{Error, Result};
