#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]
extern crate alloc;

pub mod error;
pub mod geometry;
pub mod homography;
mod math;

pub use error::{Error, Result};
pub use geometry::Point2;
pub mod polygon;
pub mod rng;
pub mod generation;
pub mod image;
pub mod augment;
pub mod endoscopy;
pub mod classical;
pub mod eval;
pub mod pipeline;
