//! File formats, dataset emission and command-line front end for
//! `homgen-core`.

pub mod config;
pub mod dataset;
pub mod error;
pub mod estimate;
pub mod landmarks;
pub mod manifest;
pub mod pnm;
pub mod report;
pub mod source;

pub use error::{Error, Result};
