pub mod analysis;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod homogenize;
pub mod sweep;
pub mod voxel;

pub use error::{Error, Result};
