//! Exact computation and Monte Carlo validation for version-space learning theory on finite classes.

pub mod bounds;
pub mod complexity;
pub mod concept;
pub mod distribution;
pub mod error;
pub mod harness;
pub mod learners;
pub mod lp;
pub mod noise;
pub mod numeric;
pub mod version_space;

pub use error::{Error, Result};
