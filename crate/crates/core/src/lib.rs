//! Higher-order nonlocal operator method on scattered points.

pub mod assembly;
pub mod bench;
pub mod cli;
mod dense;
pub mod error;
pub mod materials;
pub mod multi_index;
pub mod newton;
pub mod operators;
pub mod point_cloud;
pub mod sparse;

pub use error::{NomError, Result};
