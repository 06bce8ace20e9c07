pub mod bounds;
pub mod error;
pub mod format;
pub mod gen;
pub mod graph;
pub mod harness;
pub mod rng;
pub mod torus;
pub mod walk;

pub use error::{Error, Result};
