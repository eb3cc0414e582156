pub mod analyzer;
pub mod bounds;
pub mod embedding;
pub mod error;
pub mod graph;
pub mod harness;
pub mod io;
pub mod labels;
pub mod linalg;
pub mod probe;
pub mod rng;
pub mod structure;

pub use error::{Error, Result};
