//! Metropolis Glauber dynamics on graph colorings, with a bounding chain,
//! a non-Markovian coupling built from local update-sequence edits, runtime
//! validity checks, local-uniformity statistics and experiment drivers.

pub mod bounding;
pub mod colorset;
pub mod coupling;
pub mod error;
pub mod dynamics;
pub mod graph;
pub mod harness;
pub mod rng;
pub mod uniformity;

pub use colorset::{Color, ColorSet};
pub use error::{Error, Result};
pub use graph::{DiGraph, Graph, GraphSpec};
