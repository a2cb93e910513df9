//! Effective resistance estimation on undirected, unweighted graphs.
//!
//! The crate is organised around an adjacency-model [`Graph`]: algorithms only
//! ask for degrees, i-th neighbors and uniform vertices, so wrapping the graph
//! in a [`CountingGraph`] measures their query cost.
//!
//! * [`exact`] holds the dense ground-truth routines.
//! * [`push`] is the level-by-level deterministic push.
//! * [`estimator`] combines push and lazy walks for a single pair, and
//!   provides the pure Monte-Carlo baseline.
//! * [`sketch`] precomputes sparse rows that answer any pair in O(1).
//! * [`lowerbound`] generates the hard instance pair and checks its gap.

pub mod bench;
pub mod counting;
pub mod error;
pub mod estimator;
pub mod exact;
pub mod generate;
pub mod graph;
pub mod lowerbound;
pub mod push;
pub mod rng;
pub mod sketch;
pub mod spectral;
pub mod walk;

pub use counting::{CountingGraph, QueryCounts};
pub use error::{Error, Result};
pub use estimator::{baseline_mc_er, estimate_er, EstimatorConfig, PairEstimate};
pub use graph::{Adjacency, Graph};
pub use push::{cgd, PushState, ResidualPrefix};
pub use rng::WalkRng;
pub use sketch::{build_index, load_index, save_index, ERSketch, SketchConfig};
pub use spectral::{estimate_spectral, SpectralStats, Truncation};
