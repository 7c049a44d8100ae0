//! Source-anonymous gossip on expander graphs: protocol simulation, curious-node
//! adversaries and exact differential-privacy leakage via absorbing Markov chains.

pub mod adversary;
pub mod error;
pub mod experiments;
pub mod gossip;
pub mod graph;
pub mod privacy;
pub mod rng;
pub mod spectral;
pub mod stats;

pub use error::{Error, Result};
pub use graph::{CuriousSet, Density, Graph, NamedGraph};
