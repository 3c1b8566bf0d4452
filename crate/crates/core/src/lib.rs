//! Sparse random graphs with overlapping communities built from compound
//! completely random measures: simulation, posterior inference and
//! diagnostics.

pub mod analysis;
pub mod error;
pub mod graph;
pub mod inference;
pub mod io;
pub mod levy;
pub mod params;
pub mod quadrature;
pub mod sim;

pub use error::{Error, Result};
pub use graph::{BipartiteGraph, MultiCounts, SparseGraph};
pub use inference::{InitialValues, LatentCounts, McmcConfig, McmcState, Trace};

pub use params::{CcrmParams, FreeFlags, GammaPrior, GgpParams, Hyperpriors};
pub use sim::{JumpSet, NodeAtoms, RemainderMass};
