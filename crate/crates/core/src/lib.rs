//! Random covers of graphs, non-backtracking spectra, walk combinatorics,
//! tangles, and Monte-Carlo trace experiments.

pub mod bgraph;
pub mod covers;
pub mod error;
pub mod graph;
pub mod io;
pub mod iso;
pub mod nblang;
pub mod poly;
pub mod sidestep;
pub mod spectra;
pub mod tangles;
pub mod tracelab;
pub mod walks;

pub use error::{Error, Result};
pub use graph::{EdgeId, Graph, GraphBuilder, Morphism, MorphismKind, VertexId};
