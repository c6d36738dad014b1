//! Vertex similarity within a graph by fitting a minimum-volume simplex to
//! its spectral embedding, and similarity across two equal-order graphs by
//! the generalized condition number of their Laplacian pencil.

pub mod error;
pub mod experiments;
pub mod fit;
pub mod graph;
pub mod linalg;
mod lp;
pub mod matching;
pub mod pencil;
pub mod perm;
pub mod rng;
pub mod simplex;
pub mod simquery;
pub mod spectral;
pub mod synth;

pub use error::{Error, Result};
pub use graph::{load_edge_list, Graph, LaplacianKind, LaplacianMatrix};
pub use perm::Permutation;
pub use simplex::{MixtureTable, Simplex};
