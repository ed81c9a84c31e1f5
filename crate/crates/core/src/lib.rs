//! Coupled heat-bath dynamics for the random-cluster model in a lattice box.

pub mod connectivity;
pub mod dynamics;
pub mod edge_config;
pub mod error;
pub mod estimate;
pub mod fk;
pub mod harness;
pub mod interface;
pub mod spins;
pub mod geometry;

pub use connectivity::{BoundaryCondition, ClusterIndex, Site};
pub use edge_config::EdgeConfig;
pub use error::{Error, Result};
pub use fk::{FkParams, Conditioning, ExactTable};
pub use geometry::{BoxGeometry, BoxSpec, EdgeId, Graph, Rotation, Side, VertexId};
