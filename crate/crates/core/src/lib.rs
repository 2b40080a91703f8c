//! Topological signatures of local model explanations.
//!
//! A set of per-instance explanations is summarized by a Mapper graph over
//! explanation space, using the model's predicted probability as the lens.
//! The graph's extended persistence diagram is the signature; signatures of
//! different explainers, runs or settings are compared with the bottleneck
//! distance. Mapper parameters are tuned by bootstrap stability.

pub mod classifier;
pub mod dataio;
pub mod diagdist;
pub mod error;
pub mod explainers;
pub mod harness;
pub mod mapper;
pub mod matrix;
pub mod persistence;
pub mod rng;
pub mod signature;
pub mod synthdata;
pub mod tuning;

pub use dataio::{ExplanationMatrix, LabeledDataset, LensVector};
pub use diagdist::{bottleneck, pairwise_matrix, DistanceMatrix};
pub use error::{GaleError, Result};
pub use mapper::{build_mapper, MapperGraph, MapperParams};
pub use matrix::Matrix;
pub use persistence::{DiagramPoint, PersistenceDiagram, PointClass};
pub use signature::{signature, Signature};
pub use tuning::{grid_search, ParamGrid, TuningResult};
