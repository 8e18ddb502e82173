//! Data kernel perspective space (DKPS) analysis of generative model
//! populations from their embedded outputs.

// `!(x > 0.0)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cpo;
pub mod dkps;
pub mod error;
pub mod estimators;
pub mod geometry;
pub mod io;
pub mod linalg;
pub mod numeric;
pub mod report;
pub mod simulator;

pub use dkps::{
    distance_matrix, perspective_space, roster_preset, summarize, true_perspective, Dim,
    DistanceMatrix, ModelRoster, ModelSummary, PerspectiveSpace, ReplicateSet, RosterEntry, Source,
};
pub use error::{Error, ErrorClass, Result};
pub use io::{load_dataset, save_dataset, EmbeddingDataset, MatrixEncoding};
pub use linalg::Matrix;
