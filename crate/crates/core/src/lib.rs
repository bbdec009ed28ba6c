//! Bi-ventricular surface reconstruction from labeled voxel volumes.
//!
//! A labeled template mesh is rigidly swung onto the target anatomy, pulled
//! onto the label boundaries through per-surface descent fields built from
//! exact Euclidean distance transforms, and then refined by a two-level
//! graph subdivision network whose vertex updates are produced by a small
//! learned MLP. The crate also ships the evaluation suite (overlap, surface
//! distance and cell quality metrics), a synthetic bi-ventricular phantom
//! generator and a procedural template so that the whole pipeline runs
//! without clinical data.
//!
//! Module map:
//!
//! - [`volume`]: voxel grids, file I/O, resampling, distance transforms,
//!   descent fields and trilinear sampling.
//! - [`mesh`]: labeled triangle meshes, subdivision, smoothing,
//!   voxelization and PLY/OBJ I/O.
//! - [`fit`]: swing alignment and gradient-field template deformation.
//! - [`gsn`]: the graph subdivision network, its losses, gradients and
//!   training loop.
//! - [`metrics`]: evaluation metrics and report serialization.
//! - [`phantom`]: synthetic volumes, degradation and the procedural template.
//! - [`pipeline`]: the five ablation schemes wired end to end.
//! - [`config`] and [`cli`]: run configuration and the subcommand bodies
//!   behind the `bivmesh` binary.
//!
//! Runnable walkthroughs of each capability live in `examples/`.

pub mod cli;
pub mod config;
pub mod error;
pub mod fit;
pub mod gsn;
pub mod mesh;
pub mod metrics;
pub mod phantom;
pub mod pipeline;
pub mod spatial;
pub mod volume;

pub use error::{Error, Result};

/// Three-component vector used for positions, displacements and gradients.
pub type Vec3 = nalgebra::Vector3<f64>;
