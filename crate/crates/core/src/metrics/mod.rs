//! Evaluation metrics: overlap, boundary distances, surface distance, cell
//! quality, timing and report serialization.

pub mod overlap;
pub mod quality;
pub mod report;
pub mod surface;

pub use overlap::{boundary, dice, hausdorff, Hausdorff};
pub use quality::{aspect_ratio, non_manifold_ratio, normal_consistency, scaled_jacobian, FaceStats};
pub use report::{evaluate, timed, write_csv, CaseOutcome, EvalOptions, MetricsReport, PerLabel};
pub use surface::{asd, label_boundary_voxels, ASD_SAMPLES};
