//! Voxel grids and the fields derived from them.

pub mod edt;
pub mod field;
pub mod grid;
pub mod io;
pub mod resample;
pub mod surface;

pub use edt::{boundary_distance, edt, squared_edt, Degenerate, DistanceMap};
pub use field::{gradient, gradient_field, sample_index, sample_trilinear};
pub use grid::{
    label_volume, Geometry, Grid3, Label, LabelVolume, Mask, NdcMap, ScalarField, VectorField,
};
pub use io::{load_volume, save_volume};
pub use resample::resample_isotropic;
pub use surface::{surface_mask, SurfaceTarget, TargetFields};
