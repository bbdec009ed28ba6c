//! Synthetic bi-ventricular phantoms, acquisition degradation and the
//! procedural template.

pub mod anatomy;
pub mod degrade;
pub mod template;

pub use anatomy::{generate_phantom, mm_to_ndc, sphere_volume, voxel_mm, Ellipsoid, PhantomSpec, PhantomSurfaces};
pub use degrade::{degrade, DegradationSpec};
pub use template::{icosphere, procedural_template, template_for, TemplateResolution};
