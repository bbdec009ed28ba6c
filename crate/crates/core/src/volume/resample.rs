use super::grid::{label_volume, Geometry, LabelVolume};
use crate::{Error, Result};

/// Nearest-neighbour resampling to an isotropic grid of `target` mm voxels.
///
/// The physical box spanned by the voxels is kept: each axis gets
/// `round(extent / target)` voxels and the first output voxel starts at the
/// same outer face as the first input voxel.
pub fn resample_isotropic(v: &LabelVolume, target: f64) -> Result<LabelVolume> {
    if !(target > 0.0 && target.is_finite()) {
        return Err(Error::InvalidVolume(format!("target spacing {target} must be > 0")));
    }
    let g = v.geometry();
    if g.is_isotropic(target) {
        return Ok(v.clone());
    }
    let extent = g.extent();
    let mut dims = [0usize; 3];
    let mut origin = [0.0; 3];
    for a in 0..3 {
        if target > extent[a] {
            return Err(Error::InvalidVolume(format!(
                "target spacing {target} mm exceeds extent {:.3} mm on axis {a}",
                extent[a]
            )));
        }
        dims[a] = (extent[a] / target).round() as usize;
        if dims[a] < 2 {
            return Err(Error::InvalidVolume(format!(
                "resampling to {target} mm leaves {} voxel(s) on axis {a}",
                dims[a]
            )));
        }
        origin[a] = g.origin[a] - 0.5 * g.spacing[a] + 0.5 * target;
    }
    let out = Geometry::new(dims, [target; 3], origin)?;
    let source = |a: usize, i: usize| -> usize {
        let x = out.origin[a] + i as f64 * target;
        let idx = ((x - g.origin[a]) / g.spacing[a] + 0.5).floor();
        (idx.max(0.0) as usize).min(g.dims[a] - 1)
    };
    let maps: Vec<Vec<usize>> = (0..3).map(|a| (0..dims[a]).map(|i| source(a, i)).collect()).collect();
    let mut labels = Vec::with_capacity(out.len());
    for z in 0..dims[2] {
        for y in 0..dims[1] {
            for x in 0..dims[0] {
                labels.push(*v.get(maps[0][x], maps[1][y], maps[2][z]));
            }
        }
    }
    label_volume(out, labels)
}
