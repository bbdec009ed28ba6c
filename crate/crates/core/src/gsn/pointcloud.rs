//! Surface point clouds extracted from label volumes.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::spatial::KdTree;
use crate::volume::{squared_edt, surface_mask, Label, LabelVolume, Mask, NdcMap, SurfaceTarget};
use crate::{Error, Result, Vec3};

/// Default cap on the points kept per surface.
pub const DEFAULT_MAX_POINTS: usize = 4000;

const NEIGHBOURS: [[i64; 3]; 6] = [[-1, 0, 0], [1, 0, 0], [0, -1, 0], [0, 1, 0], [0, 0, -1], [0, 0, 1]];

/// Foreground voxels of `mask` with at least one 6-neighbour for which
/// `outside` holds. Neighbours beyond the grid count as outside.
fn boundary_voxels(mask: &Mask, outside: impl Fn(usize) -> bool) -> Vec<[usize; 3]> {
    let g = mask.geometry();
    let dims = g.dims;
    let mut out = Vec::new();
    for (i, &m) in mask.data().iter().enumerate() {
        if !m {
            continue;
        }
        let c = g.coords(i);
        let on_boundary = NEIGHBOURS.iter().any(|d| {
            let n = [0, 1, 2].map(|a| c[a] as i64 + d[a]);
            if (0..3).any(|a| n[a] < 0 || n[a] >= dims[a] as i64) {
                return true;
            }
            outside(g.index(n[0] as usize, n[1] as usize, n[2] as usize))
        });
        if on_boundary {
            out.push(c);
        }
    }
    out
}

fn subsample(points: Vec<Vec3>, max_points: usize, seed: u64) -> Vec<Vec3> {
    if points.len() <= max_points {
        return points;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = sample(&mut rng, points.len(), max_points).into_vec();
    idx.sort_unstable();
    idx.into_iter().map(|i| points[i]).collect()
}

/// Centers (NDC) of the target-mask voxels that touch the background,
/// uniformly subsampled to at most `max_points` with `seed`.
pub fn extract_point_cloud(
    v: &LabelVolume,
    target: SurfaceTarget,
    ndc: &NdcMap,
    max_points: usize,
    seed: u64,
) -> Result<Vec<Vec3>> {
    let mask = surface_mask(v, target);
    if !mask.data().iter().any(|&m| m) {
        return Err(Error::Empty(format!("{target} mask has no foreground")));
    }
    let data = mask.data();
    let pts = boundary_voxels(&mask, |j| !data[j])
        .into_iter()
        .map(|c| ndc.voxel_to_ndc(c))
        .collect();
    Ok(subsample(pts, max_points, seed))
}

/// Per-target supervision points with search trees.
#[derive(Debug, Clone)]
pub struct PointCloudSet {
    clouds: Vec<Option<KdTree>>,
}

impl PointCloudSet {
    pub fn new(clouds: [Option<Vec<Vec3>>; 4]) -> Self {
        PointCloudSet {
            clouds: clouds
                .into_iter()
                .map(|c| c.filter(|p| !p.is_empty()).map(|p| KdTree::new(&p)))
                .collect(),
        }
    }

    /// Points sitting exactly on the vertices of each label.
    pub fn from_mesh(m: &crate::mesh::LabeledMesh) -> Self {
        let mut clouds: [Option<Vec<Vec3>>; 4] = Default::default();
        for t in SurfaceTarget::FIT_ORDER {
            let pts: Vec<Vec3> = m
                .indices_with_label(crate::mesh::VertexLabel::of_target(t))
                .into_iter()
                .map(|i| m.vertices()[i])
                .collect();
            clouds[t.index()] = Some(pts);
        }
        PointCloudSet::new(clouds)
    }

    /// Supervision for the template's four surfaces. Endocardial targets
    /// use the literal cavity boundary. The epicardial masks also bound the
    /// septum, which no epicardial vertex reaches, so for them only voxels
    /// touching the outside of the heart are kept, and each is given to
    /// the LV or RV epicardium by whichever cavity is closer.
    pub fn from_volume(v: &LabelVolume, ndc: &NdcMap, max_points: usize, seed: u64) -> Result<Self> {
        let mut clouds: [Option<Vec<Vec3>>; 4] = Default::default();
        for t in [SurfaceTarget::LvEndo, SurfaceTarget::RvEndo] {
            clouds[t.index()] = Some(extract_point_cloud(v, t, ndc, max_points, seed ^ t.index() as u64)?);
        }
        let heart = surface_mask(v, SurfaceTarget::RvEpi);
        let labels = v.data();
        let exterior = boundary_voxels(&heart, |j| labels[j] == Label::Background);
        if exterior.is_empty() {
            return Err(Error::Empty("volume has no heart voxels".into()));
        }
        let lv = squared_edt(&v.map(|l| *l == Label::Lv));
        let rv = squared_edt(&v.map(|l| *l == Label::Rv));
        let g = v.geometry();
        let (mut lv_pts, mut rv_pts) = (Vec::new(), Vec::new());
        for c in exterior {
            let i = g.index(c[0], c[1], c[2]);
            let p = ndc.voxel_to_ndc(c);
            if lv.data()[i] <= rv.data()[i] {
                lv_pts.push(p);
            } else {
                rv_pts.push(p);
            }
        }
        for (t, pts) in [(SurfaceTarget::LvEpi, lv_pts), (SurfaceTarget::RvEpi, rv_pts)] {
            if pts.is_empty() {
                return Err(Error::Empty(format!("no exterior points for {t}")));
            }
            clouds[t.index()] = Some(subsample(pts, max_points, seed ^ t.index() as u64));
        }
        Ok(PointCloudSet::new(clouds))
    }

    pub fn get(&self, t: SurfaceTarget) -> Option<&KdTree> {
        self.clouds[t.index()].as_ref()
    }

    pub fn points(&self, t: SurfaceTarget) -> &[Vec3] {
        self.get(t).map(|k| k.points()).unwrap_or(&[])
    }

    pub fn total_points(&self) -> usize {
        self.clouds.iter().flatten().map(|k| k.len()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::{Geometry, Grid3};

    #[test]
    fn solid_block_has_26_boundary_voxels() {
        let g = Geometry::centered([3, 3, 3], [1.0; 3]).unwrap();
        let v = Grid3::filled(g, Label::Lv);
        let ndc = NdcMap::for_geometry(&g);
        let p = extract_point_cloud(&v, SurfaceTarget::LvEndo, &ndc, 1000, 0).unwrap();
        assert_eq!(p.len(), 26);
        assert!(!p.iter().any(|q| q.norm() < 1e-12));
    }

    #[test]
    fn single_voxel() {
        let g = Geometry::centered([5, 5, 5], [1.0; 3]).unwrap();
        let v = Grid3::from_fn(g, |c| if c == [1, 2, 3] { Label::Rv } else { Label::Background });
        let ndc = NdcMap::for_geometry(&g);
        let p = extract_point_cloud(&v, SurfaceTarget::RvEndo, &ndc, 10, 0).unwrap();
        assert_eq!(p, vec![ndc.voxel_to_ndc([1, 2, 3])]);
        assert!(extract_point_cloud(&v, SurfaceTarget::LvEndo, &ndc, 10, 0).is_err());
    }

    #[test]
    fn subsample_is_seeded() {
        let g = Geometry::centered([12, 12, 12], [1.0; 3]).unwrap();
        let v = Grid3::from_fn(g, |[x, y, z]| {
            if (2..10).contains(&x) && (2..10).contains(&y) && (2..10).contains(&z) {
                Label::Lv
            } else {
                Label::Background
            }
        });
        let ndc = NdcMap::for_geometry(&g);
        let a = extract_point_cloud(&v, SurfaceTarget::LvEndo, &ndc, 50, 3).unwrap();
        let b = extract_point_cloud(&v, SurfaceTarget::LvEndo, &ndc, 50, 3).unwrap();
        assert_eq!(a.len(), 50);
        assert_eq!(a, b);
    }
}
