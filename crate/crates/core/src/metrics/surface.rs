//! Mean distance from ground-truth boundary samples to a mesh.

use rand::seq::index::sample;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::mesh::LabeledMesh;
use crate::spatial::TriangleBvh;
use crate::volume::{Label, LabelVolume, NdcMap};
use crate::{Error, Result, Vec3};

/// Default number of boundary samples.
pub const ASD_SAMPLES: usize = 5000;

/// Heart voxels with a 6-neighbour of another label (or outside the grid).
pub fn label_boundary_voxels(v: &LabelVolume) -> Vec<[usize; 3]> {
    let g = v.geometry();
    let d = v.data();
    let mut out = Vec::new();
    for (i, &l) in d.iter().enumerate() {
        if l == Label::Background {
            continue;
        }
        let c = g.coords(i);
        let edge = (0..3).any(|a| {
            [-1i64, 1].iter().any(|s| {
                let n = c[a] as i64 + s;
                if n < 0 || n >= g.dims[a] as i64 {
                    return true;
                }
                let mut cc = c;
                cc[a] = n as usize;
                d[g.index(cc[0], cc[1], cc[2])] != l
            })
        });
        if edge {
            out.push(c);
        }
    }
    out
}

/// Average distance (mm) from `n` seeded samples of the label-boundary voxel
/// centers of `gt` to the closest point on `m`. Samples are drawn without
/// replacement when enough voxels exist, otherwise with replacement.
pub fn asd(m: &LabeledMesh, gt: &LabelVolume, ndc: &NdcMap, n: usize, seed: u64) -> Result<f64> {
    if m.num_faces() == 0 {
        return Err(Error::Empty("mesh has no faces".into()));
    }
    let voxels = label_boundary_voxels(gt);
    if voxels.is_empty() || n == 0 {
        return Err(Error::Empty("ground truth has no boundary voxels".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks: Vec<usize> = if voxels.len() >= n {
        sample(&mut rng, voxels.len(), n).into_vec()
    } else {
        (0..n).map(|_| rng.random_range(0..voxels.len())).collect()
    };
    let bvh = TriangleBvh::new(m.vertices(), m.faces());
    let mm_per_ndc = 1.0 / ndc.ndc_per_mm(gt.geometry());
    let total: f64 = picks
        .iter()
        .map(|&k| {
            let p: Vec3 = ndc.voxel_to_ndc(voxels[k]);
            bvh.distance(&p).expect("nonempty mesh")
        })
        .sum();
    Ok(total / n as f64 * mm_per_ndc)
}
