//! Voxel overlap and boundary distances.

use crate::volume::{squared_edt, Geometry, Grid3, Mask};
use crate::{Error, Result};

fn same_dims(a: &Mask, b: &Mask) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(Error::DimMismatch(a.dims(), b.dims()));
    }
    Ok(())
}

/// `2|a∩b| / (|a| + |b|)`, or 1 when both are empty.
pub fn dice(a: &Mask, b: &Mask) -> Result<f64> {
    same_dims(a, b)?;
    let (mut inter, mut na, mut nb) = (0usize, 0usize, 0usize);
    for (&x, &y) in a.data().iter().zip(b.data()) {
        na += x as usize;
        nb += y as usize;
        inter += (x && y) as usize;
    }
    if na + nb == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * inter as f64 / (na + nb) as f64)
}

/// Foreground voxels with a background 6-neighbour; voxels on the grid
/// border count as boundary.
pub fn boundary(mask: &Mask) -> Mask {
    let g = *mask.geometry();
    let d = mask.data();
    Grid3::from_fn(g, |c| {
        if !d[g.index(c[0], c[1], c[2])] {
            return false;
        }
        (0..3).any(|a| {
            [-1i64, 1].iter().any(|s| {
                let n = c[a] as i64 + s;
                if n < 0 || n >= g.dims[a] as i64 {
                    return true;
                }
                let mut cc = c;
                cc[a] = n as usize;
                !d[g.index(cc[0], cc[1], cc[2])]
            })
        })
    })
}

/// Exact and 95th-percentile symmetric Hausdorff distances, in voxels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hausdorff {
    pub max: f64,
    pub p95: f64,
}

/// Distances (index metric) from every boundary voxel of `from` to the
/// nearest boundary voxel of `to`.
fn directed(from: &Mask, to: &Mask) -> Vec<f64> {
    let g = Geometry::new(to.dims(), [1.0; 3], [0.0; 3]).expect("valid dims");
    let unit = Grid3::from_vec(g, to.data().to_vec()).expect("same size");
    let d2 = squared_edt(&unit);
    from.data()
        .iter()
        .zip(d2.data())
        .filter(|(f, _)| **f)
        .map(|(_, d)| d.sqrt())
        .collect()
}

/// Linear-interpolated percentile of unsorted values.
pub fn percentile(values: &mut [f64], q: f64) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let pos = q / 100.0 * (values.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    values[lo] + (values[hi] - values[lo]) * (pos - lo as f64)
}

/// Symmetric Hausdorff distance between the boundaries of `a` and `b`. The
/// 95th percentile is taken over both directed distance sets pooled.
pub fn hausdorff(a: &Mask, b: &Mask) -> Result<Hausdorff> {
    same_dims(a, b)?;
    let (ba, bb) = (boundary(a), boundary(b));
    if !ba.data().iter().any(|&v| v) || !bb.data().iter().any(|&v| v) {
        return Err(Error::Empty("Hausdorff distance of an empty mask".into()));
    }
    let mut all = directed(&ba, &bb);
    all.extend(directed(&bb, &ba));
    let max = all.iter().cloned().fold(0.0, f64::max);
    Ok(Hausdorff {
        max,
        p95: percentile(&mut all, 95.0),
    })
}
