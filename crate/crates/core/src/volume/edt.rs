//! Exact Euclidean distance transforms.
//!
//! Squared distances are computed with the separable lower-envelope method:
//! one pass per axis, each pass taking the lower envelope of parabolas
//! rooted at the previous pass's values. With unit spacing every
//! intermediate value is an integer, so the result is bitwise exact.

use super::grid::{Grid3, Mask, ScalarField};

/// Squared distance from every voxel center to the nearest `true` voxel
/// center, honouring anisotropic spacing. Voxels are `+inf` when the mask
/// has no `true` voxel.
pub fn squared_edt(mask: &Mask) -> Grid3<f64> {
    let mut out = mask.map(|&m| if m { 0.0 } else { f64::INFINITY });
    let g = *mask.geometry();
    let mut line = Vec::new();
    let mut result = Vec::new();
    let mut scratch = Envelope::default();
    for axis in 0..3 {
        let n = g.dims[axis];
        if n == 1 {
            continue;
        }
        let stride = g.stride(axis);
        let w = g.spacing[axis] * g.spacing[axis];
        let data = out.data_mut();
        for start in line_starts(g.dims, axis) {
            line.clear();
            line.extend((0..n).map(|i| data[start + i * stride]));
            if line.iter().all(|v| v.is_infinite()) {
                continue;
            }
            scratch.transform(&line, w, &mut result);
            for (i, v) in result.iter().enumerate() {
                data[start + i * stride] = *v;
            }
        }
    }
    out
}

/// Linear indices of the first voxel of every grid line parallel to `axis`.
fn line_starts(dims: [usize; 3], axis: usize) -> Vec<usize> {
    let [nx, ny, nz] = dims;
    let mut starts = Vec::new();
    match axis {
        0 => {
            for z in 0..nz {
                for y in 0..ny {
                    starts.push((z * ny + y) * nx);
                }
            }
        }
        1 => {
            for z in 0..nz {
                for x in 0..nx {
                    starts.push(z * ny * nx + x);
                }
            }
        }
        _ => {
            for y in 0..ny {
                for x in 0..nx {
                    starts.push(y * nx + x);
                }
            }
        }
    }
    starts
}

#[derive(Default)]
struct Envelope {
    sites: Vec<usize>,
    bounds: Vec<f64>,
}

impl Envelope {
    /// 1D transform `out[p] = min_q f[q] + w (p - q)^2` over finite `f[q]`.
    fn transform(&mut self, f: &[f64], w: f64, out: &mut Vec<f64>) {
        let n = f.len();
        self.sites.clear();
        self.bounds.clear();
        // intersection abscissa of the parabolas rooted at q and r (q > r)
        let meet = |q: usize, r: usize| {
            let (qf, rf) = (q as f64, r as f64);
            ((f[q] + w * qf * qf) - (f[r] + w * rf * rf)) / (2.0 * w * (qf - rf))
        };
        for q in 0..n {
            if f[q].is_infinite() {
                continue;
            }
            loop {
                match self.sites.last() {
                    None => {
                        self.sites.push(q);
                        self.bounds.push(f64::NEG_INFINITY);
                        break;
                    }
                    Some(&r) => {
                        let s = meet(q, r);
                        if s <= *self.bounds.last().unwrap() {
                            self.sites.pop();
                            self.bounds.pop();
                        } else {
                            self.sites.push(q);
                            self.bounds.push(s);
                            break;
                        }
                    }
                }
            }
        }
        out.clear();
        let mut k = 0;
        for p in 0..n {
            let pf = p as f64;
            while k + 1 < self.sites.len() && self.bounds[k + 1] < pf {
                k += 1;
            }
            let q = self.sites[k];
            let d = pf - q as f64;
            out.push(f[q] + w * d * d);
        }
    }
}

/// Which class of an input mask is missing, for degenerate inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Degenerate {
    NoForeground,
    NoBackground,
}

/// A boundary distance map plus the degeneracy flag of its mask.
#[derive(Debug, Clone)]
pub struct DistanceMap {
    pub field: ScalarField,
    pub degenerate: Option<Degenerate>,
}

fn one_sided(mask: &Mask, sentinel: f64) -> Grid3<f64> {
    squared_edt(mask).map(|&d| if d.is_finite() { d.sqrt() } else { sentinel })
}

fn degeneracy(mask: &Mask) -> Option<Degenerate> {
    if !mask.data().iter().any(|&m| m) {
        Some(Degenerate::NoForeground)
    } else if mask.data().iter().all(|&m| m) {
        Some(Degenerate::NoBackground)
    } else {
        None
    }
}

/// Unsigned boundary distance `edt_fg + edt_bg` in millimetres: the distance
/// from each voxel center to the nearest center of the opposite class. When
/// one class is absent its distance is the grid diagonal and the result is
/// flagged as degenerate.
pub fn edt(mask: &Mask) -> DistanceMap {
    let sentinel = mask.geometry().diagonal();
    let degenerate = degeneracy(mask);
    if let Some(d) = degenerate {
        log::warn!("degenerate mask ({d:?}); distance field holds the sentinel {sentinel:.3}");
    }
    let fg = one_sided(mask, sentinel);
    let bg = one_sided(&mask.map(|&m| !m), sentinel);
    let data = fg.data().iter().zip(bg.data()).map(|(a, b)| a + b).collect();
    DistanceMap {
        field: Grid3::from_vec(*mask.geometry(), data).expect("same geometry"),
        degenerate,
    }
}

/// Boundary distance shifted down by the smallest voxel spacing and clamped
/// at zero. Voxels face-adjacent to the opposite class get exactly zero, so
/// the zero set is the two-voxel shell straddling the region boundary and
/// elsewhere the value approximates the distance to that shell.
pub fn boundary_distance(mask: &Mask) -> DistanceMap {
    let h = mask.spacing().iter().cloned().fold(f64::INFINITY, f64::min);
    let mut map = edt(mask);
    if map.degenerate.is_none() {
        for v in map.field.data_mut() {
            *v = (*v - h).max(0.0);
        }
    }
    map
}
