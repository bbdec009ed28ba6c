use std::ops::{Add, Mul};

use super::grid::{Geometry, Grid3, NdcMap, ScalarField, VectorField};
use crate::{Error, Result, Vec3};

/// Floor on the gradient norm when normalizing descent directions.
pub const GRADIENT_EPS: f64 = 1e-6;

/// Spatial gradient of a millimetre-valued field with respect to NDC, after
/// converting the field to NDC units. For a distance field the result is a
/// dimensionless, nearly unit-length vector. Central differences inside the
/// grid, one-sided differences on the faces.
pub fn gradient(d: &ScalarField, ndc: &NdcMap) -> VectorField {
    let g = *d.geometry();
    let k = ndc.ndc_per_mm(&g);
    let data = d.data();
    Grid3::from_fn(g, |c| {
        let idx = g.index(c[0], c[1], c[2]);
        let mut out = Vec3::zeros();
        for axis in 0..3 {
            let n = g.dims[axis];
            if n < 2 {
                continue;
            }
            let s = g.stride(axis);
            let i = c[axis];
            let (lo, hi, span) = if i == 0 {
                (idx, idx + s, 1.0)
            } else if i == n - 1 {
                (idx - s, idx, 1.0)
            } else {
                (idx - s, idx + s, 2.0)
            };
            out[axis] = (data[hi] - data[lo]) * k / (span * ndc.scale[axis]);
        }
        out
    })
}

/// Descent displacement field `g = -d * grad(d) / max(|grad(d)|, eps)` in
/// NDC units: adding `g(p)` to a point moves it by its distance value
/// against the distance gradient, i.e. onto the nearest boundary.
pub fn gradient_field(d: &ScalarField, ndc: &NdcMap) -> VectorField {
    let k = ndc.ndc_per_mm(d.geometry());
    let grad = gradient(d, ndc);
    let data = grad
        .data()
        .iter()
        .zip(d.data())
        .map(|(gv, &dv)| -(dv * k) * gv / gv.norm().max(GRADIENT_EPS))
        .collect();
    Grid3::from_vec(*d.geometry(), data).expect("same geometry")
}

/// Values that can be trilinearly interpolated.
pub trait Lerp: Copy + Add<Output = Self> + Mul<f64, Output = Self> {}
impl<T: Copy + Add<Output = T> + Mul<f64, Output = T>> Lerp for T {}

/// Trilinear interpolation at an NDC point. Points outside the hull of the
/// voxel centers are clamped onto it first.
pub fn sample_trilinear<T: Lerp>(f: &Grid3<T>, ndc: &NdcMap, p: Vec3) -> Result<T> {
    if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()) {
        return Err(Error::NonFinitePoint(p.x, p.y, p.z));
    }
    Ok(sample_index(f, ndc.to_index(p)))
}

/// Trilinear interpolation at a continuous voxel-index position.
pub fn sample_index<T: Lerp>(f: &Grid3<T>, q: Vec3) -> T {
    let g: &Geometry = f.geometry();
    let mut base = [0usize; 3];
    let mut frac = [0.0f64; 3];
    for a in 0..3 {
        let n = g.dims[a];
        let x = q[a].clamp(0.0, (n - 1) as f64);
        let i = (x.floor() as usize).min(n.saturating_sub(2));
        base[a] = i;
        frac[a] = if n > 1 { x - i as f64 } else { 0.0 };
    }
    let data = f.data();
    let at = |dx: usize, dy: usize, dz: usize| {
        let x = (base[0] + dx).min(g.dims[0] - 1);
        let y = (base[1] + dy).min(g.dims[1] - 1);
        let z = (base[2] + dz).min(g.dims[2] - 1);
        data[g.index(x, y, z)]
    };
    let [fx, fy, fz] = frac;
    let c00 = at(0, 0, 0) * (1.0 - fx) + at(1, 0, 0) * fx;
    let c10 = at(0, 1, 0) * (1.0 - fx) + at(1, 1, 0) * fx;
    let c01 = at(0, 0, 1) * (1.0 - fx) + at(1, 0, 1) * fx;
    let c11 = at(0, 1, 1) * (1.0 - fx) + at(1, 1, 1) * fx;
    let c0 = c00 * (1.0 - fy) + c10 * fy;
    let c1 = c01 * (1.0 - fy) + c11 * fy;
    c0 * (1.0 - fz) + c1 * fz
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geom(n: usize, s: f64) -> Geometry {
        Geometry::centered([n, n, n], [s; 3]).unwrap()
    }

    #[test]
    fn ramp_gradient_is_unit_x() {
        let g = geom(9, 2.0);
        let d = Grid3::from_fn(g, |c| g.physical(c).x);
        let ndc = NdcMap::for_geometry(&g);
        let grad = gradient(&d, &ndc);
        for v in grad.data() {
            assert!((v - Vec3::x()).norm() < 1e-12, "{v:?}");
        }
    }

    #[test]
    fn constant_field_has_zero_descent() {
        let g = geom(5, 1.0);
        let d = Grid3::filled(g, 3.0);
        let f = gradient_field(&d, &NdcMap::for_geometry(&g));
        assert!(f.data().iter().all(|v| *v == Vec3::zeros()));
    }

    #[test]
    fn voxel_center_and_midpoint() {
        let g = geom(4, 1.0);
        let ndc = NdcMap::for_geometry(&g);
        let f = Grid3::from_fn(g, |[x, y, z]| Vec3::new((x * x) as f64, y as f64, (z * 7 % 3) as f64));
        let p = ndc.voxel_to_ndc([2, 1, 3]);
        assert_eq!(sample_trilinear(&f, &ndc, p).unwrap(), *f.get(2, 1, 3));
        let mid = 0.5 * (ndc.voxel_to_ndc([1, 2, 2]) + ndc.voxel_to_ndc([2, 2, 2]));
        let want = 0.5 * (f.get(1, 2, 2) + f.get(2, 2, 2));
        assert!((sample_trilinear(&f, &ndc, mid).unwrap() - want).norm() < 1e-12);
        assert!(sample_trilinear(&f, &ndc, Vec3::new(f64::NAN, 0.0, 0.0)).is_err());
    }

    #[test]
    fn clamps_outside_hull() {
        let g = geom(3, 1.0);
        let ndc = NdcMap::for_geometry(&g);
        let f = Grid3::from_fn(g, |[x, _, _]| x as f64);
        assert_eq!(sample_trilinear(&f, &ndc, Vec3::new(5.0, 0.0, 0.0)).unwrap(), 2.0);
        assert_eq!(sample_trilinear(&f, &ndc, Vec3::new(-5.0, 0.0, 0.0)).unwrap(), 0.0);
    }
}
