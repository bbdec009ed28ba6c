use serde::{Deserialize, Serialize};

use crate::{Error, Result, Vec3};

/// Physical placement of a voxel grid. `origin` is the position of the
/// center of voxel (0, 0, 0); voxel `(i, j, k)` sits at
/// `origin + (i, j, k) * spacing`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    pub origin: [f64; 3],
}

impl Geometry {
    pub fn new(dims: [usize; 3], spacing: [f64; 3], origin: [f64; 3]) -> Result<Self> {
        if dims.iter().any(|&n| n == 0) {
            return Err(Error::InvalidVolume(format!("zero dimension in {dims:?}")));
        }
        if spacing.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::InvalidVolume(format!(
                "spacing must be positive, got {spacing:?}"
            )));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::InvalidVolume(format!("non-finite origin {origin:?}")));
        }
        Ok(Geometry {
            dims,
            spacing,
            origin,
        })
    }

    /// Grid of the given size centered on the physical origin.
    pub fn centered(dims: [usize; 3], spacing: [f64; 3]) -> Result<Self> {
        let origin = [0, 1, 2].map(|a| -0.5 * (dims[a] as f64 - 1.0) * spacing[a]);
        Geometry::new(dims, spacing, origin)
    }

    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Linear index in z-y-x C order (x fastest).
    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        (z * self.dims[1] + y) * self.dims[0] + x
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let x = idx % self.dims[0];
        let y = (idx / self.dims[0]) % self.dims[1];
        let z = idx / (self.dims[0] * self.dims[1]);
        [x, y, z]
    }

    #[inline]
    pub fn stride(&self, axis: usize) -> usize {
        match axis {
            0 => 1,
            1 => self.dims[0],
            _ => self.dims[0] * self.dims[1],
        }
    }

    pub fn physical(&self, c: [usize; 3]) -> Vec3 {
        Vec3::new(
            self.origin[0] + c[0] as f64 * self.spacing[0],
            self.origin[1] + c[1] as f64 * self.spacing[1],
            self.origin[2] + c[2] as f64 * self.spacing[2],
        )
    }

    /// Extent between the outer faces of the first and last voxels, per axis.
    pub fn extent(&self) -> [f64; 3] {
        [0, 1, 2].map(|a| self.dims[a] as f64 * self.spacing[a])
    }

    /// Length of the grid's physical diagonal, used as the "far away" value.
    pub fn diagonal(&self) -> f64 {
        self.extent().iter().map(|e| e * e).sum::<f64>().sqrt()
    }

    pub fn is_isotropic(&self, spacing: f64) -> bool {
        self.spacing.iter().all(|&s| (s - spacing).abs() <= 1e-9 * spacing)
    }
}

/// Dense 3D grid of values with physical geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid3<T> {
    geometry: Geometry,
    data: Vec<T>,
}

impl<T> Grid3<T> {
    pub fn from_vec(geometry: Geometry, data: Vec<T>) -> Result<Self> {
        if data.len() != geometry.len() {
            return Err(Error::SizeMismatch {
                expected: geometry.len(),
                found: data.len(),
            });
        }
        Ok(Grid3 { geometry, data })
    }

    pub fn from_fn(geometry: Geometry, mut f: impl FnMut([usize; 3]) -> T) -> Self {
        let data = (0..geometry.len()).map(|i| f(geometry.coords(i))).collect();
        Grid3 { geometry, data }
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn dims(&self) -> [usize; 3] {
        self.geometry.dims
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.geometry.spacing
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> &T {
        &self.data[self.geometry.index(x, y, z)]
    }

    #[inline]
    pub fn get_mut(&mut self, x: usize, y: usize, z: usize) -> &mut T {
        let i = self.geometry.index(x, y, z);
        &mut self.data[i]
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Grid3<U> {
        Grid3 {
            geometry: self.geometry,
            data: self.data.iter().map(f).collect(),
        }
    }
}

impl<T: Clone> Grid3<T> {
    pub fn filled(geometry: Geometry, value: T) -> Self {
        Grid3 {
            data: vec![value; geometry.len()],
            geometry,
        }
    }
}

/// Anatomical voxel label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
#[repr(u8)]
pub enum Label {
    #[default]
    Background = 0,
    Lv = 1,
    Rv = 2,
    Myo = 3,
}

impl Label {
    pub const ALL: [Label; 4] = [Label::Background, Label::Lv, Label::Rv, Label::Myo];
    pub const HEART: [Label; 3] = [Label::Lv, Label::Rv, Label::Myo];

    pub fn from_u8(v: u8) -> Option<Label> {
        match v {
            0 => Some(Label::Background),
            1 => Some(Label::Lv),
            2 => Some(Label::Rv),
            3 => Some(Label::Myo),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Label::Background => "background",
            Label::Lv => "lv",
            Label::Rv => "rv",
            Label::Myo => "myo",
        }
    }
}

/// Labeled segmentation volume. Dimensions are at least 2 along every axis.
pub type LabelVolume = Grid3<Label>;
/// Binary mask on a voxel grid.
pub type Mask = Grid3<bool>;
/// Scalar field in millimetres (distance maps).
pub type ScalarField = Grid3<f64>;
/// Per-voxel 3-vectors in NDC units.
pub type VectorField = Grid3<Vec3>;

/// Builds a label volume and checks the minimum size invariant.
pub fn label_volume(geometry: Geometry, labels: Vec<Label>) -> Result<LabelVolume> {
    if geometry.dims.iter().any(|&n| n < 2) {
        return Err(Error::InvalidVolume(format!(
            "label volume dims must be >= 2, got {:?}",
            geometry.dims
        )));
    }
    Grid3::from_vec(geometry, labels)
}

/// Affine map between voxel-index space and normalized device coordinates,
/// `ndc = scale * index + translation` per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NdcMap {
    pub scale: Vec3,
    pub translation: Vec3,
}

impl NdcMap {
    pub fn new(scale: Vec3, translation: Vec3) -> Result<Self> {
        if scale.iter().any(|s| *s == 0.0 || !s.is_finite()) || translation.iter().any(|t| !t.is_finite())
        {
            return Err(Error::InvalidVolume(format!(
                "non-invertible NDC map scale {scale:?}"
            )));
        }
        Ok(NdcMap { scale, translation })
    }

    /// Isotropic-in-millimetres map that centers the volume's physical box at
    /// the origin and stretches its longest side to [-1, 1].
    pub fn for_geometry(g: &Geometry) -> Self {
        let ext = g.extent();
        let longest = ext.iter().cloned().fold(0.0, f64::max);
        let k = 2.0 / longest;
        let scale = Vec3::new(g.spacing[0] * k, g.spacing[1] * k, g.spacing[2] * k);
        let translation = Vec3::new(
            -scale.x * (g.dims[0] as f64 - 1.0) / 2.0,
            -scale.y * (g.dims[1] as f64 - 1.0) / 2.0,
            -scale.z * (g.dims[2] as f64 - 1.0) / 2.0,
        );
        NdcMap { scale, translation }
    }

    #[inline]
    pub fn to_ndc(&self, idx: Vec3) -> Vec3 {
        self.scale.component_mul(&idx) + self.translation
    }

    #[inline]
    pub fn voxel_to_ndc(&self, c: [usize; 3]) -> Vec3 {
        self.to_ndc(Vec3::new(c[0] as f64, c[1] as f64, c[2] as f64))
    }

    #[inline]
    pub fn to_index(&self, ndc: Vec3) -> Vec3 {
        (ndc - self.translation).component_div(&self.scale)
    }

    /// NDC units per millimetre along x, given the grid spacing used to build
    /// the map. Maps built by [`NdcMap::for_geometry`] are isotropic in mm.
    pub fn ndc_per_mm(&self, g: &Geometry) -> f64 {
        self.scale.x / g.spacing[0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_roundtrip() {
        let g = Geometry::new([3, 4, 5], [1.0; 3], [0.0; 3]).unwrap();
        for i in 0..g.len() {
            let [x, y, z] = g.coords(i);
            assert_eq!(g.index(x, y, z), i);
        }
        assert_eq!(g.index(1, 0, 0), 1);
        assert_eq!(g.index(0, 1, 0), 3);
        assert_eq!(g.index(0, 0, 1), 12);
    }

    #[test]
    fn ndc_map_centers_and_bounds() {
        let g = Geometry::new([10, 20, 5], [1.0, 1.0, 3.0], [5.0, -2.0, 7.0]).unwrap();
        let m = NdcMap::for_geometry(&g);
        let lo = m.voxel_to_ndc([0, 0, 0]);
        let hi = m.voxel_to_ndc([9, 19, 4]);
        assert!((lo + hi).norm() < 1e-12);
        // outer face of the longest axis lands on the cube face
        assert!((m.to_ndc(Vec3::new(0.0, 19.5, 0.0)).y - 1.0).abs() < 1e-12);
        assert!(hi.x <= 1.0 && hi.z <= 1.0);
        let p = Vec3::new(2.5, 7.0, 1.5);
        assert!((m.to_index(m.to_ndc(p)) - p).norm() < 1e-12);
        // isotropic in millimetres
        assert!((m.scale.z / 3.0 - m.scale.x).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_geometry() {
        assert!(Geometry::new([2, 2, 2], [1.0, 0.0, 1.0], [0.0; 3]).is_err());
        let g = Geometry::new([1, 2, 2], [1.0; 3], [0.0; 3]).unwrap();
        assert!(label_volume(g, vec![Label::Background; 4]).is_err());
    }
}
