//! Analytic bi-ventricular solids and their voxelization.
//!
//! Positions are in millimetres relative to the grid center. The LV long
//! axis is the local Z axis (apex down, base up); the RV sits beside the LV
//! at the swing azimuth.

use nalgebra::{Matrix3, Rotation3};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::volume::{Geometry, Grid3, Label, LabelVolume, NdcMap};
use crate::{Error, Result, Vec3};

/// Parameters of one synthetic phantom. Missing JSON fields take the
/// defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhantomSpec {
    pub dims: [usize; 3],
    pub spacing_mm: f64,
    /// LV center relative to the grid center.
    pub lv_center_mm: [f64; 3],
    /// LV cavity semi-axes (x, y, long axis).
    pub lv_semi_axes_mm: [f64; 3],
    pub lv_wall_mm: f64,
    /// Distance from the LV axis to the RV cavity center.
    pub rv_offset_mm: f64,
    /// Height of the RV cavity center above the LV center.
    pub rv_height_mm: f64,
    /// RV cavity semi-axes (radial, tangential, long axis).
    pub rv_semi_axes_mm: [f64; 3],
    pub rv_wall_mm: f64,
    /// Basal truncation plane, above the LV center.
    pub base_height_mm: f64,
    /// Rotation of the long axis about the Y axis.
    pub tilt_deg: f64,
    /// Azimuth of the RV about the long axis, from +X towards +Y.
    pub swing_deg: f64,
    /// Relative amplitude of seeded size perturbations; 0 disables them.
    pub jitter: f64,
    pub seed: u64,
}

impl Default for PhantomSpec {
    fn default() -> Self {
        PhantomSpec {
            dims: [128, 128, 128],
            spacing_mm: 2.0,
            lv_center_mm: [0.0, 0.0, 0.0],
            lv_semi_axes_mm: [25.0, 25.0, 50.0],
            lv_wall_mm: 10.0,
            rv_offset_mm: 40.0,
            rv_height_mm: 5.0,
            rv_semi_axes_mm: [20.0, 38.0, 45.0],
            rv_wall_mm: 3.0,
            base_height_mm: 20.0,
            tilt_deg: 0.0,
            swing_deg: 0.0,
            jitter: 0.0,
            seed: 0,
        }
    }
}

impl PhantomSpec {
    /// A randomized variant of the default anatomy: sizes jittered by up to
    /// 10%, swing within ±30° and tilt within ±8°.
    pub fn varied(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x0005_eed0_fa11);
        PhantomSpec {
            swing_deg: rng.random_range(-30.0..30.0),
            tilt_deg: rng.random_range(-8.0..8.0),
            jitter: 0.1,
            seed,
            ..Default::default()
        }
    }

    pub fn geometry(&self) -> Result<Geometry> {
        if self.dims.iter().any(|&n| n < 2) {
            return Err(Error::Config(format!("phantom dims must be ≥ 2, got {:?}", self.dims)));
        }
        Geometry::centered(self.dims, [self.spacing_mm; 3])
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: PhantomSpec = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive, got {v}")))
            }
        };
        positive("spacing_mm", self.spacing_mm)?;
        positive("lv_wall_mm", self.lv_wall_mm)?;
        positive("rv_wall_mm", self.rv_wall_mm)?;
        positive("rv_offset_mm", self.rv_offset_mm)?;
        for a in self.lv_semi_axes_mm.iter().chain(&self.rv_semi_axes_mm) {
            positive("semi-axis", *a)?;
        }
        if !(0.0..0.5).contains(&self.jitter) {
            return Err(Error::Config(format!("jitter must be in [0, 0.5), got {}", self.jitter)));
        }
        let finite = [self.rv_height_mm, self.base_height_mm, self.tilt_deg, self.swing_deg]
            .iter()
            .chain(&self.lv_center_mm)
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Config("non-finite phantom parameter".into()));
        }
        self.geometry()?;
        self.surfaces()?;
        Ok(())
    }

    /// The analytic solids after jitter. Fails when the geometry is
    /// inconsistent.
    pub fn surfaces(&self) -> Result<PhantomSurfaces> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut j = || {
            if self.jitter > 0.0 {
                1.0 + rng.random_range(-self.jitter..self.jitter)
            } else {
                1.0
            }
        };
        let lv_xy = j();
        let lv = [
            self.lv_semi_axes_mm[0] * lv_xy,
            self.lv_semi_axes_mm[1] * lv_xy,
            self.lv_semi_axes_mm[2] * j(),
        ];
        let lv_wall = self.lv_wall_mm * j();
        let rv = [
            self.rv_semi_axes_mm[0] * j(),
            self.rv_semi_axes_mm[1] * j(),
            self.rv_semi_axes_mm[2] * j(),
        ];
        let rv_wall = self.rv_wall_mm * j();
        let rv_offset = self.rv_offset_mm * j();

        let lv_epi = [lv[0] + lv_wall, lv[1] + lv_wall, lv[2] + lv_wall];
        let rv_epi = [rv[0] + rv_wall, rv[1] + rv_wall, rv[2] + rv_wall];
        if rv_offset - rv[0] >= lv_epi[0].min(lv_epi[1]) {
            return Err(Error::Config(format!(
                "RV not attachable: cavity starts {:.1} mm from the LV axis, beyond the LV wall at {:.1} mm",
                rv_offset - rv[0],
                lv_epi[0].min(lv_epi[1])
            )));
        }
        if rv_offset + rv[0] <= lv_epi[0].max(lv_epi[1]) {
            return Err(Error::Config("RV cavity lies inside the LV wall".into()));
        }
        if self.base_height_mm >= lv[2] || self.base_height_mm <= -lv[2] {
            return Err(Error::Config(format!(
                "base plane at {} mm misses the LV cavity",
                self.base_height_mm
            )));
        }

        let frame = Rotation3::from_axis_angle(&Vec3::y_axis(), self.tilt_deg.to_radians());
        let swing = Rotation3::from_axis_angle(&Vec3::z_axis(), self.swing_deg.to_radians());
        let center = Vec3::from(self.lv_center_mm);
        let rv_center = Vec3::new(rv_offset, 0.0, self.rv_height_mm);
        let lv_axes = *frame.matrix();
        let rv_axes = frame.matrix() * swing.matrix();
        let s = PhantomSurfaces {
            lv_endo: Ellipsoid::new(center, lv_axes, Vec3::from(lv)),
            lv_epi: Ellipsoid::new(center, lv_axes, Vec3::from(lv_epi)),
            rv_endo: Ellipsoid::new(center + rv_axes * rv_center, rv_axes, Vec3::from(rv)),
            rv_epi: Ellipsoid::new(center + rv_axes * rv_center, rv_axes, Vec3::from(rv_epi)),
            base_point: center + lv_axes * Vec3::new(0.0, 0.0, self.base_height_mm),
            base_normal: lv_axes * Vec3::z(),
        };
        let half = 0.5 * (self.dims.iter().copied().min().unwrap_or(0) as f64 - 1.0) * self.spacing_mm;
        for e in [&s.lv_epi, &s.rv_epi] {
            if (e.center.abs() + Vec3::repeat(e.semi_axes.max())).max() > half {
                return Err(Error::Config("phantom does not fit in the grid".into()));
            }
        }
        Ok(s)
    }
}

/// Solid ellipsoid `Σ (aᵢ·(p − c) / sᵢ)² ≤ 1` with orthonormal axes `aᵢ`
/// (the columns of `axes`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ellipsoid {
    pub center: Vec3,
    pub axes: Matrix3<f64>,
    pub semi_axes: Vec3,
}

impl Ellipsoid {
    pub fn new(center: Vec3, axes: Matrix3<f64>, semi_axes: Vec3) -> Self {
        Ellipsoid {
            center,
            axes,
            semi_axes,
        }
    }

    pub fn local(&self, p: &Vec3) -> Vec3 {
        self.axes.transpose() * (p - self.center)
    }

    /// Implicit value; ≤ 1 inside.
    pub fn level(&self, p: &Vec3) -> f64 {
        self.local(p).component_div(&self.semi_axes).norm_squared()
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        self.level(p) <= 1.0
    }

    /// Euclidean distance from `p` to the ellipsoid surface.
    pub fn distance(&self, p: &Vec3) -> f64 {
        let e = self.semi_axes;
        // components on the axes are nudged off zero so that the secular
        // equation below always has a root in its bracket
        let y = self
            .local(p)
            .zip_map(&e, |v, s| if v.abs() < 1e-9 * s { 1e-9 * s } else { v });
        let f = |t: f64| -> f64 { (0..3).map(|i| (e[i] * y[i] / (t + e[i] * e[i])).powi(2)).sum::<f64>() - 1.0 };
        let emin = e.min();
        let (mut lo, mut hi) = (-emin * emin, e.max() * y.norm());
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let t = 0.5 * (lo + hi);
        let x = Vec3::from_fn(|i, _| e[i] * e[i] * y[i] / (t + e[i] * e[i]));
        (y - x).norm()
    }
}

/// Analytic description of a phantom: four ellipsoids and the basal plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhantomSurfaces {
    pub lv_endo: Ellipsoid,
    pub lv_epi: Ellipsoid,
    pub rv_endo: Ellipsoid,
    pub rv_epi: Ellipsoid,
    pub base_point: Vec3,
    /// Points on the positive side are cut away.
    pub base_normal: Vec3,
}

impl PhantomSurfaces {
    pub fn below_base(&self, p: &Vec3) -> bool {
        (p - self.base_point).dot(&self.base_normal) <= 0.0
    }

    pub fn label_at(&self, p: &Vec3) -> Label {
        if !self.below_base(p) {
            Label::Background
        } else if self.lv_endo.contains(p) {
            Label::Lv
        } else if self.lv_epi.contains(p) {
            Label::Myo
        } else if self.rv_endo.contains(p) {
            Label::Rv
        } else if self.rv_epi.contains(p) {
            Label::Myo
        } else {
            Label::Background
        }
    }

    /// Distance to the nearest of the untruncated surfaces, a lower bound
    /// on the distance to the phantom's actual boundary pieces.
    pub fn distance(&self, p: &Vec3) -> f64 {
        [&self.lv_endo, &self.lv_epi, &self.rv_endo, &self.rv_epi]
            .iter()
            .map(|e| e.distance(p))
            .fold((p - self.base_point).dot(&self.base_normal).abs(), f64::min)
    }
}

/// Position of voxel `c` relative to the grid center, in mm.
pub fn voxel_mm(g: &Geometry, c: [usize; 3]) -> Vec3 {
    Vec3::from_fn(|a, _| (c[a] as f64 - 0.5 * (g.dims[a] as f64 - 1.0)) * g.spacing[a])
}

/// NDC position of a point given in mm relative to the grid center.
pub fn mm_to_ndc(g: &Geometry, ndc: &NdcMap, p: &Vec3) -> Vec3 {
    ndc.to_ndc(Vec3::from_fn(|a, _| p[a] / g.spacing[a] + 0.5 * (g.dims[a] as f64 - 1.0)))
}

/// Voxelized phantom and its analytic surfaces.
pub fn generate_phantom(spec: &PhantomSpec) -> Result<(LabelVolume, PhantomSurfaces)> {
    spec.validate()?;
    let g = spec.geometry()?;
    let s = spec.surfaces()?;
    let v = Grid3::from_fn(g, |c| s.label_at(&voxel_mm(&g, c)));
    Ok((v, s))
}

/// A ball of `label` voxels of the given NDC radius centered in the grid.
pub fn sphere_volume(dims: [usize; 3], spacing_mm: f64, radius_ndc: f64, label: Label) -> Result<LabelVolume> {
    let g = Geometry::centered(dims, [spacing_mm; 3])?;
    let ndc = NdcMap::for_geometry(&g);
    Ok(Grid3::from_fn(g, |c| {
        if ndc.voxel_to_ndc(c).norm() <= radius_ndc {
            label
        } else {
            Label::Background
        }
    }))
}
