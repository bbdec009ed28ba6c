//! Template adjustment: swing alignment about Z, then per-label descent
//! through the target fields.

use std::f64::consts::PI;

use nalgebra::Rotation3;

use crate::mesh::{LabeledMesh, VertexLabel};
use crate::volume::{sample_trilinear, Label, LabelVolume, NdcMap, SurfaceTarget, TargetFields};
use crate::{Error, Result, Vec3};

/// Minimum XY-projection norm for a centroid to define an azimuth.
pub const MIN_PROJECTION: f64 = 1e-6;

/// Rotation about the NDC Z axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwingRotation {
    /// Radians in (−π, π].
    pub angle: f64,
}

impl SwingRotation {
    pub fn new(angle: f64) -> Self {
        let mut a = angle.rem_euclid(2.0 * PI);
        if a > PI {
            a -= 2.0 * PI;
        }
        SwingRotation { angle: a }
    }

    pub fn matrix(&self) -> Rotation3<f64> {
        Rotation3::from_axis_angle(&Vec3::z_axis(), self.angle)
    }

    pub fn apply(&self, v: &Vec3) -> Vec3 {
        self.matrix() * v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub iterations: usize,
    /// Largest displacement allowed in one step, NDC units.
    pub clamp: f64,
    /// Per-target switches, indexed by [`SurfaceTarget::index`].
    pub enabled: [bool; 4],
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            iterations: 10,
            clamp: 0.25,
            enabled: [true; 4],
        }
    }
}

impl FitConfig {
    pub fn only(targets: &[SurfaceTarget]) -> Self {
        let mut enabled = [false; 4];
        for t in targets {
            enabled[t.index()] = true;
        }
        FitConfig {
            enabled,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.clamp > 0.0) {
            return Err(Error::Config(format!("step clamp must be > 0, got {}", self.clamp)));
        }
        Ok(())
    }

    pub fn is_enabled(&self, t: SurfaceTarget) -> bool {
        self.enabled[t.index()]
    }
}

/// Mean of the RV-epicardial vertex positions.
pub fn rv_centroid(m: &LabeledMesh) -> Result<Vec3> {
    let idx = m.indices_with_label(VertexLabel::RvEpi);
    if idx.is_empty() {
        return Err(Error::Empty("mesh has no RV-epicardial vertices".into()));
    }
    Ok(idx.iter().map(|&i| m.vertices()[i]).sum::<Vec3>() / idx.len() as f64)
}

/// Mean NDC position of the RV voxel centers.
pub fn seg_rv_centroid(v: &LabelVolume, ndc: &NdcMap) -> Result<Vec3> {
    let g = v.geometry();
    let mut sum = Vec3::zeros();
    let mut n = 0usize;
    for (i, l) in v.data().iter().enumerate() {
        if *l == Label::Rv {
            let [x, y, z] = g.coords(i);
            sum += Vec3::new(x as f64, y as f64, z as f64);
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::Empty("volume has no RV voxels".into()));
    }
    Ok(ndc.to_ndc(sum / n as f64))
}

/// Rotates the mesh about Z so the XY azimuth of its RV-epicardial centroid
/// matches that of `target`.
pub fn swing_align(m: &LabeledMesh, target: &Vec3) -> Result<(LabeledMesh, SwingRotation)> {
    let src = rv_centroid(m)?;
    let (sn, tn) = (src.xy().norm(), target.xy().norm());
    if !(sn > MIN_PROJECTION && tn > MIN_PROJECTION) {
        return Err(Error::DegenerateProjection);
    }
    let phi = target.y.atan2(target.x) - src.y.atan2(src.x);
    let rot = SwingRotation::new(phi);
    if rot.angle == 0.0 {
        return Ok((m.clone(), rot));
    }
    let r = rot.matrix();
    Ok((m.map_vertices(|v| r * v), rot))
}

/// Per-iteration trace of a deformation run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FitLog {
    /// Mean distance (mm) sampled at moved vertices before each iteration,
    /// plus one entry after the last.
    pub mean_distance: Vec<f64>,
}

fn mean_distance(verts: &[Vec3], labels: &[VertexLabel], fields: &TargetFields, cfg: &FitConfig) -> Result<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for (v, l) in verts.iter().zip(labels) {
        let Some(t) = l.target().filter(|t| cfg.is_enabled(*t)) else {
            continue;
        };
        let d = fields
            .distance(t)
            .ok_or(Error::MissingField(t.name()))?;
        sum += sample_trilinear(&d.field, &fields.ndc, *v)?;
        n += 1;
    }
    Ok(if n == 0 { 0.0 } else { sum / n as f64 })
}

/// Moves every vertex whose label has an enabled target along that target's
/// descent field, `iterations` times, with each step clamped to `cfg.clamp`.
/// Valve vertices never move.
pub fn deform_in_field(m: &LabeledMesh, fields: &TargetFields, cfg: &FitConfig) -> Result<(LabeledMesh, FitLog)> {
    cfg.validate()?;
    for t in SurfaceTarget::FIT_ORDER {
        if cfg.is_enabled(t) && fields.descent(t).is_none() {
            return Err(Error::MissingField(t.name()));
        }
    }
    let mut verts = m.vertices().to_vec();
    let mut log = FitLog::default();
    let has_distances = SurfaceTarget::FIT_ORDER
        .iter()
        .all(|t| !cfg.is_enabled(*t) || fields.distance(*t).is_some());
    let trace = |verts: &[Vec3], log: &mut FitLog| -> Result<()> {
        if has_distances {
            let d = mean_distance(verts, m.labels(), fields, cfg)?;
            log::debug!("fit iteration {}: mean |d| = {d:.4} mm", log.mean_distance.len());
            log.mean_distance.push(d);
        }
        Ok(())
    };
    for _ in 0..cfg.iterations {
        trace(&verts, &mut log)?;
        for t in SurfaceTarget::FIT_ORDER {
            if !cfg.is_enabled(t) {
                continue;
            }
            let field = fields.descent(t).expect("checked above");
            let want = VertexLabel::of_target(t);
            for (v, l) in verts.iter_mut().zip(m.labels()) {
                if *l != want {
                    continue;
                }
                let mut step = sample_trilinear(field, &fields.ndc, *v)?;
                let n = step.norm();
                if n > cfg.clamp {
                    step *= cfg.clamp / n;
                }
                *v += step;
            }
        }
    }
    trace(&verts, &mut log)?;
    Ok((m.with_vertices(verts), log))
}
