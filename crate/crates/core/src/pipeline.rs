//! The five reconstruction schemes, from plain subdivision of the template
//! to field deformation followed by both learned layers.

use std::fmt;

use crate::fit::{deform_in_field, seg_rv_centroid, swing_align, FitConfig, FitLog, SwingRotation};
use crate::gsn::{gsn_forward, gsn_layer, Case, GsnStack, PointCloudSet, DEFAULT_MAX_POINTS};
use crate::mesh::{laplacian_filter, loop_subdivide, smooth::DEFAULT_LAMBDA, LabeledMesh};
use crate::metrics::timed;
use crate::volume::{LabelVolume, NdcMap, TargetFields};
use crate::{Error, Result};

/// Ablation scheme, numbered 1 to 5.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    /// Two Loop subdivisions of the unadjusted template.
    Loop = 1,
    /// Alignment and field deformation, then two Loop subdivisions.
    FitLoop = 2,
    /// Alignment and field deformation only.
    Fit = 3,
    /// Deformation then the first learned layer.
    FitGsn1 = 4,
    /// Deformation then both learned layers.
    FitGsn2 = 5,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [Scheme::Loop, Scheme::FitLoop, Scheme::Fit, Scheme::FitGsn1, Scheme::FitGsn2];

    pub fn from_id(id: u8) -> Result<Self> {
        Scheme::ALL
            .get((id as usize).wrapping_sub(1))
            .copied()
            .ok_or_else(|| Error::Config(format!("unknown scheme {id}; expected 1..=5")))
    }

    pub fn id(self) -> u8 {
        self as u8
    }

    pub fn needs_checkpoint(self) -> bool {
        matches!(self, Scheme::FitGsn1 | Scheme::FitGsn2)
    }

    pub fn fits(self) -> bool {
        self != Scheme::Loop
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.id())
    }
}

/// Post-filter passes applied to every scheme's output.
pub const SMOOTHING_ITERATIONS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub fit: FitConfig,
    /// Rotate the template about Z onto the volume's RV before deforming.
    pub align: bool,
    /// Run the field deformation; without it only alignment is applied.
    pub deform: bool,
    pub smoothing_lambda: f64,
    pub smoothing_iterations: usize,
    /// Cap on supervision points per surface for training cases.
    pub max_points: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            fit: FitConfig::default(),
            align: true,
            deform: true,
            smoothing_lambda: DEFAULT_LAMBDA,
            smoothing_iterations: SMOOTHING_ITERATIONS,
            max_points: DEFAULT_MAX_POINTS,
        }
    }
}

/// Template after alignment and deformation.
#[derive(Debug, Clone)]
pub struct Adjusted {
    pub mesh: LabeledMesh,
    pub swing: Option<SwingRotation>,
    pub log: FitLog,
}

/// Aligns and deforms `template` onto `v` in the volume's NDC frame.
pub fn adjust_template(template: &LabeledMesh, v: &LabelVolume, cfg: &PipelineConfig) -> Result<Adjusted> {
    let ndc = NdcMap::for_geometry(v.geometry());
    let (mesh, swing) = if cfg.align {
        let (m, r) = swing_align(template, &seg_rv_centroid(v, &ndc)?)?;
        (m, Some(r))
    } else {
        (template.clone(), None)
    };
    if !cfg.deform || cfg.fit.iterations == 0 {
        return Ok(Adjusted {
            mesh,
            swing,
            log: FitLog::default(),
        });
    }
    let fields = TargetFields::build(v, &ndc);
    let (mesh, log) = deform_in_field(&mesh, &fields, &cfg.fit)?;
    Ok(Adjusted { mesh, swing, log })
}

/// A training case for the learned layers: the adjusted template and the
/// volume's surface points.
pub fn training_case(template: &LabeledMesh, v: &LabelVolume, cfg: &PipelineConfig, seed: u64) -> Result<Case> {
    let adjusted = adjust_template(template, v, cfg)?;
    let ndc = NdcMap::for_geometry(v.geometry());
    let points = PointCloudSet::from_volume(v, &ndc, cfg.max_points, seed)?;
    Case::new(adjusted.mesh, points)
}

#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub mesh: LabeledMesh,
    pub adjusted: Option<Adjusted>,
    /// Wall time of the whole scheme including smoothing, seconds.
    pub seconds: f64,
}

/// Runs `scheme` on `v`. Learned schemes need `stack`.
pub fn reconstruct(
    v: &LabelVolume,
    template: &LabeledMesh,
    stack: Option<&GsnStack>,
    scheme: Scheme,
    cfg: &PipelineConfig,
) -> Result<Reconstruction> {
    if scheme.needs_checkpoint() && stack.is_none() {
        return Err(Error::Config(format!("scheme {scheme} needs a trained checkpoint")));
    }
    let (out, seconds) = timed(|| -> Result<(LabeledMesh, Option<Adjusted>)> {
        let adjusted = if scheme.fits() {
            Some(adjust_template(template, v, cfg)?)
        } else {
            None
        };
        let base = adjusted.as_ref().map(|a| &a.mesh).unwrap_or(template);
        let refined = match scheme {
            Scheme::Loop | Scheme::FitLoop => loop_subdivide(&loop_subdivide(base)?)?,
            Scheme::Fit => base.clone(),
            Scheme::FitGsn1 => gsn_layer(base, &stack.expect("checked").layers[0])?,
            Scheme::FitGsn2 => gsn_forward(base, stack.expect("checked"))?.pop().expect("two levels"),
        };
        let smoothed = laplacian_filter(&refined, cfg.smoothing_lambda, cfg.smoothing_iterations);
        Ok((smoothed, adjusted))
    });
    let (mesh, adjusted) = out?;
    Ok(Reconstruction {
        mesh,
        adjusted,
        seconds,
    })
}
