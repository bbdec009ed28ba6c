use std::fmt;

use super::edt::{boundary_distance, DistanceMap};
use super::field::gradient_field;
use super::grid::{Label, LabelVolume, Mask, NdcMap, VectorField};

/// One of the four surfaces a template is fitted against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SurfaceTarget {
    LvEndo,
    RvEndo,
    LvEpi,
    RvEpi,
}

impl SurfaceTarget {
    /// Deformation order used by the fit: LV-epi, LV-endo, RV-endo, RV-epi.
    pub const FIT_ORDER: [SurfaceTarget; 4] = [
        SurfaceTarget::LvEpi,
        SurfaceTarget::LvEndo,
        SurfaceTarget::RvEndo,
        SurfaceTarget::RvEpi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SurfaceTarget::LvEndo => "lv_endo",
            SurfaceTarget::RvEndo => "rv_endo",
            SurfaceTarget::LvEpi => "lv_epi",
            SurfaceTarget::RvEpi => "rv_epi",
        }
    }

    /// Labels whose union forms the region bounded by this surface.
    pub fn region_labels(self) -> &'static [Label] {
        match self {
            SurfaceTarget::LvEndo => &[Label::Lv],
            SurfaceTarget::RvEndo => &[Label::Rv],
            SurfaceTarget::LvEpi => &[Label::Lv, Label::Myo],
            SurfaceTarget::RvEpi => &[Label::Lv, Label::Rv, Label::Myo],
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for SurfaceTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Foreground region of a surface target.
pub fn surface_mask(v: &LabelVolume, target: SurfaceTarget) -> Mask {
    let labels = target.region_labels();
    v.map(|l| labels.contains(l))
}

/// Distance maps and descent fields for every surface target of a volume.
#[derive(Debug, Clone)]
pub struct TargetFields {
    pub ndc: NdcMap,
    pub distances: Vec<(SurfaceTarget, DistanceMap)>,
    pub descent: Vec<(SurfaceTarget, VectorField)>,
}

impl TargetFields {
    pub fn build(v: &LabelVolume, ndc: &NdcMap) -> Self {
        Self::build_for(v, ndc, &SurfaceTarget::FIT_ORDER)
    }

    pub fn build_for(v: &LabelVolume, ndc: &NdcMap, targets: &[SurfaceTarget]) -> Self {
        let mut distances = Vec::new();
        let mut descent = Vec::new();
        for &t in targets {
            let d = boundary_distance(&surface_mask(v, t));
            if d.degenerate.is_some() {
                log::warn!("surface {t} has a degenerate mask");
            }
            descent.push((t, gradient_field(&d.field, ndc)));
            distances.push((t, d));
        }
        TargetFields {
            ndc: *ndc,
            distances,
            descent,
        }
    }

    pub fn descent(&self, t: SurfaceTarget) -> Option<&VectorField> {
        self.descent.iter().find(|(s, _)| *s == t).map(|(_, f)| f)
    }

    pub fn distance(&self, t: SurfaceTarget) -> Option<&DistanceMap> {
        self.distances.iter().find(|(s, _)| *s == t).map(|(_, f)| f)
    }
}
