//! Synthetic acquisition artefacts: thick slices, in-plane slice shifts and
//! missing end slices.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::volume::{Geometry, Grid3, Label, LabelVolume};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DegradationSpec {
    /// Keep every n-th Z slice.
    pub slice_multiplier: usize,
    /// Upper bound on the in-plane shift of each kept slice.
    pub max_shift_mm: f64,
    /// Slices removed from the low-Z end after decimation.
    pub drop_apical: usize,
    /// Slices removed from the high-Z end after decimation.
    pub drop_basal: usize,
}

impl Default for DegradationSpec {
    fn default() -> Self {
        DegradationSpec {
            slice_multiplier: 1,
            max_shift_mm: 0.0,
            drop_apical: 0,
            drop_basal: 0,
        }
    }
}

impl DegradationSpec {
    pub fn validate(&self) -> Result<()> {
        if self.slice_multiplier == 0 {
            return Err(Error::Config("slice multiplier must be ≥ 1".into()));
        }
        if !(self.max_shift_mm >= 0.0 && self.max_shift_mm.is_finite()) {
            return Err(Error::Config(format!("max shift must be ≥ 0, got {}", self.max_shift_mm)));
        }
        Ok(())
    }
}

/// Applies `d` to `v`. Shifts are nearest-voxel translations with a
/// uniformly random direction and a length uniform in `[0, max_shift_mm]`;
/// uncovered voxels become background.
pub fn degrade(v: &LabelVolume, d: &DegradationSpec, seed: u64) -> Result<LabelVolume> {
    d.validate()?;
    let g = v.geometry();
    let [nx, ny, nz] = g.dims;
    let kept: Vec<usize> = (0..nz).step_by(d.slice_multiplier).collect();
    if kept.len() < d.drop_apical + d.drop_basal + 3 {
        return Err(Error::InvalidVolume(format!(
            "degradation leaves {} slices, need at least 3",
            kept.len().saturating_sub(d.drop_apical + d.drop_basal)
        )));
    }
    let kept = &kept[d.drop_apical..kept.len() - d.drop_basal];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shifts: Vec<(i64, i64)> = kept
        .iter()
        .map(|_| {
            let angle = rng.random_range(0.0..std::f64::consts::TAU);
            let r = d.max_shift_mm * rng.random::<f64>();
            (
                (r * angle.cos() / g.spacing[0]).round() as i64,
                (r * angle.sin() / g.spacing[1]).round() as i64,
            )
        })
        .collect();
    let sz = g.spacing[2] * d.slice_multiplier as f64;
    let oz = g.origin[2] + (kept[0] as f64) * g.spacing[2];
    let out_g = Geometry::new(
        [nx, ny, kept.len()],
        [g.spacing[0], g.spacing[1], sz],
        [g.origin[0], g.origin[1], oz],
    )?;
    Ok(Grid3::from_fn(out_g, |[x, y, z]| {
        let (dx, dy) = shifts[z];
        let (sx, sy) = (x as i64 - dx, y as i64 - dy);
        if sx < 0 || sy < 0 || sx >= nx as i64 || sy >= ny as i64 {
            Label::Background
        } else {
            *v.get(sx as usize, sy as usize, kept[z])
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phantom::{generate_phantom, PhantomSpec};

    fn phantom() -> LabelVolume {
        generate_phantom(&PhantomSpec {
            dims: [64, 64, 64],
            spacing_mm: 4.0,
            ..Default::default()
        })
        .unwrap()
        .0
    }

    #[test]
    fn identity_is_bit_identical() {
        let v = phantom();
        assert_eq!(degrade(&v, &DegradationSpec::default(), 9).unwrap(), v);
    }

    #[test]
    fn multiplier_five_keeps_26_of_128() {
        let g = Geometry::centered([4, 4, 128], [1.0; 3]).unwrap();
        let v = Grid3::filled(g, Label::Myo);
        let d = DegradationSpec {
            slice_multiplier: 5,
            ..Default::default()
        };
        let out = degrade(&v, &d, 0).unwrap();
        assert_eq!(out.dims()[2], 26);
        assert_eq!(out.spacing()[2], 5.0);
        let too_many = DegradationSpec {
            slice_multiplier: 100,
            ..Default::default()
        };
        assert!(degrade(&v, &too_many, 0).is_err());
    }

    #[test]
    fn drops_end_slices() {
        let g = Geometry::centered([2, 2, 10], [1.0; 3]).unwrap();
        let v = Grid3::from_fn(g, |[_, _, z]| if z % 2 == 0 { Label::Lv } else { Label::Rv });
        let d = DegradationSpec {
            drop_apical: 2,
            drop_basal: 3,
            ..Default::default()
        };
        let out = degrade(&v, &d, 0).unwrap();
        assert_eq!(out.dims()[2], 5);
        assert_eq!(*out.get(0, 0, 0), Label::Lv);
        assert_eq!(out.geometry().origin[2], g.origin[2] + 2.0);
    }

    #[test]
    fn labels_stay_valid() {
        let v = phantom();
        let d = DegradationSpec {
            slice_multiplier: 2,
            max_shift_mm: 10.0,
            drop_apical: 1,
            drop_basal: 1,
        };
        let out = degrade(&v, &d, 1).unwrap();
        let a = degrade(&v, &d, 1).unwrap();
        assert_eq!(out, a);
        assert!(out.data().iter().all(|l| Label::ALL.contains(l)));
    }
}
