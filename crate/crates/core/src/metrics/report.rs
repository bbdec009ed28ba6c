//! Per-case metric reports and batch tables.

use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::overlap::{dice, hausdorff};
use super::quality::{aspect_ratio, non_manifold_ratio, normal_consistency, scaled_jacobian};
use super::surface::{asd, ASD_SAMPLES};
use crate::mesh::{voxelize_labels, LabeledMesh};
use crate::volume::{Label, LabelVolume, NdcMap};
use crate::Result;

/// Value and wall time of `op`, on a monotonic clock.
pub fn timed<T>(op: impl FnOnce() -> T) -> (T, f64) {
    let t = Instant::now();
    let out = op();
    (out, t.elapsed().as_secs_f64())
}

/// One value per heart label plus their mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerLabel {
    pub lv: f64,
    pub rv: f64,
    pub myo: f64,
    pub mean: f64,
}

impl PerLabel {
    fn new(lv: f64, rv: f64, myo: f64) -> Self {
        PerLabel {
            lv,
            rv,
            myo,
            mean: (lv + rv + myo) / 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub case_id: String,
    pub dice: PerLabel,
    /// Exact symmetric Hausdorff distance, voxels.
    pub hausdorff: PerLabel,
    /// 95th-percentile Hausdorff distance, voxels.
    pub hausdorff95: PerLabel,
    /// Average surface distance, mm.
    pub asd_mm: f64,
    pub aspect_ratio: f64,
    pub scaled_jacobian: f64,
    pub normal_consistency: f64,
    pub non_manifold_ratio: f64,
    pub inference_seconds: f64,
    pub vertices: usize,
    pub faces: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    pub asd_samples: usize,
    pub seed: u64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            asd_samples: ASD_SAMPLES,
            seed: 0,
        }
    }
}

/// Scores `m` against `gt`. A label missing from either side gets Dice 0
/// and, for the distances, the grid diagonal in voxels.
pub fn evaluate(
    case_id: &str,
    m: &LabeledMesh,
    gt: &LabelVolume,
    inference_seconds: f64,
    opts: &EvalOptions,
) -> Result<MetricsReport> {
    let g = *gt.geometry();
    let ndc = NdcMap::for_geometry(&g);
    let pred = voxelize_labels(m, &g, &ndc)?;
    let worst = g.dims.iter().map(|&n| (n * n) as f64).sum::<f64>().sqrt();
    let mut d = [0.0; 3];
    let mut h = [0.0; 3];
    let mut h95 = [0.0; 3];
    for (k, l) in [Label::Lv, Label::Rv, Label::Myo].into_iter().enumerate() {
        let a = pred.map(|x| *x == l);
        let b = gt.map(|x| *x == l);
        d[k] = dice(&a, &b)?;
        match hausdorff(&a, &b) {
            Ok(hd) => {
                h[k] = hd.max;
                h95[k] = hd.p95;
            }
            Err(_) => {
                log::warn!("{case_id}: {} missing, Hausdorff set to {worst:.1}", l.name());
                h[k] = worst;
                h95[k] = worst;
            }
        }
    }
    Ok(MetricsReport {
        case_id: case_id.to_string(),
        dice: PerLabel::new(d[0], d[1], d[2]),
        hausdorff: PerLabel::new(h[0], h[1], h[2]),
        hausdorff95: PerLabel::new(h95[0], h95[1], h95[2]),
        asd_mm: asd(m, gt, &ndc, opts.asd_samples, opts.seed)?,
        aspect_ratio: aspect_ratio(m)?.mean,
        scaled_jacobian: scaled_jacobian(m)?.mean,
        normal_consistency: normal_consistency(m)?,
        non_manifold_ratio: non_manifold_ratio(m)?,
        inference_seconds,
        vertices: m.num_vertices(),
        faces: m.num_faces(),
    })
}

pub const CSV_COLUMNS: [&str; 22] = [
    "case_id",
    "dice_lv",
    "dice_rv",
    "dice_myo",
    "dice_mean",
    "hd_lv",
    "hd_rv",
    "hd_myo",
    "hd_mean",
    "hd95_lv",
    "hd95_rv",
    "hd95_myo",
    "hd95_mean",
    "asd_mm",
    "aspect_ratio",
    "scaled_jacobian",
    "normal_consistency",
    "non_manifold_ratio",
    "inference_seconds",
    "vertices",
    "faces",
    "error",
];

impl MetricsReport {
    fn numbers(&self) -> [f64; 20] {
        let p = |x: &PerLabel| [x.lv, x.rv, x.myo, x.mean];
        let mut out = [0.0; 20];
        out[0..4].copy_from_slice(&p(&self.dice));
        out[4..8].copy_from_slice(&p(&self.hausdorff));
        out[8..12].copy_from_slice(&p(&self.hausdorff95));
        out[12] = self.asd_mm;
        out[13] = self.aspect_ratio;
        out[14] = self.scaled_jacobian;
        out[15] = self.normal_consistency;
        out[16] = self.non_manifold_ratio;
        out[17] = self.inference_seconds;
        out[18] = self.vertices as f64;
        out[19] = self.faces as f64;
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Outcome of one batch case: a report or the error that stopped it.
pub type CaseOutcome = std::result::Result<MetricsReport, (String, String)>;

/// Writes one row per case, then `mean` and `std` (sample) rows over the
/// successful cases. Failed cases keep their id and error message.
pub fn write_csv<W: Write>(out: W, cases: &[CaseOutcome]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    let mut rows = Vec::new();
    for c in cases {
        match c {
            Ok(r) => {
                let nums = r.numbers();
                let mut rec = vec![r.case_id.clone()];
                rec.extend(nums.iter().map(|v| v.to_string()));
                rec.push(String::new());
                w.write_record(&rec)?;
                rows.push(nums);
            }
            Err((id, e)) => {
                let mut rec = vec![id.clone()];
                rec.extend(std::iter::repeat_n(String::new(), 20));
                rec.push(e.clone());
                w.write_record(&rec)?;
            }
        }
    }
    if !rows.is_empty() {
        let n = rows.len() as f64;
        let mean: Vec<f64> = (0..20).map(|k| rows.iter().map(|r| r[k]).sum::<f64>() / n).collect();
        let std: Vec<f64> = (0..20)
            .map(|k| {
                if rows.len() < 2 {
                    return 0.0;
                }
                let ss: f64 = rows.iter().map(|r| (r[k] - mean[k]).powi(2)).sum();
                (ss / (n - 1.0)).sqrt()
            })
            .collect();
        for (name, vals) in [("mean", mean), ("std", std)] {
            let mut rec = vec![name.to_string()];
            rec.extend(vals.iter().map(|v| v.to_string()));
            rec.push(String::new());
            w.write_record(&rec)?;
        }
    }
    w.flush().map_err(|e| crate::Error::io("csv output", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(id: &str, dice: f64) -> MetricsReport {
        MetricsReport {
            case_id: id.into(),
            dice: PerLabel::new(dice, dice, dice),
            hausdorff: PerLabel::new(1.0, 2.0, 3.0),
            hausdorff95: PerLabel::new(1.0, 1.0, 1.0),
            asd_mm: 0.5,
            aspect_ratio: 1.2,
            scaled_jacobian: 0.8,
            normal_consistency: 0.9,
            non_manifold_ratio: 0.0,
            inference_seconds: 0.1,
            vertices: 10,
            faces: 16,
        }
    }

    #[test]
    fn footer_is_mean_and_std() {
        let cases = vec![Ok(report("a", 0.8)), Err(("b".into(), "boom".into())), Ok(report("c", 0.6))];
        let mut buf = Vec::new();
        write_csv(&mut buf, &cases).unwrap();
        let mut r = csv::Reader::from_reader(&buf[..]);
        let rows: Vec<csv::StringRecord> = r.records().map(|x| x.unwrap()).collect();
        assert_eq!(rows.len(), 5);
        assert_eq!(&rows[1][21], "boom");
        assert_eq!(&rows[3][0], "mean");
        assert!((rows[3][1].parse::<f64>().unwrap() - 0.7).abs() < 1e-12);
        let sd = rows[4][1].parse::<f64>().unwrap();
        assert!((sd - (0.02f64).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn empty_batch_has_header_only() {
        let mut buf = Vec::new();
        write_csv(&mut buf, &[]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1);
    }

    #[test]
    fn json_roundtrip() {
        let r = report("x", 0.9);
        let back: MetricsReport = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn timing_is_non_negative() {
        let ((), t) = timed(|| ());
        assert!((0.0..0.001).contains(&t));
    }
}
