//! Triangle cell quality and surface consistency.

use crate::mesh::{EdgeTable, LabeledMesh};
use crate::{Error, Result, Vec3};

/// Per-face values and their mean.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceStats {
    pub per_face: Vec<f64>,
    pub mean: f64,
}

impl FaceStats {
    fn new(per_face: Vec<f64>) -> Self {
        let mean = if per_face.is_empty() {
            0.0
        } else {
            per_face.iter().sum::<f64>() / per_face.len() as f64
        };
        FaceStats { per_face, mean }
    }
}

/// Longest edge over `2√3 ×` inradius; 1 for an equilateral triangle.
pub fn triangle_aspect_ratio(t: &[Vec3; 3]) -> Option<f64> {
    let l = [(t[1] - t[0]).norm(), (t[2] - t[1]).norm(), (t[0] - t[2]).norm()];
    let area = 0.5 * (t[1] - t[0]).cross(&(t[2] - t[0])).norm();
    let perimeter: f64 = l.iter().sum();
    let longest = l.iter().cloned().fold(0.0, f64::max);
    if !(area > 1e-14 * longest * longest) {
        return None;
    }
    let inradius = 2.0 * area / perimeter;
    Some(longest / (2.0 * 3f64.sqrt() * inradius))
}

/// `2/√3 ×` the smallest corner sine; 1 for an equilateral triangle, 0 for
/// collinear corners. `None` if an edge has zero length.
pub fn triangle_scaled_jacobian(t: &[Vec3; 3]) -> Option<f64> {
    let mut worst = f64::INFINITY;
    for k in 0..3 {
        let e1 = t[(k + 1) % 3] - t[k];
        let e2 = t[(k + 2) % 3] - t[k];
        let (n1, n2) = (e1.norm(), e2.norm());
        if n1 == 0.0 || n2 == 0.0 {
            return None;
        }
        worst = worst.min(e1.cross(&e2).norm() / (n1 * n2));
    }
    Some(2.0 / 3f64.sqrt() * worst)
}

pub fn aspect_ratio(m: &LabeledMesh) -> Result<FaceStats> {
    let per_face = (0..m.num_faces())
        .map(|f| {
            triangle_aspect_ratio(&m.triangle(f)).ok_or(Error::DegenerateFace {
                face: f,
                reason: "zero area",
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FaceStats::new(per_face))
}

/// Per-face scaled Jacobian. Collinear faces score 0 and are logged.
pub fn scaled_jacobian(m: &LabeledMesh) -> Result<FaceStats> {
    let mut flat = 0usize;
    let per_face = (0..m.num_faces())
        .map(|f| {
            let j = triangle_scaled_jacobian(&m.triangle(f)).ok_or(Error::DegenerateFace {
                face: f,
                reason: "zero-length edge",
            })?;
            if j == 0.0 {
                flat += 1;
            }
            Ok(j)
        })
        .collect::<Result<Vec<_>>>()?;
    if flat > 0 {
        log::warn!("{flat} faces have collinear corners");
    }
    Ok(FaceStats::new(per_face))
}

fn unit_normal(t: &[Vec3; 3]) -> Option<Vec3> {
    let n = (t[1] - t[0]).cross(&(t[2] - t[0]));
    let len = n.norm();
    (len > 0.0).then(|| n / len)
}

/// Mean dot product of the unit normals across interior edges. Boundary and
/// non-manifold edges, and edges next to zero-area faces, are skipped; a
/// mesh with no usable edge scores 1.
pub fn normal_consistency(m: &LabeledMesh) -> Result<f64> {
    let e = EdgeTable::from_faces(m.num_vertices(), m.faces())?;
    let normals: Vec<Option<Vec3>> = (0..m.num_faces()).map(|f| unit_normal(&m.triangle(f))).collect();
    let (mut sum, mut n) = (0.0, 0usize);
    for faces in &e.edge_faces {
        if let [a, b] = faces[..] {
            if let (Some(na), Some(nb)) = (normals[a as usize], normals[b as usize]) {
                sum += na.dot(&nb);
                n += 1;
            }
        }
    }
    Ok(if n == 0 { 1.0 } else { sum / n as f64 })
}

/// Fraction of faces touching an edge shared by more than two faces.
pub fn non_manifold_ratio(m: &LabeledMesh) -> Result<f64> {
    if m.num_faces() == 0 {
        return Ok(0.0);
    }
    let e = EdgeTable::from_faces(m.num_vertices(), m.faces())?;
    let bad = e
        .face_edges
        .iter()
        .filter(|fe| fe.iter().any(|&k| e.edge_faces[k as usize].len() > 2))
        .count();
    Ok(bad as f64 / m.num_faces() as f64)
}
