//! Chamfer and cotangent-Laplacian losses.
//!
//! Both losses are evaluated through a [`LevelContext`] that freezes the
//! nearest-neighbour assignments and the cotangent weights at the positions
//! it was built from. Gradients are exact for that frozen function.

use super::pointcloud::PointCloudSet;
use crate::mesh::{LabeledMesh, VertexLabel};
use crate::spatial::KdTree;
use crate::volume::SurfaceTarget;
use crate::{Error, Result, Vec3};

/// Cotangents are clamped to this magnitude.
pub const COT_CLAMP: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    /// Chamfer weight.
    pub chamfer: f64,
    /// Laplacian weight.
    pub laplacian: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            chamfer: 0.56,
            laplacian: 0.12,
        }
    }
}

#[derive(Debug, Clone)]
struct LabelMatch {
    vertices: Vec<u32>,
    /// Nearest cloud point of each vertex.
    vertex_targets: Vec<Vec3>,
    points: Vec<Vec3>,
    /// Nearest vertex (mesh index) of each point.
    point_sources: Vec<u32>,
}

/// Frozen Chamfer assignments for one mesh.
#[derive(Debug, Clone)]
pub struct ChamferContext {
    labels: Vec<LabelMatch>,
}

impl ChamferContext {
    pub fn new(verts: &[Vec3], labels: &[VertexLabel], pc: &PointCloudSet) -> Self {
        let mut out = Vec::new();
        for t in SurfaceTarget::FIT_ORDER {
            let Some(tree) = pc.get(t) else { continue };
            let want = VertexLabel::of_target(t);
            let vertices: Vec<u32> = (0..verts.len() as u32)
                .filter(|&i| labels[i as usize] == want)
                .collect();
            if vertices.is_empty() {
                log::warn!("no vertices labeled {want}; skipping its Chamfer term");
                continue;
            }
            let vertex_targets = vertices
                .iter()
                .map(|&i| tree.points()[tree.nearest(&verts[i as usize]).expect("nonempty").0])
                .collect();
            let group: Vec<Vec3> = vertices.iter().map(|&i| verts[i as usize]).collect();
            let vtree = KdTree::new(&group);
            let points = tree.points().to_vec();
            let point_sources = points
                .iter()
                .map(|p| vertices[vtree.nearest(p).expect("nonempty").0])
                .collect();
            out.push(LabelMatch {
                vertices,
                vertex_targets,
                points,
                point_sources,
            });
        }
        ChamferContext { labels: out }
    }

    /// Loss and per-vertex gradient, accumulated into `grad` with `scale`.
    pub fn evaluate(&self, verts: &[Vec3], scale: f64, grad: &mut [Vec3]) -> f64 {
        let mut total = 0.0;
        for m in &self.labels {
            let nv = m.vertices.len() as f64;
            let np = m.points.len() as f64;
            let mut a = 0.0;
            for (&i, q) in m.vertices.iter().zip(&m.vertex_targets) {
                let d = verts[i as usize] - q;
                a += d.norm_squared();
                grad[i as usize] += d * (2.0 * scale / nv);
            }
            let mut b = 0.0;
            for (p, &i) in m.points.iter().zip(&m.point_sources) {
                let d = verts[i as usize] - p;
                b += d.norm_squared();
                grad[i as usize] += d * (2.0 * scale / np);
            }
            total += a / nv + b / np;
        }
        total
    }
}

/// Frozen cotangent weights and vertex areas of one mesh.
#[derive(Debug, Clone)]
pub struct LaplacianContext {
    /// `(i, j, cot a + cot b)` per undirected edge.
    edges: Vec<(u32, u32, f64)>,
    /// `1 / (4 A_i)`.
    inv_4a: Vec<f64>,
}

fn cot(u: Vec3, v: Vec3) -> f64 {
    let c = u.cross(&v).norm();
    (u.dot(&v) / c).clamp(-COT_CLAMP, COT_CLAMP)
}

impl LaplacianContext {
    pub fn new(verts: &[Vec3], faces: &[[u32; 3]]) -> Result<Self> {
        let mut area = vec![0.0; verts.len()];
        let mut half: Vec<(u32, u32, f64)> = Vec::with_capacity(3 * faces.len());
        for (fi, f) in faces.iter().enumerate() {
            let [a, b, c] = f.map(|i| verts[i as usize]);
            let ar = 0.5 * (b - a).cross(&(c - a)).norm();
            if !(ar > 0.0) {
                return Err(Error::DegenerateFace {
                    face: fi,
                    reason: "zero area",
                });
            }
            for &i in f {
                area[i as usize] += ar;
            }
            // the angle at each corner weighs the opposite edge
            for k in 0..3 {
                let (o, i, j) = (f[k], f[(k + 1) % 3], f[(k + 2) % 3]);
                let po = verts[o as usize];
                let w = cot(verts[i as usize] - po, verts[j as usize] - po);
                half.push((i.min(j), i.max(j), w));
            }
        }
        half.sort_by_key(|x| (x.0, x.1));
        let mut edges: Vec<(u32, u32, f64)> = Vec::new();
        for (i, j, w) in half {
            match edges.last_mut() {
                Some(e) if e.0 == i && e.1 == j => e.2 += w,
                _ => edges.push((i, j, w)),
            }
        }
        let inv_4a = area
            .iter()
            .map(|&a| if a > 0.0 { 0.25 / a } else { 0.0 })
            .collect();
        Ok(LaplacianContext { edges, inv_4a })
    }

    /// Per-vertex vectors `Σ_j w_ij (v_i − v_j) / (4 A_i)`.
    pub fn vectors(&self, verts: &[Vec3]) -> Vec<Vec3> {
        let mut l = vec![Vec3::zeros(); verts.len()];
        for &(i, j, w) in &self.edges {
            let (i, j) = (i as usize, j as usize);
            let d = verts[i] - verts[j];
            l[i] += d * (w * self.inv_4a[i]);
            l[j] -= d * (w * self.inv_4a[j]);
        }
        l
    }

    /// Mean vector norm, with its gradient accumulated into `grad`.
    pub fn evaluate(&self, verts: &[Vec3], scale: f64, grad: &mut [Vec3]) -> f64 {
        let l = self.vectors(verts);
        let n = verts.len() as f64;
        let u: Vec<Vec3> = l
            .iter()
            .map(|v| {
                let m = v.norm();
                if m > 0.0 {
                    v / m
                } else {
                    Vec3::zeros()
                }
            })
            .collect();
        for &(i, j, w) in &self.edges {
            let (i, j) = (i as usize, j as usize);
            // L_i has +c(v_i − v_j), L_j has +c'(v_j − v_i)
            let gi = u[i] * (w * self.inv_4a[i]) - u[j] * (w * self.inv_4a[j]);
            grad[i] += gi * (scale / n);
            grad[j] -= gi * (scale / n);
        }
        l.iter().map(|v| v.norm()).sum::<f64>() / n
    }
}

/// Frozen loss state of one emitted level.
#[derive(Debug, Clone)]
pub struct LevelContext {
    pub chamfer: ChamferContext,
    pub laplacian: LaplacianContext,
}

impl LevelContext {
    pub fn new(verts: &[Vec3], faces: &[[u32; 3]], labels: &[VertexLabel], pc: &PointCloudSet) -> Result<Self> {
        Ok(LevelContext {
            chamfer: ChamferContext::new(verts, labels, pc),
            laplacian: LaplacianContext::new(verts, faces)?,
        })
    }
}

/// Loss parts of one evaluation.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossParts {
    pub chamfer: f64,
    pub laplacian: f64,
    pub total: f64,
}

/// Frozen state for the mean over levels of the weighted loss.
#[derive(Debug, Clone)]
pub struct LossContext {
    pub levels: Vec<LevelContext>,
    pub weights: LossWeights,
}

impl LossContext {
    pub fn new(meshes: &[LabeledMesh], pc: &PointCloudSet, weights: LossWeights) -> Result<Self> {
        let levels = meshes
            .iter()
            .map(|m| LevelContext::new(m.vertices(), m.faces(), m.labels(), pc))
            .collect::<Result<_>>()?;
        Ok(LossContext { levels, weights })
    }

    /// Total loss and per-level vertex gradients.
    pub fn evaluate(&self, verts: &[&[Vec3]]) -> (LossParts, Vec<Vec<Vec3>>) {
        assert_eq!(verts.len(), self.levels.len());
        let k = self.levels.len() as f64;
        let mut parts = LossParts::default();
        let mut grads = Vec::with_capacity(verts.len());
        for (ctx, v) in self.levels.iter().zip(verts) {
            let mut g = vec![Vec3::zeros(); v.len()];
            let (wc, wl) = (self.weights.chamfer / k, self.weights.laplacian / k);
            let c = if wc != 0.0 { ctx.chamfer.evaluate(v, wc, &mut g) } else { 0.0 };
            let l = if wl != 0.0 { ctx.laplacian.evaluate(v, wl, &mut g) } else { 0.0 };
            parts.chamfer += c / k;
            parts.laplacian += l / k;
            parts.total += wc * c + wl * l;
            grads.push(g);
        }
        (parts, grads)
    }
}

/// Symmetric per-label Chamfer loss and its vertex gradient.
pub fn chamfer_loss(m: &LabeledMesh, pc: &PointCloudSet) -> (f64, Vec<Vec3>) {
    let ctx = ChamferContext::new(m.vertices(), m.labels(), pc);
    let mut g = vec![Vec3::zeros(); m.num_vertices()];
    let l = ctx.evaluate(m.vertices(), 1.0, &mut g);
    (l, g)
}

/// Mean norm of the cotangent Laplacian vectors and its gradient with the
/// weights held fixed.
pub fn laplacian_loss(m: &LabeledMesh) -> Result<(f64, Vec<Vec3>)> {
    let ctx = LaplacianContext::new(m.vertices(), m.faces())?;
    let mut g = vec![Vec3::zeros(); m.num_vertices()];
    let l = ctx.evaluate(m.vertices(), 1.0, &mut g);
    Ok((l, g))
}

/// Mean over `meshes` of `w.chamfer · chamfer + w.laplacian · laplacian`.
pub fn total_loss(meshes: &[LabeledMesh], pc: &PointCloudSet, w: LossWeights) -> Result<(LossParts, Vec<Vec<Vec3>>)> {
    let ctx = LossContext::new(meshes, pc, w)?;
    let v: Vec<&[Vec3]> = meshes.iter().map(|m| m.vertices()).collect();
    Ok(ctx.evaluate(&v))
}
