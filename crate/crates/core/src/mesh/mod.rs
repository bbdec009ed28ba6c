//! Labeled triangle meshes in normalized device coordinates.

pub mod io;
pub mod smooth;
pub mod subdivide;
pub mod topology;
pub mod voxelize;

use std::fmt;

use crate::volume::SurfaceTarget;
use crate::{Error, Result, Vec3};

pub use io::{load_mesh, save_mesh, save_obj};
pub use smooth::laplacian_filter;
pub use subdivide::{loop_subdivide, midpoint_subdivide, SubdivisionMap, SubdivisionPlan};
pub use topology::{build_edges, Adjacency, EdgeTable};
pub use voxelize::{voxelize, voxelize_labels, Region};

/// Vertices must stay inside this cube (NDC plus deformation slack).
pub const NDC_SLACK: f64 = 1.5;

/// Anatomical vertex label, with the PLY `anat_label` codes as discriminants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum VertexLabel {
    LvEndo = 0,
    RvEndo = 1,
    LvEpi = 2,
    RvEpi = 3,
    Valve = 4,
}

impl VertexLabel {
    pub const ALL: [VertexLabel; 5] = [
        VertexLabel::LvEndo,
        VertexLabel::RvEndo,
        VertexLabel::LvEpi,
        VertexLabel::RvEpi,
        VertexLabel::Valve,
    ];

    pub fn from_u8(v: u8) -> Option<Self> {
        VertexLabel::ALL.get(v as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            VertexLabel::LvEndo => "lv_endo",
            VertexLabel::RvEndo => "rv_endo",
            VertexLabel::LvEpi => "lv_epi",
            VertexLabel::RvEpi => "rv_epi",
            VertexLabel::Valve => "valve",
        }
    }

    /// The fitted surface carrying this label; valve vertices have none.
    pub fn target(self) -> Option<SurfaceTarget> {
        match self {
            VertexLabel::LvEndo => Some(SurfaceTarget::LvEndo),
            VertexLabel::RvEndo => Some(SurfaceTarget::RvEndo),
            VertexLabel::LvEpi => Some(SurfaceTarget::LvEpi),
            VertexLabel::RvEpi => Some(SurfaceTarget::RvEpi),
            VertexLabel::Valve => None,
        }
    }

    pub fn of_target(t: SurfaceTarget) -> Self {
        match t {
            SurfaceTarget::LvEndo => VertexLabel::LvEndo,
            SurfaceTarget::RvEndo => VertexLabel::RvEndo,
            SurfaceTarget::LvEpi => VertexLabel::LvEpi,
            SurfaceTarget::RvEpi => VertexLabel::RvEpi,
        }
    }

    fn priority(self) -> u8 {
        match self {
            VertexLabel::Valve => 4,
            VertexLabel::LvEpi => 3,
            VertexLabel::RvEpi => 2,
            VertexLabel::LvEndo => 1,
            VertexLabel::RvEndo => 0,
        }
    }

    /// Label of a vertex inserted on the edge between `a` and `b`: shared
    /// labels are inherited, otherwise valve > LV-epi > RV-epi > LV-endo >
    /// RV-endo.
    pub fn merge(a: VertexLabel, b: VertexLabel) -> VertexLabel {
        if a.priority() >= b.priority() {
            a
        } else {
            b
        }
    }
}

impl fmt::Display for VertexLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Triangle mesh with one anatomical label per vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledMesh {
    vertices: Vec<Vec3>,
    faces: Vec<[u32; 3]>,
    labels: Vec<VertexLabel>,
}

impl LabeledMesh {
    /// Builds a mesh and checks every structural invariant.
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[u32; 3]>, labels: Vec<VertexLabel>) -> Result<Self> {
        let m = LabeledMesh {
            vertices,
            faces,
            labels,
        };
        m.validate()?;
        Ok(m)
    }

    /// Builds a mesh whose topology is known to be valid.
    pub(crate) fn from_parts(vertices: Vec<Vec3>, faces: Vec<[u32; 3]>, labels: Vec<VertexLabel>) -> Self {
        debug_assert_eq!(vertices.len(), labels.len());
        LabeledMesh {
            vertices,
            faces,
            labels,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.vertices.len();
        if self.labels.len() != n {
            return Err(Error::InvalidMesh(format!(
                "{} labels for {n} vertices",
                self.labels.len()
            )));
        }
        let mut used = vec![false; n];
        for (fi, f) in self.faces.iter().enumerate() {
            for &i in f {
                if i as usize >= n {
                    return Err(Error::InvalidMesh(format!(
                        "face {fi} references vertex {i} of {n}"
                    )));
                }
                used[i as usize] = true;
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::InvalidMesh(format!("face {fi} repeats a vertex: {f:?}")));
            }
        }
        if let Some(i) = used.iter().position(|u| !u) {
            return Err(Error::InvalidMesh(format!("vertex {i} is not referenced by any face")));
        }
        for (i, v) in self.vertices.iter().enumerate() {
            if !v.iter().all(|c| c.is_finite() && c.abs() <= NDC_SLACK) {
                return Err(Error::InvalidMesh(format!("vertex {i} at {v:?} leaves the NDC cube")));
            }
        }
        Ok(())
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn vertices_mut(&mut self) -> &mut [Vec3] {
        &mut self.vertices
    }

    pub fn faces(&self) -> &[[u32; 3]] {
        &self.faces
    }

    pub fn labels(&self) -> &[VertexLabel] {
        &self.labels
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    /// Same topology and labels with new vertex positions.
    pub fn with_vertices(&self, vertices: Vec<Vec3>) -> LabeledMesh {
        assert_eq!(vertices.len(), self.vertices.len(), "vertex count must not change");
        LabeledMesh {
            vertices,
            faces: self.faces.clone(),
            labels: self.labels.clone(),
        }
    }

    /// Applies `f` to every vertex position.
    pub fn map_vertices(&self, f: impl Fn(&Vec3) -> Vec3) -> LabeledMesh {
        self.with_vertices(self.vertices.iter().map(f).collect())
    }

    pub fn indices_with_label(&self, label: VertexLabel) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, l)| **l == label)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn triangle(&self, f: usize) -> [Vec3; 3] {
        let [a, b, c] = self.faces[f];
        [
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        ]
    }

    pub fn centroid(&self) -> Vec3 {
        self.vertices.iter().sum::<Vec3>() / self.vertices.len().max(1) as f64
    }

    /// Total surface area.
    pub fn area(&self) -> f64 {
        (0..self.faces.len())
            .map(|f| {
                let [a, b, c] = self.triangle(f);
                0.5 * (b - a).cross(&(c - a)).norm()
            })
            .sum()
    }

    /// Connected components over shared vertices; one id per vertex.
    pub fn components(&self) -> (usize, Vec<usize>) {
        let n = self.vertices.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut i: usize) -> usize {
            while p[i] != i {
                p[i] = p[p[i]];
                i = p[i];
            }
            i
        }
        for f in &self.faces {
            let a = find(&mut parent, f[0] as usize);
            for &v in &f[1..] {
                let b = find(&mut parent, v as usize);
                if a != b {
                    parent[b] = a;
                }
            }
        }
        let mut ids = vec![usize::MAX; n];
        let mut roots = Vec::new();
        let mut out = vec![0; n];
        for i in 0..n {
            let r = find(&mut parent, i);
            if ids[r] == usize::MAX {
                ids[r] = roots.len();
                roots.push(r);
            }
            out[i] = ids[r];
        }
        (roots.len(), out)
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn tetrahedron() -> LabeledMesh {
        let s = 0.5;
        LabeledMesh::new(
            vec![
                Vec3::new(s, s, s),
                Vec3::new(s, -s, -s),
                Vec3::new(-s, s, -s),
                Vec3::new(-s, -s, s),
            ],
            vec![[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]],
            vec![VertexLabel::LvEpi; 4],
        )
        .unwrap()
    }

    pub fn triangle() -> LabeledMesh {
        LabeledMesh::new(
            vec![Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0)],
            vec![[0, 1, 2]],
            vec![VertexLabel::LvEndo, VertexLabel::LvEpi, VertexLabel::Valve],
        )
        .unwrap()
    }

    /// Regular hexagon fan of radius `r` around the origin in the XY plane.
    pub fn hexagon(r: f64) -> LabeledMesh {
        let mut v = vec![Vec3::zeros()];
        for k in 0..6 {
            let a = std::f64::consts::PI / 3.0 * k as f64;
            v.push(Vec3::new(r * a.cos(), r * a.sin(), 0.0));
        }
        let faces = (0..6).map(|k| [0, 1 + k as u32, 1 + ((k + 1) % 6) as u32]).collect();
        LabeledMesh::new(v, faces, vec![VertexLabel::LvEndo; 7]).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn merge_priority() {
        use VertexLabel::*;
        assert_eq!(VertexLabel::merge(LvEndo, LvEndo), LvEndo);
        assert_eq!(VertexLabel::merge(LvEndo, Valve), Valve);
        assert_eq!(VertexLabel::merge(RvEpi, LvEpi), LvEpi);
        assert_eq!(VertexLabel::merge(RvEndo, RvEpi), RvEpi);
        assert_eq!(VertexLabel::merge(RvEndo, LvEndo), LvEndo);
    }

    #[test]
    fn validation_catches_bad_meshes() {
        let v = vec![Vec3::zeros(), Vec3::x(), Vec3::y()];
        let l = vec![VertexLabel::LvEndo; 3];
        assert!(LabeledMesh::new(v.clone(), vec![[0, 1, 3]], l.clone()).is_err());
        assert!(LabeledMesh::new(v.clone(), vec![[0, 1, 1]], l.clone()).is_err());
        assert!(LabeledMesh::new(v.clone(), vec![[0, 1, 2]], l[..2].to_vec()).is_err());
        let mut far = v.clone();
        far[2] = Vec3::new(0.0, 2.0, 0.0);
        assert!(LabeledMesh::new(far, vec![[0, 1, 2]], l.clone()).is_err());
        let mut extra = v;
        extra.push(Vec3::z());
        let mut l4 = l;
        l4.push(VertexLabel::Valve);
        assert!(LabeledMesh::new(extra, vec![[0, 1, 2]], l4).is_err());
    }

    #[test]
    fn components_and_area() {
        let t = tetrahedron();
        assert_eq!(t.components().0, 1);
        let h = hexagon(1.0);
        assert!((h.area() - 3.0 * 3f64.sqrt() / 2.0).abs() < 1e-12);
    }
}
