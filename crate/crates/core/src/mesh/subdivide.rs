//! 1-to-4 triangle subdivision.
//!
//! New vertices are appended after the originals in edge-table order, so the
//! parent mesh's vertices (and labels) are a prefix of the child mesh.

use super::topology::EdgeTable;
use super::{LabeledMesh, VertexLabel};
use crate::{Result, Vec3};

/// Provenance of the vertices created by one subdivision step.
#[derive(Debug, Clone, PartialEq)]
pub struct SubdivisionMap {
    /// Parent edge `(i, j)` of every new vertex, in append order.
    pub parents: Vec<[u32; 2]>,
    /// 1 for the first subdivision of a mesh, 2 for the second, ...
    pub level: usize,
}

/// Topology of one subdivision step, reusable across vertex positions.
#[derive(Debug, Clone)]
pub struct SubdivisionPlan {
    pub parent_vertices: usize,
    pub parent_edges: EdgeTable,
    pub faces: Vec<[u32; 3]>,
    pub labels: Vec<VertexLabel>,
}

impl SubdivisionPlan {
    pub fn new(m: &LabeledMesh) -> Result<Self> {
        let edges = EdgeTable::from_faces(m.num_vertices(), m.faces())?;
        edges.check_manifold()?;
        let n = m.num_vertices() as u32;
        let mut faces = Vec::with_capacity(4 * m.num_faces());
        for (f, fe) in m.faces().iter().zip(&edges.face_edges) {
            let [a, b, c] = *f;
            // midpoints of (a,b), (b,c), (c,a)
            let [ab, bc, ca] = fe.map(|e| n + e);
            faces.push([a, ab, ca]);
            faces.push([b, bc, ab]);
            faces.push([c, ca, bc]);
            faces.push([ab, bc, ca]);
        }
        let mut labels = m.labels().to_vec();
        labels.extend(
            edges
                .edges
                .iter()
                .map(|&[i, j]| VertexLabel::merge(m.labels()[i as usize], m.labels()[j as usize])),
        );
        Ok(SubdivisionPlan {
            parent_vertices: m.num_vertices(),
            parent_edges: edges,
            faces,
            labels,
        })
    }

    pub fn child_vertices(&self) -> usize {
        self.parent_vertices + self.parent_edges.len()
    }

    /// Parent positions followed by exact edge midpoints.
    pub fn midpoints(&self, parent: &[Vec3]) -> Vec<Vec3> {
        assert_eq!(parent.len(), self.parent_vertices);
        let mut out = Vec::with_capacity(self.child_vertices());
        out.extend_from_slice(parent);
        out.extend(
            self.parent_edges
                .edges
                .iter()
                .map(|&[i, j]| (parent[i as usize] + parent[j as usize]) * 0.5),
        );
        out
    }

    pub fn mesh(&self, vertices: Vec<Vec3>) -> LabeledMesh {
        assert_eq!(vertices.len(), self.child_vertices());
        LabeledMesh::from_parts(vertices, self.faces.clone(), self.labels.clone())
    }

    pub fn map(&self, level: usize) -> SubdivisionMap {
        SubdivisionMap {
            parents: self.parent_edges.edges.clone(),
            level,
        }
    }
}

/// Splits every face 1→4 with new vertices at the exact edge midpoints.
pub fn midpoint_subdivide(m: &LabeledMesh) -> Result<(LabeledMesh, SubdivisionMap)> {
    let plan = SubdivisionPlan::new(m)?;
    let mesh = plan.mesh(plan.midpoints(m.vertices()));
    Ok((mesh, plan.map(1)))
}

/// Warren's weight for a vertex of the given degree.
pub fn warren_alpha(degree: u32) -> f64 {
    if degree <= 3 {
        3.0 / 16.0
    } else {
        3.0 / (8.0 * degree as f64)
    }
}

/// Interpolating Loop-style subdivision: the topology of
/// [`midpoint_subdivide`], new vertices at midpoints, and every interior
/// original vertex moved to `v + α Σ (v_j − v)` over its original
/// neighbours. Boundary vertices stay put.
pub fn loop_subdivide(m: &LabeledMesh) -> Result<LabeledMesh> {
    let plan = SubdivisionPlan::new(m)?;
    let edges = &plan.parent_edges;
    let boundary = edges.boundary_vertices();
    let adj = edges.adjacency();
    let old = m.vertices();
    let moved: Vec<Vec3> = (0..old.len())
        .map(|i| {
            if boundary[i] {
                return old[i];
            }
            let alpha = warren_alpha(edges.degree[i]);
            let sum: Vec3 = adj.neighbors(i).iter().map(|&j| old[j as usize] - old[i]).sum();
            old[i] + alpha * sum
        })
        .collect();
    let mut verts = plan.midpoints(old);
    verts[..old.len()].copy_from_slice(&moved);
    Ok(plan.mesh(verts))
}
