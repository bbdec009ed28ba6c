use super::LabeledMesh;
use crate::{Error, Result};

/// Unique undirected edges of a triangle mesh, sorted lexicographically by
/// `(min, max)` vertex index.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeTable {
    pub edges: Vec<[u32; 2]>,
    /// Faces incident to each edge.
    pub edge_faces: Vec<Vec<u32>>,
    /// For each face, the edge index of (v0,v1), (v1,v2), (v2,v0).
    pub face_edges: Vec<[u32; 3]>,
    /// Number of distinct neighbours per vertex.
    pub degree: Vec<u32>,
}

impl EdgeTable {
    pub fn from_faces(num_vertices: usize, faces: &[[u32; 3]]) -> Result<Self> {
        let mut half: Vec<(u32, u32, u32, u8)> = Vec::with_capacity(faces.len() * 3);
        for (fi, f) in faces.iter().enumerate() {
            for slot in 0..3 {
                let (a, b) = (f[slot], f[(slot + 1) % 3]);
                if a as usize >= num_vertices || b as usize >= num_vertices {
                    return Err(Error::InvalidMesh(format!(
                        "face {fi} references a vertex outside 0..{num_vertices}"
                    )));
                }
                half.push((a.min(b), a.max(b), fi as u32, slot as u8));
            }
        }
        half.sort_unstable();
        let mut edges: Vec<[u32; 2]> = Vec::new();
        let mut edge_faces: Vec<Vec<u32>> = Vec::new();
        let mut face_edges = vec![[0u32; 3]; faces.len()];
        for &(a, b, fi, slot) in &half {
            if edges.last() != Some(&[a, b]) {
                edges.push([a, b]);
                edge_faces.push(Vec::with_capacity(2));
            }
            let e = edges.len() - 1;
            edge_faces[e].push(fi);
            face_edges[fi as usize][slot as usize] = e as u32;
        }
        let mut degree = vec![0u32; num_vertices];
        for &[a, b] in &edges {
            degree[a as usize] += 1;
            degree[b as usize] += 1;
        }
        Ok(EdgeTable {
            edges,
            edge_faces,
            face_edges,
            degree,
        })
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// First edge with more than two incident faces, if any.
    pub fn non_manifold_edge(&self) -> Option<usize> {
        self.edge_faces.iter().position(|f| f.len() > 2)
    }

    pub fn check_manifold(&self) -> Result<()> {
        match self.non_manifold_edge() {
            Some(e) => Err(Error::NonManifoldEdge(
                self.edges[e][0],
                self.edges[e][1],
                self.edge_faces[e].len(),
            )),
            None => Ok(()),
        }
    }

    /// Vertices lying on an edge with a single incident face.
    pub fn boundary_vertices(&self) -> Vec<bool> {
        let mut out = vec![false; self.degree.len()];
        for (e, faces) in self.edge_faces.iter().enumerate() {
            if faces.len() == 1 {
                let [a, b] = self.edges[e];
                out[a as usize] = true;
                out[b as usize] = true;
            }
        }
        out
    }

    pub fn adjacency(&self) -> Adjacency {
        Adjacency::from_edges(self.degree.len(), &self.edges)
    }
}

pub fn build_edges(m: &LabeledMesh) -> Result<EdgeTable> {
    EdgeTable::from_faces(m.num_vertices(), m.faces())
}

/// Compressed vertex neighbour lists.
#[derive(Debug, Clone, PartialEq)]
pub struct Adjacency {
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
}

impl Adjacency {
    pub fn from_edges(num_vertices: usize, edges: &[[u32; 2]]) -> Self {
        let mut counts = vec![0usize; num_vertices + 1];
        for &[a, b] in edges {
            counts[a as usize + 1] += 1;
            counts[b as usize + 1] += 1;
        }
        for i in 0..num_vertices {
            counts[i + 1] += counts[i];
        }
        let offsets = counts.clone();
        let mut fill = counts;
        let mut neighbors = vec![0u32; 2 * edges.len()];
        for &[a, b] in edges {
            neighbors[fill[a as usize]] = b;
            fill[a as usize] += 1;
            neighbors[fill[b as usize]] = a;
            fill[b as usize] += 1;
        }
        Adjacency { offsets, neighbors }
    }

    #[inline]
    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.neighbors[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::fixtures::*;

    #[test]
    fn triangle_edges() {
        let t = build_edges(&triangle()).unwrap();
        assert_eq!(t.edges, vec![[0, 1], [0, 2], [1, 2]]);
        assert_eq!(t.degree, vec![2, 2, 2]);
        assert!(t.boundary_vertices().iter().all(|&b| b));
        assert_eq!(t.face_edges[0], [0, 2, 1]);
    }

    #[test]
    fn tetrahedron_edges() {
        let t = build_edges(&tetrahedron()).unwrap();
        assert_eq!(t.len(), 6);
        assert!(t.degree.iter().all(|&d| d == 3));
        assert!(t.edge_faces.iter().all(|f| f.len() == 2));
        assert!(t.boundary_vertices().iter().all(|&b| !b));
        let adj = t.adjacency();
        let mut n0 = adj.neighbors(0).to_vec();
        n0.sort();
        assert_eq!(n0, vec![1, 2, 3]);
    }

    #[test]
    fn out_of_range_face() {
        assert!(EdgeTable::from_faces(3, &[[0, 1, 5]]).is_err());
    }

    #[test]
    fn triple_edge_detected() {
        let faces = [[0, 1, 2], [0, 1, 3], [1, 0, 4]];
        let t = EdgeTable::from_faces(5, &faces).unwrap();
        assert!(t.check_manifold().is_err());
    }
}
