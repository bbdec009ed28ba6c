use super::topology::EdgeTable;
use super::LabeledMesh;
use crate::Vec3;

/// Default umbrella weight of the post-reconstruction smoothing filter.
pub const DEFAULT_LAMBDA: f64 = 0.13;

/// Uniform umbrella smoothing, `v ← v + λ (mean(neighbours) − v)`, repeated
/// `iterations` times. Boundary vertices are held fixed; topology and labels
/// are untouched.
pub fn laplacian_filter(m: &LabeledMesh, lambda: f64, iterations: usize) -> LabeledMesh {
    if iterations == 0 {
        return m.clone();
    }
    let edges = EdgeTable::from_faces(m.num_vertices(), m.faces()).expect("validated mesh");
    let boundary = edges.boundary_vertices();
    let adj = edges.adjacency();
    let mut cur = m.vertices().to_vec();
    let mut next = cur.clone();
    for _ in 0..iterations {
        for i in 0..cur.len() {
            let nb = adj.neighbors(i);
            if boundary[i] || nb.is_empty() {
                next[i] = cur[i];
                continue;
            }
            let mean: Vec3 = nb.iter().map(|&j| cur[j as usize]).sum::<Vec3>() / nb.len() as f64;
            next[i] = cur[i] + lambda * (mean - cur[i]);
        }
        std::mem::swap(&mut cur, &mut next);
    }
    m.with_vertices(cur)
}
