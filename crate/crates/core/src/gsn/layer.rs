//! One GSN layer: midpoint subdivision followed by a degree-normalized,
//! MLP-parameterized neighbour-difference update.

use super::mlp::{GsnStack, MlpParams};
use crate::mesh::{EdgeTable, LabeledMesh, SubdivisionPlan};
use crate::{Error, Result, Vec3};

/// Everything about one layer that does not depend on vertex positions.
#[derive(Debug, Clone)]
pub struct LayerTopology {
    pub plan: SubdivisionPlan,
    /// Undirected edges of the subdivided mesh.
    pub edges: Vec<[u32; 2]>,
    /// `1 / sqrt(deg(i) deg(j))` per edge.
    pub weights: Vec<f64>,
}

impl LayerTopology {
    pub fn new(m: &LabeledMesh) -> Result<Self> {
        let plan = SubdivisionPlan::new(m)?;
        let child = EdgeTable::from_faces(plan.child_vertices(), &plan.faces)?;
        let weights = child
            .edges
            .iter()
            .map(|&[i, j]| 1.0 / ((child.degree[i as usize] * child.degree[j as usize]) as f64).sqrt())
            .collect();
        Ok(LayerTopology {
            plan,
            edges: child.edges,
            weights,
        })
    }

    /// Topologies of `levels` successive layers starting from `m`.
    pub fn chain(m: &LabeledMesh, levels: usize) -> Result<Vec<Self>> {
        let mut out: Vec<LayerTopology> = Vec::with_capacity(levels);
        let mut cur = m.clone();
        for _ in 0..levels {
            let t = LayerTopology::new(&cur)?;
            cur = t.plan.mesh(t.plan.midpoints(cur.vertices()));
            out.push(t);
        }
        Ok(out)
    }

    /// Midpoints plus the learned update.
    pub fn apply(&self, parent: &[Vec3], theta: &MlpParams) -> (Vec<Vec3>, Vec<Vec3>) {
        let mid = self.plan.midpoints(parent);
        let mut out = mid.clone();
        for (&[i, j], &w) in self.edges.iter().zip(&self.weights) {
            let (i, j) = (i as usize, j as usize);
            let d = mid[j] - mid[i];
            out[i] += theta.forward(&d) * w;
            out[j] += theta.forward(&-d) * w;
        }
        (mid, out)
    }

    /// Given `∂L/∂out`, accumulates parameter gradients into `grad` and
    /// returns `∂L/∂parent`.
    pub fn backward(
        &self,
        mid: &[Vec3],
        theta: &MlpParams,
        d_out: &[Vec3],
        grad: &mut MlpParams,
        level: usize,
    ) -> Result<Vec<Vec3>> {
        let mut d_mid = d_out.to_vec();
        for (&[i, j], &w) in self.edges.iter().zip(&self.weights) {
            let (i, j) = (i as usize, j as usize);
            let d = mid[j] - mid[i];
            for (src, dst, x) in [(i, j, d), (j, i, -d)] {
                // out[src] += w h(mid[dst] - mid[src])
                let (_, act) = theta.forward_recorded(&x);
                let dx = theta.backward(&act, &(d_out[src] * w), grad);
                d_mid[dst] += dx;
                d_mid[src] -= dx;
            }
        }
        let n = self.plan.parent_vertices;
        let mut d_parent = d_mid[..n].to_vec();
        for (k, &[a, b]) in self.plan.parent_edges.edges.iter().enumerate() {
            let g = d_mid[n + k] * 0.5;
            d_parent[a as usize] += g;
            d_parent[b as usize] += g;
        }
        if let Some(i) = d_parent.iter().position(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(Error::NonFinite {
                stage: "backward",
                layer: level,
                index: i,
            });
        }
        Ok(d_parent)
    }
}

/// One subdivision-and-update step.
pub fn gsn_layer(m: &LabeledMesh, theta: &MlpParams) -> Result<LabeledMesh> {
    let t = LayerTopology::new(m)?;
    let (_, out) = t.apply(m.vertices(), theta);
    Ok(t.plan.mesh(out))
}

/// Positions recorded by a forward pass through both layers.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    pub input: Vec<Vec3>,
    pub mids: Vec<Vec<Vec3>>,
    pub outputs: Vec<Vec<Vec3>>,
}

pub fn forward_positions(topo: &[LayerTopology], input: &[Vec3], stack: &GsnStack) -> Result<ForwardPass> {
    let mut mids = Vec::new();
    let mut outputs: Vec<Vec<Vec3>> = Vec::new();
    for (l, t) in topo.iter().enumerate() {
        let parent = outputs.last().map(|v| v.as_slice()).unwrap_or(input);
        let (mid, out) = t.apply(parent, &stack.layers[l]);
        if let Some(i) = out.iter().position(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(Error::NonFinite {
                stage: "forward",
                layer: l + 1,
                index: i,
            });
        }
        mids.push(mid);
        outputs.push(out);
    }
    Ok(ForwardPass {
        input: input.to_vec(),
        mids,
        outputs,
    })
}

/// Both emitted meshes: after the first and after the second layer.
pub fn gsn_forward(m: &LabeledMesh, stack: &GsnStack) -> Result<Vec<LabeledMesh>> {
    let topo = LayerTopology::chain(m, stack.layers.len())?;
    let pass = forward_positions(&topo, m.vertices(), stack)?;
    Ok(topo
        .iter()
        .zip(pass.outputs)
        .map(|(t, v)| t.plan.mesh(v))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::fixtures::*;
    use crate::mesh::midpoint_subdivide;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_theta_is_midpoint_subdivision() {
        let t = tetrahedron();
        let out = gsn_layer(&t, &MlpParams::zeros()).unwrap();
        assert_eq!(out, midpoint_subdivide(&t).unwrap().0);
        let both = gsn_forward(&t, &GsnStack::zeros()).unwrap();
        assert_eq!((both[0].num_vertices(), both[0].num_faces()), (10, 16));
        assert_eq!((both[1].num_vertices(), both[1].num_faces()), (34, 64));
        assert_eq!(both[1], midpoint_subdivide(&both[0]).unwrap().0);
    }

    #[test]
    fn identity_theta_on_triangle_by_hand() {
        let mut p = MlpParams::zeros();
        // h(x) = relu(x) - relu(-x) = x
        for i in 0..3 {
            p.w1[(i, i)] = 1.0;
            p.w1[(i + 3, i)] = -1.0;
            p.w2[(i, i)] = 1.0;
            p.w2[(i + 3, i + 3)] = 1.0;
            p.w3[(i, i)] = 1.0;
            p.w3[(i, i + 3)] = -1.0;
        }
        let t = triangle();
        let out = gsn_layer(&t, &p).unwrap();
        let (mid, _) = midpoint_subdivide(&t).unwrap();
        let e = crate::mesh::build_edges(&mid).unwrap();
        let adj = e.adjacency();
        let v = mid.vertices();
        for i in 0..6 {
            let di = e.degree[i] as f64;
            let want: Vec3 = adj
                .neighbors(i)
                .iter()
                .map(|&j| (v[j as usize] - v[i]) / (di * e.degree[j as usize] as f64).sqrt())
                .sum();
            assert!((out.vertices()[i] - v[i] - want).norm() < 1e-15);
        }
        // corners have degree 2, midpoints degree 4
        assert_eq!(e.degree, vec![2, 2, 2, 4, 4, 4]);
    }

    #[test]
    fn translation_equivariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = MlpParams::random(&mut rng, 1.0);
        let t = tetrahedron();
        let shift = Vec3::new(0.3, -0.2, 0.1);
        let a = gsn_layer(&t, &p).unwrap();
        let b = gsn_layer(&t.map_vertices(|v| v + shift), &p).unwrap();
        for (x, y) in a.vertices().iter().zip(b.vertices()) {
            assert!((y - x - shift).norm() < 1e-9);
        }
    }

    #[test]
    fn composition_of_layers() {
        let s = GsnStack::init(9);
        let mut s2 = s.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        s2.layers[1] = MlpParams::random(&mut rng, 0.5);
        let t = tetrahedron();
        let both = gsn_forward(&t, &s2).unwrap();
        let one = gsn_layer(&t, &s2.layers[0]).unwrap();
        let two = gsn_layer(&one, &s2.layers[1]).unwrap();
        assert_eq!(both[0], one);
        assert_eq!(both[1], two);
    }
}
