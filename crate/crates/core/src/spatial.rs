//! Nearest-point and nearest-triangle queries.

use crate::Vec3;

/// Static 3-d tree over a point set.
#[derive(Debug, Clone)]
pub struct KdTree {
    points: Vec<Vec3>,
    // implicit tree: a range order[lo..hi] splits at its middle element
    order: Vec<u32>,
}

const LEAF: usize = 8;

impl KdTree {
    pub fn new(points: &[Vec3]) -> Self {
        let mut order: Vec<u32> = (0..points.len() as u32).collect();
        build(points, &mut order, 0);
        KdTree {
            points: points.to_vec(),
            order,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    /// Index and squared distance of the point closest to `q`. Ties go to
    /// the lowest index.
    pub fn nearest(&self, q: &Vec3) -> Option<(usize, f64)> {
        if self.points.is_empty() {
            return None;
        }
        let mut best = (usize::MAX, f64::INFINITY);
        self.search(q, 0, self.order.len(), 0, &mut best);
        Some(best)
    }

    fn search(&self, q: &Vec3, lo: usize, hi: usize, depth: usize, best: &mut (usize, f64)) {
        if hi - lo <= LEAF {
            for &i in &self.order[lo..hi] {
                let d = (self.points[i as usize] - q).norm_squared();
                if d < best.1 || (d == best.1 && (i as usize) < best.0) {
                    *best = (i as usize, d);
                }
            }
            return;
        }
        let axis = depth % 3;
        let mid = (lo + hi) / 2;
        let pivot = self.order[mid] as usize;
        let d = (self.points[pivot] - q).norm_squared();
        if d < best.1 || (d == best.1 && pivot < best.0) {
            *best = (pivot, d);
        }
        let diff = q[axis] - self.points[pivot][axis];
        let (near, far) = if diff < 0.0 {
            ((lo, mid), (mid + 1, hi))
        } else {
            ((mid + 1, hi), (lo, mid))
        };
        self.search(q, near.0, near.1, depth + 1, best);
        if diff * diff <= best.1 {
            self.search(q, far.0, far.1, depth + 1, best);
        }
    }
}

fn build(points: &[Vec3], order: &mut [u32], depth: usize) {
    if order.len() <= LEAF {
        return;
    }
    let axis = depth % 3;
    let mid = order.len() / 2;
    order.select_nth_unstable_by(mid, |&a, &b| {
        points[a as usize][axis]
            .total_cmp(&points[b as usize][axis])
            .then(a.cmp(&b))
    });
    let (left, right) = order.split_at_mut(mid);
    build(points, left, depth + 1);
    build(points, &mut right[1..], depth + 1);
}

/// Closest point to `p` on triangle `(a, b, c)`.
pub fn closest_point_on_triangle(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> Vec3 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return a + ab * (d1 / (d1 - d3));
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return a + ac * (d2 / (d2 - d6));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
    }
    let denom = 1.0 / (va + vb + vc);
    a + ab * (vb * denom) + ac * (vc * denom)
}

pub fn point_triangle_distance(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    (closest_point_on_triangle(p, a, b, c) - p).norm()
}

#[derive(Debug, Clone, Copy)]
struct Aabb {
    lo: Vec3,
    hi: Vec3,
}

impl Aabb {
    fn empty() -> Self {
        Aabb {
            lo: Vec3::repeat(f64::INFINITY),
            hi: Vec3::repeat(f64::NEG_INFINITY),
        }
    }

    fn grow(&mut self, p: &Vec3) {
        self.lo = self.lo.inf(p);
        self.hi = self.hi.sup(p);
    }

    fn dist2(&self, p: &Vec3) -> f64 {
        let d = (self.lo - p).sup(&(p - self.hi)).sup(&Vec3::zeros());
        d.norm_squared()
    }
}

#[derive(Debug, Clone)]
struct Node {
    bounds: Aabb,
    // leaf when count > 0: triangles order[start..start+count]
    start: u32,
    count: u32,
    left: u32,
    right: u32,
}

/// Bounding-volume hierarchy over a triangle soup.
#[derive(Debug, Clone)]
pub struct TriangleBvh {
    tris: Vec<[Vec3; 3]>,
    order: Vec<u32>,
    nodes: Vec<Node>,
}

impl TriangleBvh {
    pub fn new(vertices: &[Vec3], faces: &[[u32; 3]]) -> Self {
        let tris: Vec<[Vec3; 3]> = faces
            .iter()
            .map(|f| f.map(|i| vertices[i as usize]))
            .collect();
        let centers: Vec<Vec3> = tris.iter().map(|t| (t[0] + t[1] + t[2]) / 3.0).collect();
        let mut bvh = TriangleBvh {
            order: (0..tris.len() as u32).collect(),
            tris,
            nodes: Vec::new(),
        };
        if !bvh.tris.is_empty() {
            let n = bvh.tris.len();
            bvh.build(&centers, 0, n);
        }
        bvh
    }

    pub fn is_empty(&self) -> bool {
        self.tris.is_empty()
    }

    fn build(&mut self, centers: &[Vec3], start: usize, end: usize) -> u32 {
        let mut bounds = Aabb::empty();
        let mut cb = Aabb::empty();
        for &t in &self.order[start..end] {
            for v in &self.tris[t as usize] {
                bounds.grow(v);
            }
            cb.grow(&centers[t as usize]);
        }
        let id = self.nodes.len() as u32;
        self.nodes.push(Node {
            bounds,
            start: start as u32,
            count: (end - start) as u32,
            left: 0,
            right: 0,
        });
        if end - start <= 4 {
            return id;
        }
        let ext = cb.hi - cb.lo;
        let axis = ext.imax();
        let mid = (start + end) / 2;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            centers[a as usize][axis]
                .total_cmp(&centers[b as usize][axis])
                .then(a.cmp(&b))
        });
        let l = self.build(centers, start, mid);
        let r = self.build(centers, mid, end);
        let node = &mut self.nodes[id as usize];
        node.count = 0;
        node.left = l;
        node.right = r;
        id
    }

    /// Distance from `p` to the closest triangle, or `None` when empty.
    pub fn distance(&self, p: &Vec3) -> Option<f64> {
        if self.tris.is_empty() {
            return None;
        }
        let mut best = f64::INFINITY;
        let mut stack = vec![0u32];
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n as usize];
            if node.bounds.dist2(p) >= best {
                continue;
            }
            if node.count > 0 {
                for &t in &self.order[node.start as usize..(node.start + node.count) as usize] {
                    let [a, b, c] = &self.tris[t as usize];
                    let d = (closest_point_on_triangle(p, a, b, c) - p).norm_squared();
                    best = best.min(d);
                }
            } else {
                let (l, r) = (node.left, node.right);
                let (dl, dr) = (
                    self.nodes[l as usize].bounds.dist2(p),
                    self.nodes[r as usize].bounds.dist2(p),
                );
                if dl < dr {
                    stack.push(r);
                    stack.push(l);
                } else {
                    stack.push(l);
                    stack.push(r);
                }
            }
        }
        Some(best.sqrt())
    }
}
