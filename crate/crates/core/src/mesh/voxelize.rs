//! Inside/outside classification of voxel centers against closed surfaces.

use std::collections::HashMap;

use super::topology::EdgeTable;
use super::{LabeledMesh, VertexLabel};
use crate::volume::{Geometry, Grid3, Label, LabelVolume, Mask, NdcMap};
use crate::{Error, Result, Vec3};

/// Fraction of odd-parity columns tolerated before a surface is declared open.
pub const MAX_ODD_COLUMNS: f64 = 0.005;

/// Closed region bounded by part of a labeled mesh. A region is the union
/// of the connected components carrying any of its labels, with every open
/// boundary loop closed by a fan around the loop centroid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    /// Whole mesh, every component.
    All,
    LvEndo,
    RvEndo,
    /// Outer surface of the heart (LV and RV epicardium).
    Heart,
}

impl Region {
    fn labels(self) -> &'static [VertexLabel] {
        match self {
            Region::All => &VertexLabel::ALL,
            Region::LvEndo => &[VertexLabel::LvEndo],
            Region::RvEndo => &[VertexLabel::RvEndo],
            Region::Heart => &[VertexLabel::LvEpi, VertexLabel::RvEpi],
        }
    }
}

/// Faces of `region`, plus cap fans over its boundary loops. Returned
/// vertices are the mesh's own followed by one centroid per loop.
pub fn closed_region(m: &LabeledMesh, region: Region) -> Result<(Vec<Vec3>, Vec<[u32; 3]>)> {
    let (_, comp) = m.components();
    let wanted = region.labels();
    let mut keep = vec![false; comp.len()];
    for (i, l) in m.labels().iter().enumerate() {
        if wanted.contains(l) {
            keep[comp[i]] = true;
        }
    }
    let faces: Vec<[u32; 3]> = m
        .faces()
        .iter()
        .filter(|f| keep[comp[f[0] as usize]])
        .copied()
        .collect();
    let mut vertices = m.vertices().to_vec();
    if faces.is_empty() {
        return Ok((vertices, faces));
    }
    let edges = EdgeTable::from_faces(m.num_vertices(), &faces)?;
    edges.check_manifold()?;

    // directed boundary edges, as they run inside their single face
    let mut boundary: Vec<[u32; 2]> = Vec::new();
    for (e, fs) in edges.edge_faces.iter().enumerate() {
        if fs.len() == 1 {
            let f = faces[fs[0] as usize];
            let slot = edges.face_edges[fs[0] as usize]
                .iter()
                .position(|&x| x as usize == e)
                .expect("edge belongs to face");
            boundary.push([f[slot], f[(slot + 1) % 3]]);
        }
    }
    // group boundary vertices into loops
    let mut parent: HashMap<u32, u32> = HashMap::new();
    fn find(p: &mut HashMap<u32, u32>, i: u32) -> u32 {
        let mut r = i;
        while let Some(&q) = p.get(&r) {
            if q == r {
                break;
            }
            r = q;
        }
        p.insert(i, r);
        r
    }
    for &[a, b] in &boundary {
        parent.entry(a).or_insert(a);
        parent.entry(b).or_insert(b);
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent.insert(rb, ra);
        }
    }
    let mut loop_of: HashMap<u32, (Vec3, usize)> = HashMap::new();
    let mut members: Vec<u32> = parent.keys().copied().collect();
    members.sort_unstable();
    for &v in &members {
        let r = find(&mut parent, v);
        let e = loop_of.entry(r).or_insert((Vec3::zeros(), 0));
        e.0 += m.vertices()[v as usize];
        e.1 += 1;
    }
    let mut roots: Vec<u32> = loop_of.keys().copied().collect();
    roots.sort_unstable();
    let mut center_index = HashMap::new();
    for r in roots {
        let (sum, n) = loop_of[&r];
        center_index.insert(r, vertices.len() as u32);
        vertices.push(sum / n as f64);
    }
    let mut out = faces;
    for &[a, b] in &boundary {
        let c = center_index[&find(&mut parent, a)];
        out.push([b, a, c]);
    }
    Ok((vertices, out))
}

/// Sign of the orientation of `p + (ε, ε²)` against the directed edge
/// `a → b`. Endpoints are put in canonical order first so the two faces
/// sharing an edge see bitwise-consistent answers.
fn edge_side(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> i8 {
    let (lo, hi, flip) = if (a[0], a[1]) <= (b[0], b[1]) {
        (a, b, 1)
    } else {
        (b, a, -1)
    };
    let ex = hi[0] - lo[0];
    let ey = hi[1] - lo[1];
    let det = ex * (p[1] - lo[1]) - ey * (p[0] - lo[0]);
    let s = if det != 0.0 {
        det.signum()
    } else if ey != 0.0 {
        -ey.signum()
    } else {
        ex.signum()
    };
    flip * s as i8
}

/// Foreground mask of voxel centers inside the closed surface
/// `(vertices, faces)`, decided by ray-crossing parity along z columns.
pub fn voxelize_surface(
    vertices: &[Vec3],
    faces: &[[u32; 3]],
    geometry: &Geometry,
    ndc: &NdcMap,
) -> Result<Mask> {
    let [nx, ny, nz] = geometry.dims;
    let idx: Vec<Vec3> = vertices.iter().map(|v| ndc.to_index(*v)).collect();
    let mut crossings: Vec<Vec<f64>> = vec![Vec::new(); nx * ny];
    for f in faces {
        let [a, b, c] = f.map(|i| idx[i as usize]);
        let area2 = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
        if area2 == 0.0 {
            continue;
        }
        let lo_x = a.x.min(b.x).min(c.x).ceil().max(0.0);
        let hi_x = a.x.max(b.x).max(c.x).floor().min(nx as f64 - 1.0);
        let lo_y = a.y.min(b.y).min(c.y).ceil().max(0.0);
        let hi_y = a.y.max(b.y).max(c.y).floor().min(ny as f64 - 1.0);
        if lo_x > hi_x || lo_y > hi_y {
            continue;
        }
        let (pa, pb, pc) = ([a.x, a.y], [b.x, b.y], [c.x, c.y]);
        for y in lo_y as usize..=hi_y as usize {
            for x in lo_x as usize..=hi_x as usize {
                let p = [x as f64, y as f64];
                let s0 = edge_side(pa, pb, p);
                if s0 != edge_side(pb, pc, p) || s0 != edge_side(pc, pa, p) {
                    continue;
                }
                let w1 = ((p[0] - a.x) * (c.y - a.y) - (p[1] - a.y) * (c.x - a.x)) / area2;
                let w2 = ((b.x - a.x) * (p[1] - a.y) - (b.y - a.y) * (p[0] - a.x)) / area2;
                let z = a.z + w1 * (b.z - a.z) + w2 * (c.z - a.z);
                crossings[y * nx + x].push(z);
            }
        }
    }
    let mut odd = 0usize;
    let mut mask = Grid3::filled(*geometry, false);
    for y in 0..ny {
        for x in 0..nx {
            let col = &mut crossings[y * nx + x];
            if col.is_empty() {
                continue;
            }
            if col.len() % 2 == 1 {
                odd += 1;
                continue;
            }
            col.sort_unstable_by(f64::total_cmp);
            // a center is inside when an odd number of crossings lie at or below it
            for pair in col.chunks(2) {
                let mut z = pair[0].ceil().max(0.0);
                while z < pair[1] && z < nz as f64 {
                    *mask.get_mut(x, y, z as usize) = true;
                    z += 1.0;
                }
            }
        }
    }
    let total = nx * ny;
    if odd as f64 > MAX_ODD_COLUMNS * total as f64 {
        return Err(Error::OpenSurface { odd, total });
    }
    if odd > 0 {
        log::warn!("{odd} of {total} voxel columns had odd crossing parity and were left empty");
    }
    Ok(mask)
}

/// Mask of voxel centers inside `region` of `m`.
pub fn voxelize(m: &LabeledMesh, region: Region, geometry: &Geometry, ndc: &NdcMap) -> Result<Mask> {
    let (v, f) = closed_region(m, region)?;
    voxelize_surface(&v, &f, geometry, ndc)
}

/// Label volume implied by a bi-ventricular mesh: LV inside the LV
/// endocardium, RV inside the RV endocardium but not the LV, myocardium
/// elsewhere inside the epicardium.
pub fn voxelize_labels(m: &LabeledMesh, geometry: &Geometry, ndc: &NdcMap) -> Result<LabelVolume> {
    let lv = voxelize(m, Region::LvEndo, geometry, ndc)?;
    let rv = voxelize(m, Region::RvEndo, geometry, ndc)?;
    let heart = voxelize(m, Region::Heart, geometry, ndc)?;
    let data = (0..geometry.len())
        .map(|i| {
            if lv.data()[i] {
                Label::Lv
            } else if rv.data()[i] {
                Label::Rv
            } else if heart.data()[i] {
                Label::Myo
            } else {
                Label::Background
            }
        })
        .collect();
    Grid3::from_vec(*geometry, data)
}
