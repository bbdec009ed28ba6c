//! Procedural labeled template: three open cups (heart exterior, LV cavity,
//! RV cavity) traced on the default phantom's solids, with valve rims on the
//! basal plane.

use std::f64::consts::{PI, TAU};

use super::anatomy::{mm_to_ndc, PhantomSpec, PhantomSurfaces};
use crate::mesh::{loop_subdivide, midpoint_subdivide, LabeledMesh, VertexLabel};
use crate::volume::NdcMap;
use crate::{Error, Result, Vec3};

/// Sector and ring counts of the cups. A cup with `s` sectors and `r`
/// rings has `1 + s·r` vertices and `s·(2r − 1)` faces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemplateResolution {
    pub epi_sectors: usize,
    pub epi_rings: usize,
    pub endo_sectors: usize,
    pub endo_rings: usize,
}

impl Default for TemplateResolution {
    fn default() -> Self {
        TemplateResolution {
            epi_sectors: 24,
            epi_rings: 8,
            endo_sectors: 16,
            endo_rings: 6,
        }
    }
}

impl TemplateResolution {
    pub fn counts(&self) -> (usize, usize) {
        let v = |s: usize, r: usize| 1 + s * r;
        let f = |s: usize, r: usize| s * (2 * r - 1);
        (
            v(self.epi_sectors, self.epi_rings) + 2 * v(self.endo_sectors, self.endo_rings),
            f(self.epi_sectors, self.epi_rings) + 2 * f(self.endo_sectors, self.endo_rings),
        )
    }
}

const MARCH_STEP_MM: f64 = 0.25;
const MARCH_MAX_MM: f64 = 400.0;

/// Distance along `dir` from `from` to the first (or last) inside→outside
/// transition of `inside`, refined by bisection.
fn exit_distance(inside: &dyn Fn(&Vec3) -> bool, from: Vec3, dir: Vec3, last: bool) -> Option<f64> {
    let mut found = None;
    let mut prev_in = inside(&from);
    let mut t = 0.0;
    while t < MARCH_MAX_MM {
        let next = t + MARCH_STEP_MM;
        let now_in = inside(&(from + dir * next));
        if prev_in && !now_in {
            let (mut lo, mut hi) = (t, next);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if inside(&(from + dir * mid)) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            found = Some(lo);
            if !last {
                break;
            }
        }
        prev_in = now_in;
        t = next;
    }
    found
}

struct Cup {
    vertices: Vec<Vec3>,
    faces: Vec<[u32; 3]>,
    rim: Vec<usize>,
}

/// Star-shaped cup seen from `center`: an apex on the downward ray, rings
/// at evenly spaced polar angles, and a rim ring on the basal plane.
fn trace_cup(
    inside: &dyn Fn(&Vec3) -> bool,
    s: &PhantomSurfaces,
    center: Vec3,
    sectors: usize,
    rings: usize,
    last: bool,
) -> Result<Cup> {
    let axes = s.lv_endo.axes;
    let (ex, ey, ez) = (axes.column(0).into_owned(), axes.column(1).into_owned(), axes.column(2).into_owned());
    if !inside(&center) {
        return Err(Error::InvalidMesh("template star center lies outside its solid".into()));
    }
    let height = (s.base_point - center).dot(&ez);
    let fail = || Error::InvalidMesh("template ray never leaves its solid".into());
    let mut vertices = vec![center - ez * exit_distance(inside, center, -ez, last).ok_or_else(fail)?];
    let mut rim_angle = Vec::with_capacity(sectors);
    let mut rim_point = Vec::with_capacity(sectors);
    for k in 0..sectors {
        let phi = TAU * k as f64 / sectors as f64;
        let u = ex * phi.cos() + ey * phi.sin();
        let on_plane = center + ez * (height - 1e-9);
        let rho = exit_distance(inside, on_plane, u, last).ok_or_else(fail)?;
        rim_angle.push(PI - rho.atan2(height));
        rim_point.push(center + ez * height + u * rho);
    }
    for ring in 1..=rings {
        for k in 0..sectors {
            if ring == rings {
                vertices.push(rim_point[k]);
                continue;
            }
            let phi = TAU * k as f64 / sectors as f64;
            let theta = rim_angle[k] * ring as f64 / rings as f64;
            let d = (ex * phi.cos() + ey * phi.sin()) * theta.sin() - ez * theta.cos();
            vertices.push(center + d * exit_distance(inside, center, d, last).ok_or_else(fail)?);
        }
    }
    let at = |ring: usize, k: usize| (1 + (ring - 1) * sectors + k % sectors) as u32;
    let mut faces = Vec::with_capacity(sectors * (2 * rings - 1));
    for k in 0..sectors {
        faces.push([0, at(1, k + 1), at(1, k)]);
    }
    for ring in 1..rings {
        for k in 0..sectors {
            let (a, b) = (at(ring, k), at(ring, k + 1));
            let (c, d) = (at(ring + 1, k + 1), at(ring + 1, k));
            faces.push([a, b, d]);
            faces.push([b, c, d]);
        }
    }
    let rim = (0..sectors).map(|k| at(rings, k) as usize).collect();
    Ok(Cup { vertices, faces, rim })
}

/// Template traced on the solids of `spec` (after jitter), in the NDC frame
/// of the spec's grid.
pub fn template_for(spec: &PhantomSpec, res: &TemplateResolution) -> Result<LabeledMesh> {
    if res.epi_sectors < 3 || res.endo_sectors < 3 || res.epi_rings < 2 || res.endo_rings < 2 {
        return Err(Error::Config(format!("template resolution too coarse: {res:?}")));
    }
    let s = spec.surfaces()?;
    let g = spec.geometry()?;
    let ndc = NdcMap::for_geometry(&g);
    let ez = s.base_normal;
    let lv_center = s.lv_endo.center;

    let heart = |p: &Vec3| s.below_base(p) && (s.lv_epi.contains(p) || s.rv_epi.contains(p));
    let lv = |p: &Vec3| s.below_base(p) && s.lv_endo.contains(p);
    let rv = |p: &Vec3| s.below_base(p) && s.rv_endo.contains(p) && !s.lv_epi.contains(p);

    // RV star center: two thirds of the way from the LV wall to the outer
    // RV cavity wall, at the RV center height
    let to_rv = s.rv_endo.center - lv_center;
    let radial = (to_rv - ez * to_rv.dot(&ez)).normalize();
    let offset = to_rv.dot(&radial);
    let r_star = (s.lv_epi.semi_axes.x + 2.0 * (offset + s.rv_endo.semi_axes.x)) / 3.0;
    let rv_center = s.rv_endo.center + radial * (r_star - offset);

    let cups = [
        (trace_cup(&heart, &s, lv_center, res.epi_sectors, res.epi_rings, true)?, None),
        (
            trace_cup(&lv, &s, lv_center, res.endo_sectors, res.endo_rings, false)?,
            Some(VertexLabel::LvEndo),
        ),
        (
            trace_cup(&rv, &s, rv_center, res.endo_sectors, res.endo_rings, false)?,
            Some(VertexLabel::RvEndo),
        ),
    ];
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    let mut labels = Vec::new();
    for (cup, label) in cups {
        let base = vertices.len() as u32;
        let mut cup_labels: Vec<VertexLabel> = cup
            .vertices
            .iter()
            .map(|p| {
                label.unwrap_or(if s.lv_epi.level(p) > 1.0 + 1e-6 {
                    VertexLabel::RvEpi
                } else {
                    VertexLabel::LvEpi
                })
            })
            .collect();
        for &i in &cup.rim {
            cup_labels[i] = VertexLabel::Valve;
        }
        vertices.extend(cup.vertices.iter().map(|p| mm_to_ndc(&g, &ndc, p)));
        faces.extend(cup.faces.iter().map(|f| f.map(|i| i + base)));
        labels.extend(cup_labels);
    }
    LabeledMesh::new(vertices, faces, labels)
}

/// Template on the default anatomy at the default resolution, refined by
/// `level` rounds of Loop subdivision.
pub fn procedural_template(level: usize) -> Result<LabeledMesh> {
    let mut m = template_for(&PhantomSpec::default(), &TemplateResolution::default())?;
    for _ in 0..level {
        m = loop_subdivide(&m)?;
    }
    Ok(m)
}

/// Icosahedral sphere mesh centered at the origin, all vertices LV-epi.
pub fn icosphere(level: usize, radius: f64) -> LabeledMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let raw = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ];
    let faces = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    let project = |m: &LabeledMesh| m.map_vertices(|v| v.normalize() * radius);
    let vertices = raw.iter().map(|p| Vec3::from(*p).normalize() * radius).collect();
    let mut m = LabeledMesh::new(vertices, faces, vec![VertexLabel::LvEpi; 12]).expect("icosahedron is valid");
    for _ in 0..level {
        m = project(&midpoint_subdivide(&m).expect("closed manifold").0);
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_edges, voxelize_labels};
    use crate::phantom::generate_phantom;
    use crate::volume::Label;

    #[test]
    fn default_counts_near_target() {
        let m = procedural_template(0).unwrap();
        assert_eq!((m.num_vertices(), m.num_faces()), TemplateResolution::default().counts());
        let (v, f) = (m.num_vertices() as f64, m.num_faces() as f64);
        assert!((v - 388.0).abs() <= 0.15 * 388.0, "{v} vertices");
        assert!((f - 780.0).abs() <= 0.15 * 780.0, "{f} faces");
    }

    #[test]
    fn every_label_has_eight_vertices() {
        let m = procedural_template(0).unwrap();
        for l in VertexLabel::ALL {
            assert!(m.indices_with_label(l).len() >= 8, "{l}");
        }
    }

    #[test]
    fn manifold_three_components_with_valve_rims() {
        let m = procedural_template(0).unwrap();
        let e = build_edges(&m).unwrap();
        e.check_manifold().unwrap();
        assert_eq!(m.components().0, 3);
        let boundary = e.boundary_vertices();
        for (i, b) in boundary.iter().enumerate() {
            assert_eq!(*b, m.labels()[i] == VertexLabel::Valve);
        }
        assert!(m.vertices().iter().all(|v| v.abs().max() < 1.0));
    }

    #[test]
    fn template_voxelizes_close_to_phantom() {
        let spec = PhantomSpec {
            dims: [64, 64, 64],
            spacing_mm: 4.0,
            ..Default::default()
        };
        let m = template_for(&spec, &TemplateResolution::default()).unwrap();
        let (gt, _) = generate_phantom(&spec).unwrap();
        let g = *gt.geometry();
        let v = voxelize_labels(&m, &g, &NdcMap::for_geometry(&g)).unwrap();
        for l in [Label::Lv, Label::Rv] {
            let a = gt.data().iter().filter(|x| **x == l).count() as f64;
            let b = v.data().iter().filter(|x| **x == l).count() as f64;
            assert!((a - b).abs() / a < 0.2, "{l:?}: {a} vs {b}");
        }
    }

    #[test]
    fn icosphere_counts_and_radius() {
        for (level, nv) in [(0, 12), (1, 42), (2, 162)] {
            let m = icosphere(level, 0.3);
            assert_eq!(m.num_vertices(), nv);
            assert_eq!(m.num_faces(), 20 * 4usize.pow(level as u32));
            assert!(m.vertices().iter().all(|v| (v.norm() - 0.3).abs() < 1e-12));
        }
    }
}
