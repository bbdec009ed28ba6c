//! The nine acceptance criteria. Each criterion prints one PASS/FAIL line;
//! the test fails if any criterion fails.
//!
//! cargo test --release --test acceptance -- --nocapture

use std::time::Instant;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use bivmesh::fit::{deform_in_field, FitConfig};
use bivmesh::gsn::{
    backprop_with, extract_point_cloud, frozen_loss, gsn_forward, gsn_layer, train, train_from, Case, GsnStack,
    LossWeights, MlpParams, PointCloudSet, TrainConfig, DEFAULT_MAX_POINTS,
};
use bivmesh::mesh::{build_edges, midpoint_subdivide, LabeledMesh, VertexLabel};
use bivmesh::metrics::{
    aspect_ratio, dice, evaluate, hausdorff, non_manifold_ratio, normal_consistency, scaled_jacobian, EvalOptions,
};
use bivmesh::phantom::{generate_phantom, icosphere, procedural_template, sphere_volume, PhantomSpec};
use bivmesh::pipeline::{reconstruct, training_case, PipelineConfig, Scheme};
use bivmesh::volume::{
    gradient_field, squared_edt, Geometry, Grid3, Label, Mask, NdcMap, SurfaceTarget, TargetFields,
};
use bivmesh::Vec3;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

type Criterion = fn() -> bivmesh::Result<Outcome>;

// 1
fn edt_exactness() -> bivmesh::Result<Outcome> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let g = Geometry::centered([16, 16, 16], [1.0; 3])?;
    let mut mismatches = 0usize;
    for _ in 0..100 {
        let density: f64 = rng.random_range(0.002..0.3);
        let mut mask: Mask = Grid3::from_fn(g, |_| rng.random_bool(density));
        if !mask.data().iter().any(|&b| b) {
            mask.data_mut()[rng.random_range(0..g.len())] = true;
        }
        let fast = squared_edt(&mask);
        let fg: Vec<[usize; 3]> = (0..g.len()).filter(|&i| mask.data()[i]).map(|i| g.coords(i)).collect();
        for i in 0..g.len() {
            let c = g.coords(i);
            let brute = fg
                .iter()
                .map(|f| (0..3).map(|a| (c[a] as i64 - f[a] as i64).pow(2)).sum::<i64>())
                .min()
                .unwrap() as f64;
            if fast.data()[i].to_bits() != brute.to_bits() {
                mismatches += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Ok(outcome(
        mismatches == 0 && secs < 10.0,
        format!("{mismatches} mismatching voxels over 100 masks, {secs:.2} s"),
    ))
}

// 2
fn gradient_fidelity() -> bivmesh::Result<Outcome> {
    let radius = 0.5;
    let g = Geometry::centered([64, 64, 64], [4.0; 3])?;
    let ndc = NdcMap::for_geometry(&g);
    let k = ndc.ndc_per_mm(&g);
    let cell = k * 4.0;
    // analytic distance to the sphere, in mm
    let d = Grid3::from_fn(g, |c| (ndc.voxel_to_ndc(c).norm() - radius).abs() / k);
    let field = gradient_field(&d, &ndc);
    let (mut worst_cos, mut worst_mag, mut n) = (1.0f64, 0.0f64, 0usize);
    for i in 0..g.len() {
        let p = ndc.voxel_to_ndc(g.coords(i));
        let r = p.norm();
        // the direction is undefined at the center
        if (r - radius).abs() < 2.0 * cell || r < 2.0 * cell {
            continue;
        }
        let want = if r > radius { -p / r } else { p / r };
        let got = field.data()[i];
        let dn = (r - radius).abs();
        worst_cos = worst_cos.min(got.normalize().dot(&want));
        worst_mag = worst_mag.max((got.norm() - dn).abs() / dn);
        n += 1;
    }
    Ok(outcome(
        worst_cos > 0.99 && worst_mag < 0.10,
        format!("{n} voxels: min cosine {worst_cos:.5}, max magnitude error {:.2}%", 100.0 * worst_mag),
    ))
}

// 3
fn fit_convergence() -> bivmesh::Result<Outcome> {
    let v = sphere_volume([128, 128, 128], 2.0, 0.5, Label::Myo)?;
    let g = *v.geometry();
    let ndc = NdcMap::for_geometry(&g);
    let voxel = ndc.ndc_per_mm(&g) * 2.0;
    let fields = TargetFields::build_for(&v, &ndc, &[SurfaceTarget::LvEpi]);
    let template = icosphere(2, 0.3);
    let cfg = FitConfig::only(&[SurfaceTarget::LvEpi]);
    let (m, log) = deform_in_field(&template, &fields, &cfg)?;
    let worst = m
        .vertices()
        .iter()
        .zip(m.labels())
        .filter(|(_, l)| **l != VertexLabel::Valve)
        .map(|(p, _)| (p.norm() - 0.5).abs())
        .fold(0.0, f64::max);
    let monotone = log.mean_distance.windows(2).all(|w| w[1] <= w[0]);
    Ok(outcome(
        worst <= voxel && monotone && cfg.iterations == 10,
        format!(
            "max |r − 0.5| = {:.3} voxels; mean |d| {:.3} → {:.3} mm, non-increasing: {monotone}",
            worst / voxel,
            log.mean_distance[0],
            log.mean_distance.last().unwrap()
        ),
    ))
}

fn euler(m: &LabeledMesh) -> bivmesh::Result<i64> {
    let e = build_edges(m)?.edges.len() as i64;
    Ok(m.num_vertices() as i64 - e + m.num_faces() as i64)
}

// 4
fn zero_identity() -> bivmesh::Result<Outcome> {
    let t = procedural_template(0)?;
    let zero = GsnStack::zeros();
    let out = gsn_layer(&t, &zero.layers[0])?;
    let (mid, _) = midpoint_subdivide(&t)?;
    let bitwise = out.faces() == mid.faces()
        && out.labels() == mid.labels()
        && out
            .vertices()
            .iter()
            .zip(mid.vertices())
            .all(|(a, b)| (0..3).all(|k| a[k].to_bits() == b[k].to_bits()));
    let levels = gsn_forward(&t, &zero)?;
    let counts = levels[0].num_faces() == 4 * t.num_faces() && levels[1].num_faces() == 16 * t.num_faces();
    let chi = euler(&t)?;
    let euler_kept = euler(&levels[0])? == chi && euler(&levels[1])? == chi;
    let prefix = levels[0].labels()[..t.num_vertices()] == *t.labels()
        && levels[1].labels()[..levels[0].num_vertices()] == *levels[0].labels();
    Ok(outcome(
        bitwise && counts && euler_kept && prefix,
        format!(
            "bitwise {bitwise}; faces {} → {} → {}; χ = {chi} kept {euler_kept}; label prefix {prefix}",
            t.num_faces(),
            levels[0].num_faces(),
            levels[1].num_faces()
        ),
    ))
}

/// Regular dodecahedron (20 vertices), pentagons fanned into triangles.
fn dodecahedron(radius: f64) -> LabeledMesh {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut v = Vec::new();
    for sx in [-1.0, 1.0] {
        for sy in [-1.0, 1.0] {
            for sz in [-1.0, 1.0] {
                v.push(Vec3::new(sx, sy, sz));
            }
        }
    }
    for a in [-1.0, 1.0] {
        for b in [-1.0, 1.0] {
            v.push(Vec3::new(0.0, a / phi, b * phi));
            v.push(Vec3::new(a / phi, b * phi, 0.0));
            v.push(Vec3::new(a * phi, 0.0, b / phi));
        }
    }
    let v: Vec<Vec3> = v.iter().map(|p| p * (radius / 3f64.sqrt())).collect();
    // face normals are the icosahedron's vertex directions
    let mut normals = Vec::new();
    for a in [-1.0, 1.0] {
        for b in [-1.0, 1.0] {
            normals.push(Vec3::new(0.0, a * phi, b));
            normals.push(Vec3::new(b, 0.0, a * phi));
            normals.push(Vec3::new(a * phi, b, 0.0));
        }
    }
    let mut faces = Vec::new();
    for n in normals {
        let n = n.normalize();
        let mut idx: Vec<usize> = (0..20).collect();
        idx.sort_by(|&i, &j| v[j].dot(&n).total_cmp(&v[i].dot(&n)));
        let ring = &mut idx[..5];
        let c: Vec3 = ring.iter().map(|&i| v[i]).sum::<Vec3>() / 5.0;
        let e1 = (v[ring[0]] - c).normalize();
        let e2 = n.cross(&e1);
        ring.sort_by(|&i, &j| {
            let a = (v[i] - c).dot(&e2).atan2((v[i] - c).dot(&e1));
            let b = (v[j] - c).dot(&e2).atan2((v[j] - c).dot(&e1));
            a.total_cmp(&b)
        });
        for k in 1..4 {
            faces.push([ring[0] as u32, ring[k] as u32, ring[k + 1] as u32]);
        }
    }
    let labels = v
        .iter()
        .map(|p| if p.x >= 0.0 { VertexLabel::LvEpi } else { VertexLabel::RvEpi })
        .collect();
    LabeledMesh::new(v, faces, labels).expect("valid dodecahedron")
}

/// Signs of every hidden pre-activation evaluated in a forward pass.
fn activation_pattern(case: &Case, stack: &GsnStack) -> bivmesh::Result<Vec<bool>> {
    let pass = case.forward(stack)?;
    let mut signs = Vec::new();
    for (l, topo) in case.topology.iter().enumerate() {
        let mid = &pass.mids[l];
        for &[i, j] in &topo.edges {
            let d = mid[j as usize] - mid[i as usize];
            for x in [d, -d] {
                let (_, act) = stack.layers[l].forward_recorded(&x);
                signs.extend(act.z1.iter().chain(act.z2.iter()).map(|z| *z > 0.0));
            }
        }
    }
    Ok(signs)
}

// 5
fn gradient_correctness() -> bivmesh::Result<Outcome> {
    let start = Instant::now();
    let mesh = dodecahedron(0.35);
    let sphere = icosphere(2, 0.5);
    let mut clouds: [Option<Vec<Vec3>>; 4] = Default::default();
    clouds[SurfaceTarget::LvEpi.index()] = Some(sphere.vertices().iter().filter(|p| p.x >= -0.1).copied().collect());
    clouds[SurfaceTarget::RvEpi.index()] = Some(sphere.vertices().iter().filter(|p| p.x < 0.1).copied().collect());
    let case = Case::new(mesh, PointCloudSet::new(clouds))?;
    let h = 1e-4;
    let (mut worst, mut checked, mut straddling) = (0.0f64, 0usize, 0usize);
    for seed in 0..5u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let stack = GsnStack {
            layers: [MlpParams::random(&mut rng, 0.5), MlpParams::random(&mut rng, 0.5)],
        };
        let pass = case.forward(&stack)?;
        let ctx = case.context(&pass, LossWeights::default())?;
        let (_, grad) = backprop_with(&case, &stack, &pass, &ctx)?;
        let grad = grad.to_flat();
        let base = stack.to_flat();
        let pattern = activation_pattern(&case, &stack)?;
        for k in 0..base.len() {
            let mut a = base.clone();
            let mut b = base.clone();
            a[k] += h;
            b[k] -= h;
            let (sa, sb) = (GsnStack::from_flat(&a), GsnStack::from_flat(&b));
            // the loss is only piecewise smooth in θ: a stencil that flips a
            // ReLU measures a kink, not the derivative
            if activation_pattern(&case, &sa)? != pattern || activation_pattern(&case, &sb)? != pattern {
                straddling += 1;
                continue;
            }
            let fd = (frozen_loss(&case, &sa, &ctx)?.total - frozen_loss(&case, &sb, &ctx)?.total) / (2.0 * h);
            let rel = (fd - grad[k]).abs() / fd.abs().max(grad[k].abs()).max(1e-8);
            worst = worst.max(rel);
            checked += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Ok(outcome(
        worst < 1e-3 && secs < 60.0 && straddling * 20 < checked,
        format!(
            "20-vertex mesh, 5 seeds: max relative error {worst:.2e} over {checked} parameters \
             ({straddling} stencils cross a ReLU switch), {secs:.1} s"
        ),
    ))
}

/// Template icosphere fitted to a sphere phantom, supervised by the
/// phantom's surface points.
fn sphere_case() -> bivmesh::Result<Case> {
    let v = sphere_volume([64, 64, 64], 4.0, 0.5, Label::Myo)?;
    let ndc = NdcMap::for_geometry(v.geometry());
    let mut clouds: [Option<Vec<Vec3>>; 4] = Default::default();
    clouds[SurfaceTarget::LvEpi.index()] =
        Some(extract_point_cloud(&v, SurfaceTarget::LvEpi, &ndc, DEFAULT_MAX_POINTS, 0)?);
    let fields = TargetFields::build_for(&v, &ndc, &[SurfaceTarget::LvEpi]);
    let (fitted, _) = deform_in_field(&icosphere(1, 0.3), &fields, &FitConfig::only(&[SurfaceTarget::LvEpi]))?;
    Case::new(fitted, PointCloudSet::new(clouds))
}

// 6
fn training_progress() -> bivmesh::Result<Outcome> {
    let case = sphere_case()?;
    let cfg = TrainConfig {
        epochs: 120,
        lr: 1e-3,
        seed: 6,
        ..Default::default()
    };
    let a = train(std::slice::from_ref(&case), &cfg)?;
    let b = train_from(std::slice::from_ref(&case), GsnStack::init(cfg.seed), &cfg)?;
    let identical = a.history.len() == b.history.len()
        && a.history.iter().zip(&b.history).all(|(x, y)| x.to_bits() == y.to_bits());
    let (first, last) = (a.history[0], *a.history.last().unwrap());
    Ok(outcome(
        last < 0.5 * first && identical,
        format!(
            "loss {first:.5} → {last:.5} (ratio {:.3}, need < 0.5); bit-identical rerun: {identical}",
            last / first
        ),
    ))
}

// 7
fn end_to_end() -> bivmesh::Result<Outcome> {
    let template = procedural_template(0)?;
    let cfg = PipelineConfig::default();
    let train_cases = (0..4u64)
        .map(|k| {
            let (v, _) = generate_phantom(&PhantomSpec::varied(1000 + k))?;
            training_case(&template, &v, &cfg, k)
        })
        .collect::<bivmesh::Result<Vec<_>>>()?;
    let stack = train(&train_cases, &TrainConfig { seed: 7, ..Default::default() })?.best;
    let opts = EvalOptions::default();
    let schemes = [Scheme::Fit, Scheme::FitGsn1, Scheme::FitGsn2];
    let (mut asd, mut nmf, mut dice5) = ([0.0; 3], [0.0; 3], 0.0);
    let n = 20;
    for k in 0..n {
        let (v, _) = generate_phantom(&PhantomSpec::varied(k))?;
        for (s, scheme) in schemes.iter().enumerate() {
            let r = reconstruct(&v, &template, Some(&stack), *scheme, &cfg)?;
            let rep = evaluate(&format!("{k}"), &r.mesh, &v, r.seconds, &opts)?;
            asd[s] += rep.asd_mm / n as f64;
            nmf[s] += rep.non_manifold_ratio / n as f64;
            if *scheme == Scheme::FitGsn2 {
                dice5 += rep.dice.mean / n as f64;
            }
        }
    }
    let ordered = asd[0] > asd[1] && asd[1] > asd[2];
    Ok(outcome(
        dice5 >= 0.80 && ordered && nmf[2] <= nmf[0],
        format!(
            "20 held-out phantoms: scheme 5 Dice {dice5:.4}; ASD 3/4/5 = {:.3}/{:.3}/{:.3} mm; NmF 3/5 = {}/{}",
            asd[0], asd[1], asd[2], nmf[0], nmf[2]
        ),
    ))
}

/// Equilateral triangle in the z = 0 plane.
fn equilateral() -> LabeledMesh {
    let v = vec![
        Vec3::zeros(),
        Vec3::new(0.2, 0.0, 0.0),
        Vec3::new(0.1, 0.1 * 3f64.sqrt(), 0.0),
    ];
    LabeledMesh::new(v, vec![[0, 1, 2]], vec![VertexLabel::LvEpi; 3]).unwrap()
}

// 8
fn metric_oracles() -> bivmesh::Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let g = Geometry::centered([16, 16, 16], [1.0; 3])?;
    let a: Mask = Grid3::from_fn(g, |c| c.iter().all(|&x| (4..12).contains(&x)) && rng.random_bool(0.8));
    let b: Mask = Grid3::from_fn(g, |c| c.iter().all(|&x| (5..14).contains(&x)) && rng.random_bool(0.8));
    let self_dice = dice(&a, &a)?;
    let self_hd = hausdorff(&a, &a)?.max;
    let hd = hausdorff(&a, &b)?.max;
    // brute force over boundary voxels (those with a 6-neighbour outside)
    let border = |m: &Mask| -> Vec<[i64; 3]> {
        (0..g.len())
            .filter(|&i| m.data()[i])
            .map(|i| g.coords(i).map(|x| x as i64))
            .filter(|c| {
                (0..3).any(|ax| {
                    [-1, 1].iter().any(|d| {
                        let mut n = *c;
                        n[ax] += d;
                        n.iter().any(|&x| !(0..16).contains(&x)) || !m.get(n[0] as usize, n[1] as usize, n[2] as usize)
                    })
                })
            })
            .collect()
    };
    let (ba, bb) = (border(&a), border(&b));
    let directed = |p: &[[i64; 3]], q: &[[i64; 3]]| {
        p.iter()
            .map(|x| {
                q.iter()
                    .map(|y| (0..3).map(|k| ((x[k] - y[k]) as f64).powi(2)).sum::<f64>())
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
            .sqrt()
    };
    let brute = directed(&ba, &bb).max(directed(&bb, &ba));
    let tri = equilateral();
    let asp = aspect_ratio(&tri)?.mean;
    let jac = scaled_jacobian(&tri)?.mean;
    let hex = {
        let mut v = vec![Vec3::zeros()];
        v.extend((0..6).map(|k| {
            let t = k as f64 * std::f64::consts::PI / 3.0;
            Vec3::new(0.3 * t.cos(), 0.3 * t.sin(), 0.0)
        }));
        let f = (0..6u32).map(|k| [0, k + 1, (k + 1) % 6 + 1]).collect();
        LabeledMesh::new(v, f, vec![VertexLabel::LvEpi; 7])?
    };
    let mnc = normal_consistency(&hex)?;
    let triple = LabeledMesh::new(
        vec![
            Vec3::zeros(),
            Vec3::new(0.2, 0.0, 0.0),
            Vec3::new(0.1, 0.2, 0.0),
            Vec3::new(0.1, -0.2, 0.0),
            Vec3::new(0.1, 0.0, 0.2),
        ],
        vec![[0, 1, 2], [1, 0, 3], [0, 1, 4]],
        vec![VertexLabel::LvEpi; 5],
    );
    let nmf = match triple {
        Ok(m) => non_manifold_ratio(&m)?,
        Err(e) => return Ok(outcome(false, format!("triple-edge fixture rejected: {e}"))),
    };
    let pass = self_dice == 1.0
        && self_hd == 0.0
        && (hd - brute).abs() < 1e-12
        && (asp - 1.0).abs() < 1e-12
        && (jac - 1.0).abs() < 1e-12
        && (mnc - 1.0).abs() < 1e-12
        && nmf == 1.0;
    Ok(outcome(
        pass,
        format!(
            "dice(a,a) {self_dice}, hd(a,a) {self_hd}, hd {hd:.4} vs brute {brute:.4}, AspR {asp:.6}, JacR {jac:.6}, MnC {mnc:.6}, NmF {nmf}"
        ),
    ))
}

// 9
fn performance() -> bivmesh::Result<Outcome> {
    let (v, _) = generate_phantom(&PhantomSpec::varied(99))?;
    let template = procedural_template(0)?;
    let stack = GsnStack::init(9);
    let start = Instant::now();
    let r = reconstruct(&v, &template, Some(&stack), Scheme::FitGsn2, &PipelineConfig::default())?;
    let rep = evaluate("perf", &r.mesh, &v, r.seconds, &EvalOptions::default())?;
    let secs = start.elapsed().as_secs_f64();
    Ok(outcome(
        secs < 30.0 && rep.inference_seconds > 0.0 && rep.inference_seconds <= secs,
        format!(
            "scheme 5 on 128³ incl. report: {secs:.2} s (reconstruction {:.2} s recorded in the report)",
            rep.inference_seconds
        ),
    ))
}

#[test]
fn acceptance_criteria() {
    let criteria: [(&str, Criterion); 9] = [
        ("EDT exactness", edt_exactness),
        ("gradient-field fidelity", gradient_fidelity),
        ("fit convergence", fit_convergence),
        ("GSN zero-identity", zero_identity),
        ("gradient correctness", gradient_correctness),
        ("training progress", training_progress),
        ("end-to-end reconstruction", end_to_end),
        ("metric oracles", metric_oracles),
        ("performance envelope", performance),
    ];
    let mut failed = Vec::new();
    for (k, (name, run)) in criteria.iter().enumerate() {
        let o = run().unwrap_or_else(|e| outcome(false, format!("error: {e}")));
        println!("{} criterion {} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, k + 1, o.detail);
        if !o.pass {
            failed.push(k + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
