//! End-to-end checks of the subcommand bodies and the pipeline.

use std::fs;
use std::path::Path;

use bivmesh::cli::{cmd_eval, cmd_fit, cmd_phantom, cmd_train};
use bivmesh::config::RunConfig;
use bivmesh::mesh::save_mesh;
use bivmesh::metrics::{dice, evaluate, hausdorff, EvalOptions};
use bivmesh::phantom::{degrade, generate_phantom, icosphere, procedural_template, sphere_volume, DegradationSpec, PhantomSpec};
use bivmesh::pipeline::{reconstruct, PipelineConfig, Scheme};
use bivmesh::volume::{save_volume, Label};
use bivmesh::Error;

fn small_spec(seed: u64) -> PhantomSpec {
    PhantomSpec {
        dims: [64, 64, 64],
        spacing_mm: 4.0,
        ..PhantomSpec::varied(seed)
    }
}

/// Writes a phantom volume and the template, plus a one-case manifest.
fn one_case_manifest(dir: &Path, seed: u64) -> std::path::PathBuf {
    let (v, _) = generate_phantom(&small_spec(seed)).unwrap();
    save_volume(dir.join("case"), &v).unwrap();
    save_mesh(dir.join("template.ply"), &procedural_template(0).unwrap()).unwrap();
    let m = dir.join("manifest.csv");
    fs::write(&m, "case_id,volume,template\nc0,case.json,template.ply\n").unwrap();
    m
}

#[test]
fn degradation_lowers_dice_with_shift() {
    let (v, _) = generate_phantom(&small_spec(2)).unwrap();
    let myo = v.map(|l| *l == Label::Myo);
    let scores: Vec<f64> = [0.0, 6.0, 12.0]
        .iter()
        .map(|&s| {
            let d = DegradationSpec {
                max_shift_mm: s,
                ..Default::default()
            };
            dice(&degrade(&v, &d, 5).unwrap().map(|l| *l == Label::Myo), &myo).unwrap()
        })
        .collect();
    assert_eq!(scores[0], 1.0);
    assert!(scores[0] > scores[1] && scores[1] > scores[2], "{scores:?}");
}

#[test]
fn identical_volumes_score_perfectly() {
    let (v, _) = generate_phantom(&small_spec(3)).unwrap();
    for l in [Label::Lv, Label::Rv, Label::Myo] {
        let m = v.map(|x| *x == l);
        assert_eq!(dice(&m, &m).unwrap(), 1.0);
        assert_eq!(hausdorff(&m, &m).unwrap().max, 0.0);
    }
}

#[test]
fn phantom_command_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let spec = small_spec(4);
    let fa = cmd_phantom(&spec, None, false, a.path()).unwrap();
    let fb = cmd_phantom(&spec, None, false, b.path()).unwrap();
    assert_eq!(fa.len(), 3);
    for (x, y) in fa.iter().zip(&fb) {
        assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap(), "{}", x.display());
    }
    let d = DegradationSpec {
        slice_multiplier: 2,
        ..Default::default()
    };
    assert_eq!(cmd_phantom(&spec, Some(&d), true, a.path()).unwrap().len(), 6);
}

#[test]
fn eval_of_self_voxelized_reconstruction() {
    // a fitted and smoothed mesh scored against its own source volume
    let dir = tempfile::tempdir().unwrap();
    let (v, _) = generate_phantom(&PhantomSpec::varied(5)).unwrap();
    let r = reconstruct(&v, &procedural_template(0).unwrap(), None, Scheme::FitLoop, &PipelineConfig::default()).unwrap();
    save_volume(dir.path().join("gt"), &v).unwrap();
    save_mesh(dir.path().join("m.ply"), &r.mesh).unwrap();
    let out = dir.path().join("eval");
    let rep = cmd_eval(
        "c5",
        &dir.path().join("m.ply"),
        &dir.path().join("gt.json"),
        &out,
        &RunConfig::default(),
    )
    .unwrap();
    assert!(rep.dice.lv >= 0.95, "LV dice {}", rep.dice.lv);
    assert!(out.join("c5.json").exists() && out.join("metrics.csv").exists());
}

#[test]
fn training_with_zero_lr_is_flat_and_reruns_match() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = one_case_manifest(dir.path(), 6);
    let mut cfg = RunConfig {
        epochs: 3,
        lr: 0.0,
        seed: 11,
        ..Default::default()
    };
    let r = cmd_train(&manifest, &dir.path().join("z.ckpt"), &dir.path().join("z.csv"), &cfg).unwrap();
    assert_eq!(r.history.len(), 4);
    assert!(r.history.iter().all(|&l| l == r.history[0]), "{:?}", r.history);

    cfg.lr = 1e-3;
    let h1 = dir.path().join("a.csv");
    let h2 = dir.path().join("b.csv");
    cmd_train(&manifest, &dir.path().join("a.ckpt"), &h1, &cfg).unwrap();
    cmd_train(&manifest, &dir.path().join("b.ckpt"), &h2, &cfg).unwrap();
    assert_eq!(fs::read(&h1).unwrap(), fs::read(&h2).unwrap());
    assert_eq!(
        fs::read(dir.path().join("a.ckpt")).unwrap(),
        fs::read(dir.path().join("b.ckpt")).unwrap()
    );
}

#[test]
fn fit_command_modes() {
    let dir = tempfile::tempdir().unwrap();
    let (v, _) = generate_phantom(&small_spec(7)).unwrap();
    let t = procedural_template(0).unwrap();
    save_volume(dir.path().join("v"), &v).unwrap();
    save_mesh(dir.path().join("t.ply"), &t).unwrap();
    let vol = dir.path().join("v.json");
    let tpl = dir.path().join("t.ply");

    // no iterations: alignment only
    let cfg = RunConfig {
        iterations: 0,
        ..Default::default()
    };
    let (m, log) = cmd_fit(&vol, &tpl, &dir.path().join("a.ply"), &cfg, true, true).unwrap();
    assert!(log.mean_distance.is_empty());
    assert_eq!(m.faces(), t.faces());

    // full fit reduces the mean distance
    let (_, log) = cmd_fit(&vol, &tpl, &dir.path().join("b.ply"), &RunConfig::default(), true, true).unwrap();
    assert!(log.mean_distance.last().unwrap() < &log.mean_distance[0]);
}

#[test]
fn fit_onto_sphere_and_missing_rv() {
    let dir = tempfile::tempdir().unwrap();
    let v = sphere_volume([64, 64, 64], 4.0, 0.5, Label::Myo).unwrap();
    save_volume(dir.path().join("s"), &v).unwrap();
    save_mesh(dir.path().join("ico.ply"), &icosphere(2, 0.3)).unwrap();
    let vol = dir.path().join("s.json");
    let tpl = dir.path().join("ico.ply");
    let out = dir.path().join("o.ply");

    let (_, log) = cmd_fit(&vol, &tpl, &out, &RunConfig::default(), false, true).unwrap();
    // one voxel is 4 mm here
    assert!(*log.mean_distance.last().unwrap() < 4.0, "{:?}", log.mean_distance);

    let e = cmd_fit(&vol, &tpl, &out, &RunConfig::default(), true, true).unwrap_err();
    assert!(matches!(e, Error::Empty(_)), "{e}");
}

#[test]
fn loop_scheme_multiplies_faces_by_sixteen() {
    let (v, _) = generate_phantom(&small_spec(8)).unwrap();
    let t = procedural_template(0).unwrap();
    let r = reconstruct(&v, &t, None, Scheme::Loop, &PipelineConfig::default()).unwrap();
    assert_eq!(r.mesh.num_faces(), 16 * t.num_faces());
    assert!(r.adjusted.is_none());
    let rep = evaluate("loop", &r.mesh, &v, r.seconds, &EvalOptions::default()).unwrap();
    assert_eq!(rep.faces, 16 * t.num_faces());
}

#[test]
fn learned_schemes_need_a_stack() {
    let (v, _) = generate_phantom(&small_spec(9)).unwrap();
    let t = procedural_template(0).unwrap();
    for s in [Scheme::FitGsn1, Scheme::FitGsn2] {
        assert!(matches!(
            reconstruct(&v, &t, None, s, &PipelineConfig::default()),
            Err(Error::Config(_))
        ));
    }
}
