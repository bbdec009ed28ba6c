//! Trains the two learned subdivision layers on one sphere phantom, saves
//! a checkpoint and checks it reloads to the same forward pass.
//!
//! cargo run --release --example gsn_training [epochs]

use bivmesh::fit::{deform_in_field, FitConfig};
use bivmesh::gsn::{
    extract_point_cloud, gsn_forward, load_checkpoint, save_checkpoint, total_loss, train, Case, CheckpointHeader,
    PointCloudSet, TrainConfig, DEFAULT_MAX_POINTS,
};
use bivmesh::phantom::{icosphere, sphere_volume};
use bivmesh::volume::{Label, NdcMap, SurfaceTarget, TargetFields};

fn main() -> bivmesh::Result<()> {
    let epochs = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(120);
    let v = sphere_volume([64, 64, 64], 4.0, 0.5, Label::Myo)?;
    let ndc = NdcMap::for_geometry(v.geometry());
    let mut clouds: [Option<Vec<_>>; 4] = Default::default();
    clouds[SurfaceTarget::LvEpi.index()] = Some(extract_point_cloud(&v, SurfaceTarget::LvEpi, &ndc, DEFAULT_MAX_POINTS, 0)?);
    let points = PointCloudSet::new(clouds);
    let (fitted, _) = deform_in_field(&icosphere(1, 0.3), &TargetFields::build(&v, &ndc), &FitConfig::default())?;
    let case = Case::new(fitted, points.clone())?;

    let cfg = TrainConfig {
        epochs,
        seed: 11,
        ..Default::default()
    };
    let r = train(std::slice::from_ref(&case), &cfg)?;
    for (k, l) in r.history.iter().enumerate().step_by(20) {
        println!("epoch {k:>4}: loss {l:.6}");
    }
    println!(
        "final {:.6} ({:.3} of initial); best {:.6} at epoch {}",
        r.history.last().unwrap(),
        r.history.last().unwrap() / r.history[0],
        r.best_loss,
        r.best_epoch
    );
    let levels = gsn_forward(&case.mesh, &r.last)?;
    let (parts, _) = total_loss(&levels, &points, cfg.weights)?;
    println!("last parameters: chamfer {:.6} laplacian {:.4}", parts.chamfer, parts.laplacian);

    let path = std::env::temp_dir().join("bivmesh_example.ckpt");
    save_checkpoint(&path, &r.best, &CheckpointHeader::new(cfg.seed, r.best_epoch, r.best_loss))?;
    let (back, header) = load_checkpoint(&path)?;
    let same = gsn_forward(&case.mesh, &back)?[1].vertices() == gsn_forward(&case.mesh, &r.best)?[1].vertices();
    println!("checkpoint {} ({}), reload identical: {same}", path.display(), header.architecture);
    Ok(())
}
