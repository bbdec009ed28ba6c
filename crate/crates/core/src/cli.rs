//! The work behind each `bivmesh` subcommand, callable without a process.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::config::RunConfig;
use crate::fit::FitLog;
use crate::gsn::{load_checkpoint, save_checkpoint, train, CheckpointHeader, GsnStack, TrainResult};
use crate::mesh::{load_mesh, save_mesh, LabeledMesh};
use crate::metrics::{evaluate, write_csv, CaseOutcome, MetricsReport};
use crate::phantom::{degrade, generate_phantom, procedural_template, DegradationSpec, PhantomSpec};
use crate::pipeline::{adjust_template, reconstruct, training_case, Scheme};
use crate::volume::{load_volume, save_volume, LabelVolume};
use crate::{Error, Result};

/// One row of a dataset manifest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub case_id: String,
    pub volume: PathBuf,
    pub template: PathBuf,
}

/// Reads `case_id,volume,template` rows. A first row whose first field is
/// `case_id` is taken as a header. Relative paths resolve against the
/// manifest's directory.
pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestEntry>> {
    let path = path.as_ref();
    let base = path.parent().unwrap_or(Path::new("."));
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .flexible(true)
        .from_path(path)?;
    let mut out = Vec::new();
    for (n, rec) in r.records().enumerate() {
        let rec = rec?;
        if rec.iter().all(str::is_empty) || (n == 0 && rec.get(0) == Some("case_id")) {
            continue;
        }
        if rec.len() != 3 {
            return Err(Error::Config(format!(
                "{}: row {} has {} fields, expected case_id,volume,template",
                path.display(),
                n + 1,
                rec.len()
            )));
        }
        out.push(ManifestEntry {
            case_id: rec[0].to_string(),
            volume: base.join(&rec[1]),
            template: base.join(&rec[2]),
        });
    }
    Ok(out)
}

/// Writes through a sibling temporary file and a rename.
fn atomic_write(path: &Path, write: impl FnOnce(&Path) -> Result<()>) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::Config(format!("not a file path: {}", path.display())))?
        .to_string_lossy();
    let tmp = path.with_file_name(format!(".{name}.partial"));
    write(&tmp)?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    atomic_write(path, |tmp| fs::write(tmp, text).map_err(|e| Error::io(tmp, e)))
}

fn write_mesh(path: &Path, m: &LabeledMesh) -> Result<()> {
    // the OBJ sidecar name follows the file name, so no temporary there
    if path.extension().is_some_and(|e| e == "obj") {
        return save_mesh(path, m);
    }
    let ext = path.extension().map(|e| e.to_string_lossy().into_owned()).unwrap_or_default();
    let stem = path.file_stem().unwrap_or_default().to_string_lossy();
    let tmp = path.with_file_name(format!(".{stem}.partial.{ext}"));
    save_mesh(&tmp, m)?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Loads a `PhantomSpec` from JSON. Parse errors carry line and column.
pub fn load_phantom_spec(path: impl AsRef<Path>) -> Result<PhantomSpec> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    PhantomSpec::from_json(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

pub fn load_degradation_spec(path: impl AsRef<Path>) -> Result<DegradationSpec> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let d: DegradationSpec =
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    d.validate()?;
    Ok(d)
}

/// Writes `phantom.{json,raw}` and the analytic `surfaces.json` into
/// `out_dir`, plus `degraded.{json,raw}` and `template.ply` on request.
/// Returns every file written.
pub fn cmd_phantom(
    spec: &PhantomSpec,
    degradation: Option<&DegradationSpec>,
    with_template: bool,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    create_dir(out_dir)?;
    let (v, surfaces) = generate_phantom(spec)?;
    let mut written = Vec::new();
    let stem = out_dir.join("phantom");
    save_volume(&stem, &v)?;
    written.extend([stem.with_extension("json"), stem.with_extension("raw")]);
    let side = out_dir.join("surfaces.json");
    write_text(&side, &serde_json::to_string_pretty(&surfaces)?)?;
    written.push(side);
    if let Some(d) = degradation {
        let dv = degrade(&v, d, spec.seed)?;
        let stem = out_dir.join("degraded");
        save_volume(&stem, &dv)?;
        written.extend([stem.with_extension("json"), stem.with_extension("raw")]);
    }
    if with_template {
        let t = out_dir.join("template.ply");
        write_mesh(&t, &procedural_template(0)?)?;
        written.push(t);
    }
    Ok(written)
}

/// Swing alignment and field deformation of `template` onto `volume`.
pub fn cmd_fit(
    volume: &Path,
    template: &Path,
    out: &Path,
    cfg: &RunConfig,
    align: bool,
    deform: bool,
) -> Result<(LabeledMesh, FitLog)> {
    cfg.validate()?;
    let v = load_volume(volume)?;
    let t = load_mesh(template)?;
    let mut pc = cfg.pipeline();
    pc.align = align;
    pc.deform = deform;
    let adjusted = adjust_template(&t, &v, &pc)?;
    if let Some(s) = &adjusted.swing {
        log::info!("swing {:.2}°", s.angle.to_degrees());
    }
    for (k, d) in adjusted.log.mean_distance.iter().enumerate() {
        log::info!("iteration {k}: mean |d| {d:.4} mm");
    }
    write_mesh(out, &adjusted.mesh)?;
    Ok((adjusted.mesh, adjusted.log))
}

fn load_case(e: &ManifestEntry) -> Result<(LabelVolume, LabeledMesh)> {
    let tag = |err: Error| Error::Config(format!("case {}: {err}", e.case_id));
    Ok((load_volume(&e.volume).map_err(tag)?, load_mesh(&e.template).map_err(tag)?))
}

fn write_history(path: &Path, history: &[f64]) -> Result<()> {
    let mut text = String::from("epoch,loss\n");
    for (k, l) in history.iter().enumerate() {
        text.push_str(&format!("{k},{l:e}\n"));
    }
    write_text(path, &text)
}

/// Trains a stack on every manifest case and writes the best parameters to
/// `checkpoint` and the loss per epoch to `history`. A diverged run still
/// writes its history before failing.
pub fn cmd_train(manifest: &Path, checkpoint: &Path, history: &Path, cfg: &RunConfig) -> Result<TrainResult> {
    cfg.validate()?;
    let entries = read_manifest(manifest)?;
    if entries.is_empty() {
        return Err(Error::Empty(format!("manifest {}", manifest.display())));
    }
    let pc = cfg.pipeline();
    let cases = entries
        .iter()
        .map(|e| {
            let (v, t) = load_case(e)?;
            training_case(&t, &v, &pc, cfg.seed)
        })
        .collect::<Result<Vec<_>>>()?;
    let result = match train(&cases, &cfg.train()) {
        Ok(r) => r,
        Err(Error::Diverged { epoch, history: h }) => {
            write_history(history, &h)?;
            return Err(Error::Diverged { epoch, history: h });
        }
        Err(e) => return Err(e),
    };
    write_history(history, &result.history)?;
    let header = CheckpointHeader::new(cfg.seed, result.best_epoch, result.best_loss);
    atomic_write(checkpoint, |tmp| save_checkpoint(tmp, &result.best, &header))?;
    Ok(result)
}

fn load_stack(scheme: Scheme, checkpoint: Option<&Path>) -> Result<Option<GsnStack>> {
    match checkpoint {
        Some(p) if scheme.needs_checkpoint() => Ok(Some(load_checkpoint(p)?.0)),
        _ => Ok(None),
    }
}

fn run_case(
    case_id: &str,
    v: &LabelVolume,
    t: &LabeledMesh,
    stack: Option<&GsnStack>,
    scheme: Scheme,
    cfg: &RunConfig,
    out_mesh: &Path,
) -> Result<MetricsReport> {
    let r = reconstruct(v, t, stack, scheme, &cfg.pipeline())?;
    write_mesh(out_mesh, &r.mesh)?;
    evaluate(case_id, &r.mesh, v, r.seconds, &cfg.eval())
}

/// Runs `scheme` on one volume, writes the mesh and, if `report` is given,
/// the metrics of the mesh against that same volume.
#[allow(clippy::too_many_arguments)]
pub fn cmd_reconstruct(
    case_id: &str,
    volume: &Path,
    template: &Path,
    checkpoint: Option<&Path>,
    scheme: Scheme,
    out_mesh: &Path,
    report: Option<&Path>,
    cfg: &RunConfig,
) -> Result<MetricsReport> {
    cfg.validate()?;
    if scheme.needs_checkpoint() && checkpoint.is_none() {
        return Err(Error::Config(format!("scheme {scheme} needs --checkpoint")));
    }
    let stack = load_stack(scheme, checkpoint)?;
    let v = load_volume(volume)?;
    let t = load_mesh(template)?;
    let r = run_case(case_id, &v, &t, stack.as_ref(), scheme, cfg, out_mesh)?;
    if let Some(p) = report {
        write_text(p, &r.to_json()?)?;
    }
    Ok(r)
}

fn write_reports(out_dir: &Path, outcomes: &[CaseOutcome]) -> Result<PathBuf> {
    let csv_path = out_dir.join("metrics.csv");
    atomic_write(&csv_path, |tmp| {
        let f = fs::File::create(tmp).map_err(|e| Error::io(tmp, e))?;
        let mut w = std::io::BufWriter::new(f);
        write_csv(&mut w, outcomes)?;
        w.flush().map_err(|e| Error::io(tmp, e))
    })?;
    Ok(csv_path)
}

/// Scores an existing mesh against a ground-truth volume and writes
/// `<case_id>.json` and `metrics.csv` into `out_dir`.
pub fn cmd_eval(case_id: &str, mesh: &Path, gt: &Path, out_dir: &Path, cfg: &RunConfig) -> Result<MetricsReport> {
    cfg.validate()?;
    create_dir(out_dir)?;
    let m = load_mesh(mesh)?;
    let v = load_volume(gt)?;
    let r = evaluate(case_id, &m, &v, 0.0, &cfg.eval())?;
    write_text(&out_dir.join(format!("{case_id}.json")), &r.to_json()?)?;
    write_reports(out_dir, &[Ok(r.clone())])?;
    Ok(r)
}

/// Reconstructs and scores every manifest case with `scheme`. A failing
/// case is recorded in the CSV with its error and the batch continues.
/// Returns the per-case outcomes and the CSV path.
pub fn cmd_eval_batch(
    manifest: &Path,
    scheme: Scheme,
    checkpoint: Option<&Path>,
    out_dir: &Path,
    cfg: &RunConfig,
) -> Result<(Vec<CaseOutcome>, PathBuf)> {
    cfg.validate()?;
    if scheme.needs_checkpoint() && checkpoint.is_none() {
        return Err(Error::Config(format!("scheme {scheme} needs --checkpoint")));
    }
    let entries = read_manifest(manifest)?;
    let stack = load_stack(scheme, checkpoint)?;
    create_dir(out_dir)?;
    let mut outcomes = Vec::with_capacity(entries.len());
    for e in &entries {
        let run = || -> Result<MetricsReport> {
            let (v, t) = load_case(e)?;
            let mesh_path = out_dir.join(format!("{}.ply", e.case_id));
            let r = run_case(&e.case_id, &v, &t, stack.as_ref(), scheme, cfg, &mesh_path)?;
            write_text(&out_dir.join(format!("{}.json", e.case_id)), &r.to_json()?)?;
            Ok(r)
        };
        match run() {
            Ok(r) => {
                log::info!("{}: dice {:.3} asd {:.3} mm", e.case_id, r.dice.mean, r.asd_mm);
                outcomes.push(Ok(r));
            }
            Err(err) => {
                log::warn!("{}: {err}", e.case_id);
                outcomes.push(Err((e.case_id.clone(), err.to_string())));
            }
        }
    }
    let csv_path = write_reports(out_dir, &outcomes)?;
    Ok((outcomes, csv_path))
}
