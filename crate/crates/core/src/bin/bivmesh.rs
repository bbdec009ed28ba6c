use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bivmesh::cli::{
    cmd_eval, cmd_eval_batch, cmd_fit, cmd_phantom, cmd_reconstruct, cmd_train, load_degradation_spec,
    load_phantom_spec,
};
use bivmesh::config::RunConfig;
use bivmesh::phantom::PhantomSpec;
use bivmesh::pipeline::Scheme;

/// Bi-ventricular mesh reconstruction from labeled volumes.
#[derive(Parser)]
#[command(name = "bivmesh", version)]
struct Cli {
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

/// Settings shared by all subcommands. Flags override the config file.
#[derive(Args)]
struct Overrides {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Field-deformation iterations.
    #[arg(long, global = true)]
    iterations: Option<usize>,
    #[arg(long, global = true)]
    step_clamp: Option<f64>,
    /// Chamfer weight.
    #[arg(long, global = true)]
    lambda_chamfer: Option<f64>,
    /// Laplacian weight.
    #[arg(long, global = true)]
    lambda_laplacian: Option<f64>,
    /// Weight of the final umbrella smoothing.
    #[arg(long, global = true)]
    smoothing_lambda: Option<f64>,
    #[arg(long, global = true)]
    smoothing_iterations: Option<usize>,
    #[arg(long, global = true)]
    epochs: Option<usize>,
    #[arg(long, global = true)]
    lr: Option<f64>,
    #[arg(long, global = true)]
    weight_decay: Option<f64>,
    /// Surface samples for the average surface distance.
    #[arg(long, global = true)]
    asd_samples: Option<usize>,
    /// Cap on supervision points per surface.
    #[arg(long, global = true)]
    max_points: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic phantom volume and its analytic surfaces.
    Phantom {
        /// PhantomSpec JSON; defaults apply when omitted.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// DegradationSpec JSON for an extra degraded volume.
        #[arg(long)]
        degrade: Option<PathBuf>,
        /// Also write the procedural template as template.ply.
        #[arg(long)]
        template: bool,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Align and deform a template onto a volume.
    Fit {
        volume: PathBuf,
        template: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
        #[arg(long)]
        no_align: bool,
        #[arg(long)]
        no_deform: bool,
    },
    /// Train the subdivision network on a manifest of cases.
    Train {
        /// CSV rows of case_id,volume,template.
        manifest: PathBuf,
        /// Checkpoint to write.
        #[arg(long, short)]
        out: PathBuf,
        /// Loss history CSV; defaults to <out>.history.csv.
        #[arg(long)]
        history: Option<PathBuf>,
    },
    /// Reconstruct one volume with an ablation scheme.
    Reconstruct {
        volume: PathBuf,
        template: PathBuf,
        /// Scheme 1 to 5.
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=5))]
        scheme: u8,
        /// Trained checkpoint, required for schemes 4 and 5.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Output mesh (.ply, or .obj with a .labels sidecar).
        #[arg(long, short)]
        out: PathBuf,
        /// Metrics JSON of the mesh against the input volume.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, default_value = "case")]
        case_id: String,
    },
    /// Score a mesh against a volume, or a whole manifest with a scheme.
    Eval {
        /// Mesh to score (single mode).
        #[arg(long, requires = "gt", conflicts_with = "manifest")]
        mesh: Option<PathBuf>,
        /// Ground-truth volume (single mode).
        #[arg(long)]
        gt: Option<PathBuf>,
        /// Manifest to reconstruct and score (batch mode).
        #[arg(long, requires = "scheme")]
        manifest: Option<PathBuf>,
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=5))]
        scheme: Option<u8>,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long, default_value = "case")]
        case_id: String,
        /// Output directory for JSON reports and metrics.csv.
        #[arg(long, short)]
        out: PathBuf,
    },
}

impl Overrides {
    fn resolve(&self) -> bivmesh::Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => RunConfig::from_file(p)?,
            None => RunConfig::default(),
        };
        let set = |c: &mut RunConfig, k: &str, v: Option<String>| v.map_or(Ok(()), |v| c.set(k, &v));
        set(&mut c, "iterations", self.iterations.map(|v| v.to_string()))?;
        set(&mut c, "step_clamp", self.step_clamp.map(|v| v.to_string()))?;
        set(&mut c, "lambda_chamfer", self.lambda_chamfer.map(|v| v.to_string()))?;
        set(&mut c, "lambda_laplacian", self.lambda_laplacian.map(|v| v.to_string()))?;
        set(&mut c, "smoothing_lambda", self.smoothing_lambda.map(|v| v.to_string()))?;
        set(&mut c, "smoothing_iterations", self.smoothing_iterations.map(|v| v.to_string()))?;
        set(&mut c, "epochs", self.epochs.map(|v| v.to_string()))?;
        set(&mut c, "lr", self.lr.map(|v| v.to_string()))?;
        set(&mut c, "weight_decay", self.weight_decay.map(|v| v.to_string()))?;
        set(&mut c, "asd_samples", self.asd_samples.map(|v| v.to_string()))?;
        set(&mut c, "max_points", self.max_points.map(|v| v.to_string()))?;
        set(&mut c, "seed", self.seed.map(|v| v.to_string()))?;
        c.validate()?;
        Ok(c)
    }
}

fn run(cli: Cli) -> bivmesh::Result<()> {
    let cfg = cli.overrides.resolve()?;
    log::debug!("configuration:\n{cfg}");
    match cli.command {
        Command::Phantom {
            spec,
            degrade,
            template,
            out,
        } => {
            let mut spec = match spec {
                Some(p) => load_phantom_spec(p)?,
                None => PhantomSpec::default(),
            };
            if let Some(s) = cli.overrides.seed {
                spec.seed = s;
            }
            let degrade = degrade.map(load_degradation_spec).transpose()?;
            for f in cmd_phantom(&spec, degrade.as_ref(), template, &out)? {
                println!("{}", f.display());
            }
        }
        Command::Fit {
            volume,
            template,
            out,
            no_align,
            no_deform,
        } => {
            let (_, log) = cmd_fit(&volume, &template, &out, &cfg, !no_align, !no_deform)?;
            for (k, d) in log.mean_distance.iter().enumerate() {
                println!("iteration {k}: mean |d| {d:.4} mm");
            }
        }
        Command::Train { manifest, out, history } => {
            if cli.overrides.seed.is_none() {
                return Err(bivmesh::Error::Config("train requires --seed".into()));
            }
            let history = history.unwrap_or_else(|| with_suffix(&out, ".history.csv"));
            let r = cmd_train(&manifest, &out, &history, &cfg)?;
            println!(
                "loss {:.6e} -> {:.6e}; best {:.6e} at epoch {}",
                r.history[0],
                r.history.last().copied().unwrap_or(f64::NAN),
                r.best_loss,
                r.best_epoch
            );
        }
        Command::Reconstruct {
            volume,
            template,
            scheme,
            checkpoint,
            out,
            report,
            case_id,
        } => {
            let scheme = Scheme::from_id(scheme)?;
            let r = cmd_reconstruct(
                &case_id,
                &volume,
                &template,
                checkpoint.as_deref(),
                scheme,
                &out,
                report.as_deref(),
                &cfg,
            )?;
            println!(
                "{case_id}: scheme {scheme} dice {:.4} asd {:.3} mm in {:.2} s",
                r.dice.mean, r.asd_mm, r.inference_seconds
            );
        }
        Command::Eval {
            mesh,
            gt,
            manifest,
            scheme,
            checkpoint,
            case_id,
            out,
        } => match (mesh, gt, manifest) {
            (Some(mesh), Some(gt), None) => {
                let r = cmd_eval(&case_id, &mesh, &gt, &out, &cfg)?;
                println!("{}", r.to_json()?);
            }
            (None, _, Some(manifest)) => {
                let scheme = Scheme::from_id(scheme.expect("clap enforces --scheme"))?;
                let (outcomes, csv) = cmd_eval_batch(&manifest, scheme, checkpoint.as_deref(), &out, &cfg)?;
                let failed = outcomes.iter().filter(|o| o.is_err()).count();
                println!("{} cases, {failed} failed; {}", outcomes.len(), csv.display());
            }
            _ => {
                return Err(bivmesh::Error::Config(
                    "eval needs either --mesh and --gt, or --manifest and --scheme".into(),
                ))
            }
        },
    }
    Ok(())
}

fn with_suffix(p: &Path, suffix: &str) -> PathBuf {
    let mut s = p.as_os_str().to_owned();
    s.push(suffix);
    s.into()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
