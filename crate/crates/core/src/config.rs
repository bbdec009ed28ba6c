//! Run configuration: defaults, a flat `key = value` file format and
//! validation shared by every subcommand.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::fit::FitConfig;
use crate::gsn::{LossWeights, TrainConfig, DEFAULT_MAX_POINTS};
use crate::metrics::{EvalOptions, ASD_SAMPLES};
use crate::mesh::smooth::DEFAULT_LAMBDA;
use crate::pipeline::{PipelineConfig, SMOOTHING_ITERATIONS};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Field-deformation iterations; 0 keeps only the swing alignment.
    pub iterations: usize,
    /// Per-iteration displacement clamp, NDC.
    pub step_clamp: f64,
    pub lambda_chamfer: f64,
    pub lambda_laplacian: f64,
    pub smoothing_lambda: f64,
    pub smoothing_iterations: usize,
    pub epochs: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub asd_samples: usize,
    pub max_points: usize,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let fit = FitConfig::default();
        let train = TrainConfig::default();
        RunConfig {
            iterations: fit.iterations,
            step_clamp: fit.clamp,
            lambda_chamfer: train.weights.chamfer,
            lambda_laplacian: train.weights.laplacian,
            smoothing_lambda: DEFAULT_LAMBDA,
            smoothing_iterations: SMOOTHING_ITERATIONS,
            epochs: train.epochs,
            lr: train.lr,
            weight_decay: train.weight_decay,
            asd_samples: ASD_SAMPLES,
            max_points: DEFAULT_MAX_POINTS,
            seed: 0,
        }
    }
}

/// Keys accepted in config files, in display order.
pub const KEYS: [&str; 12] = [
    "iterations",
    "step_clamp",
    "lambda_chamfer",
    "lambda_laplacian",
    "smoothing_lambda",
    "smoothing_iterations",
    "epochs",
    "lr",
    "weight_decay",
    "asd_samples",
    "max_points",
    "seed",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse `{value}`")))
}

impl RunConfig {
    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "iterations" => self.iterations = parse(key, value)?,
            "step_clamp" => self.step_clamp = parse(key, value)?,
            "lambda_chamfer" => self.lambda_chamfer = parse(key, value)?,
            "lambda_laplacian" => self.lambda_laplacian = parse(key, value)?,
            "smoothing_lambda" => self.smoothing_lambda = parse(key, value)?,
            "smoothing_iterations" => self.smoothing_iterations = parse(key, value)?,
            "epochs" => self.epochs = parse(key, value)?,
            "lr" => self.lr = parse(key, value)?,
            "weight_decay" => self.weight_decay = parse(key, value)?,
            "asd_samples" => self.asd_samples = parse(key, value)?,
            "max_points" => self.max_points = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines on top of `self`. Blank lines and lines
    /// starting with `#` are skipped.
    pub fn merge_text(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", n + 1)))?;
            self.set(k.trim(), v.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut c = RunConfig::default();
        c.merge_text(&text)?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.step_clamp > 0.0) {
            return bad(format!("step_clamp must be > 0, got {}", self.step_clamp));
        }
        if !(self.lambda_chamfer >= 0.0 && self.lambda_laplacian >= 0.0) {
            return bad("loss weights must be ≥ 0".into());
        }
        if !(self.smoothing_lambda > 0.0 && self.smoothing_lambda < 1.0) {
            return bad(format!("smoothing_lambda must be in (0, 1), got {}", self.smoothing_lambda));
        }
        if self.epochs == 0 {
            return bad("epochs must be ≥ 1".into());
        }
        if !(self.lr >= 0.0) {
            return bad(format!("lr must be ≥ 0, got {}", self.lr));
        }
        if !(self.weight_decay >= 0.0) {
            return bad(format!("weight_decay must be ≥ 0, got {}", self.weight_decay));
        }
        if self.asd_samples == 0 || self.max_points == 0 {
            return bad("asd_samples and max_points must be ≥ 1".into());
        }
        Ok(())
    }

    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            fit: FitConfig {
                iterations: self.iterations,
                clamp: self.step_clamp,
                ..FitConfig::default()
            },
            align: true,
            deform: true,
            smoothing_lambda: self.smoothing_lambda,
            smoothing_iterations: self.smoothing_iterations,
            max_points: self.max_points,
        }
    }

    pub fn train(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            lr: self.lr,
            weight_decay: self.weight_decay,
            seed: self.seed,
            weights: LossWeights {
                chamfer: self.lambda_chamfer,
                laplacian: self.lambda_laplacian,
            },
            ..TrainConfig::default()
        }
    }

    pub fn eval(&self) -> EvalOptions {
        EvalOptions {
            asd_samples: self.asd_samples,
            seed: self.seed,
        }
    }

    fn value(&self, key: &str) -> String {
        match key {
            "iterations" => self.iterations.to_string(),
            "step_clamp" => self.step_clamp.to_string(),
            "lambda_chamfer" => self.lambda_chamfer.to_string(),
            "lambda_laplacian" => self.lambda_laplacian.to_string(),
            "smoothing_lambda" => self.smoothing_lambda.to_string(),
            "smoothing_iterations" => self.smoothing_iterations.to_string(),
            "epochs" => self.epochs.to_string(),
            "lr" => self.lr.to_string(),
            "weight_decay" => self.weight_decay.to_string(),
            "asd_samples" => self.asd_samples.to_string(),
            "max_points" => self.max_points.to_string(),
            "seed" => self.seed.to_string(),
            _ => unreachable!("unknown key {key}"),
        }
    }
}

/// Renders in the file format, so the output can be read back.
impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for k in KEYS {
            writeln!(f, "{k} = {}", self.value(k))?;
        }
        Ok(())
    }
}
