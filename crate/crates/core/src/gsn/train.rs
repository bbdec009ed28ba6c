//! Reverse-mode gradients through the two-layer stack and AdamW training.

use super::layer::{forward_positions, ForwardPass, LayerTopology};
use super::loss::{LossContext, LossParts, LossWeights};
use super::mlp::GsnStack;
use super::pointcloud::PointCloudSet;
use crate::mesh::LabeledMesh;
use crate::{Error, Result, Vec3};

/// One training case with its position-independent topology.
#[derive(Debug, Clone)]
pub struct Case {
    pub mesh: LabeledMesh,
    pub points: PointCloudSet,
    pub topology: Vec<LayerTopology>,
}

impl Case {
    pub fn new(mesh: LabeledMesh, points: PointCloudSet) -> Result<Self> {
        let topology = LayerTopology::chain(&mesh, 2)?;
        Ok(Case {
            mesh,
            points,
            topology,
        })
    }

    pub fn forward(&self, stack: &GsnStack) -> Result<ForwardPass> {
        forward_positions(&self.topology, self.mesh.vertices(), stack)
    }

    pub fn meshes(&self, pass: &ForwardPass) -> Vec<LabeledMesh> {
        self.topology
            .iter()
            .zip(&pass.outputs)
            .map(|(t, v)| t.plan.mesh(v.clone()))
            .collect()
    }

    /// Loss state frozen at the outputs of `pass`.
    pub fn context(&self, pass: &ForwardPass, w: LossWeights) -> Result<LossContext> {
        LossContext::new(&self.meshes(pass), &self.points, w)
    }
}

/// Loss of `stack` on `case` under an already frozen context.
pub fn frozen_loss(case: &Case, stack: &GsnStack, ctx: &LossContext) -> Result<LossParts> {
    let pass = case.forward(stack)?;
    let v: Vec<&[Vec3]> = pass.outputs.iter().map(|o| o.as_slice()).collect();
    Ok(ctx.evaluate(&v).0)
}

/// Loss and exact parameter gradients for `stack` under `ctx`.
pub fn backprop_with(case: &Case, stack: &GsnStack, pass: &ForwardPass, ctx: &LossContext) -> Result<(LossParts, GsnStack)> {
    let v: Vec<&[Vec3]> = pass.outputs.iter().map(|o| o.as_slice()).collect();
    let (parts, level_grads) = ctx.evaluate(&v);
    if !parts.total.is_finite() {
        return Err(Error::NonFinite {
            stage: "loss",
            layer: 0,
            index: 0,
        });
    }
    let mut grads = GsnStack::zeros();
    let mut carry: Option<Vec<Vec3>> = None;
    for l in (0..case.topology.len()).rev() {
        let mut d_out = level_grads[l].clone();
        if let Some(c) = carry.take() {
            for (a, b) in d_out.iter_mut().zip(c) {
                *a += b;
            }
        }
        let d_parent = case.topology[l].backward(
            &pass.mids[l],
            &stack.layers[l],
            &d_out,
            &mut grads.layers[l],
            l + 1,
        )?;
        carry = Some(d_parent);
    }
    Ok((parts, grads))
}

/// Loss and parameter gradients, with assignments and cotangent weights
/// frozen at the current forward pass.
pub fn backprop(stack: &GsnStack, case: &Case, w: LossWeights) -> Result<(LossParts, GsnStack)> {
    let pass = case.forward(stack)?;
    let ctx = case.context(&pass, w)?;
    backprop_with(case, stack, &pass, &ctx)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub weight_decay: f64,
    pub eps: f64,
    pub seed: u64,
    pub weights: LossWeights,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 120,
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            weight_decay: 0.01,
            eps: 1e-8,
            seed: 0,
            weights: LossWeights::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be ≥ 1".into()));
        }
        if !(self.lr >= 0.0) {
            return Err(Error::Config(format!("learning rate must be ≥ 0, got {}", self.lr)));
        }
        if !(self.weights.chamfer >= 0.0 && self.weights.laplacian >= 0.0) {
            return Err(Error::Config("loss weights must be ≥ 0".into()));
        }
        Ok(())
    }
}

/// Decoupled-weight-decay Adam over a flat parameter vector.
#[derive(Debug, Clone)]
pub struct AdamW {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl AdamW {
    pub fn new(n: usize) -> Self {
        AdamW {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64], cfg: &TrainConfig) {
        self.t += 1;
        let c1 = 1.0 - cfg.beta1.powi(self.t);
        let c2 = 1.0 - cfg.beta2.powi(self.t);
        for k in 0..params.len() {
            self.m[k] = cfg.beta1 * self.m[k] + (1.0 - cfg.beta1) * grad[k];
            self.v[k] = cfg.beta2 * self.v[k] + (1.0 - cfg.beta2) * grad[k] * grad[k];
            let mh = self.m[k] / c1;
            let vh = self.v[k] / c2;
            params[k] -= cfg.lr * (cfg.weight_decay * params[k] + mh / (vh.sqrt() + cfg.eps));
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainResult {
    /// Lowest-loss parameters seen, including the final ones.
    pub best: GsnStack,
    pub best_loss: f64,
    /// 0-based index into `history` of the best parameters.
    pub best_epoch: usize,
    pub last: GsnStack,
    /// Mean loss before every update, then once after the last.
    pub history: Vec<f64>,
}

fn mean_loss_and_grad(cases: &[Case], stack: &GsnStack, w: LossWeights) -> Result<(f64, Vec<f64>)> {
    let mut loss = 0.0;
    let mut grad = vec![0.0; stack.to_flat().len()];
    for c in cases {
        let (p, g) = backprop(stack, c, w)?;
        loss += p.total;
        for (a, b) in grad.iter_mut().zip(g.to_flat()) {
            *a += b;
        }
    }
    let n = cases.len() as f64;
    grad.iter_mut().for_each(|g| *g /= n);
    Ok((loss / n, grad))
}

/// Full-batch AdamW over all cases, one update per epoch, starting from
/// `GsnStack::init(cfg.seed)`.
pub fn train(cases: &[Case], cfg: &TrainConfig) -> Result<TrainResult> {
    train_from(cases, GsnStack::init(cfg.seed), cfg)
}

pub fn train_from(cases: &[Case], start: GsnStack, cfg: &TrainConfig) -> Result<TrainResult> {
    cfg.validate()?;
    if cases.is_empty() {
        return Err(Error::Empty("training set".into()));
    }
    let mut params = start.to_flat();
    let mut opt = AdamW::new(params.len());
    let mut history = Vec::with_capacity(cfg.epochs + 1);
    let mut best = (f64::INFINITY, params.clone(), 0usize);
    for epoch in 0..=cfg.epochs {
        let stack = GsnStack::from_flat(&params);
        let (loss, grad) = match mean_loss_and_grad(cases, &stack, cfg.weights) {
            Ok(r) => r,
            Err(Error::NonFinite { .. }) => {
                history.push(f64::NAN);
                return Err(Error::Diverged { epoch, history });
            }
            Err(e) => return Err(e),
        };
        history.push(loss);
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Diverged { epoch, history });
        }
        log::info!("epoch {epoch}: loss {loss:.6e}");
        if loss < best.0 {
            best = (loss, params.clone(), epoch);
        }
        if epoch < cfg.epochs {
            opt.step(&mut params, &grad, cfg);
        }
    }
    Ok(TrainResult {
        best: GsnStack::from_flat(&best.1),
        best_loss: best.0,
        best_epoch: best.2,
        last: GsnStack::from_flat(&params),
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gsn::MlpParams;
    use crate::mesh::VertexLabel;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small_case() -> Case {
        let ico = crate::phantom::icosphere(0, 0.35);
        let labels: Vec<VertexLabel> = (0..ico.num_vertices())
            .map(|i| if i % 3 == 0 { VertexLabel::RvEpi } else { VertexLabel::LvEpi })
            .collect();
        let m = LabeledMesh::new(ico.vertices().to_vec(), ico.faces().to_vec(), labels).unwrap();
        let big = crate::phantom::icosphere(2, 0.5);
        let mut c: [Option<Vec<Vec3>>; 4] = Default::default();
        c[2] = Some(big.vertices().iter().filter(|v| v.x >= -0.1).copied().collect());
        c[3] = Some(big.vertices().iter().filter(|v| v.x < 0.1).copied().collect());
        Case::new(m, PointCloudSet::new(c)).unwrap()
    }

    #[test]
    fn gradients_match_finite_differences() {
        let case = small_case();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let stack = GsnStack {
            layers: [MlpParams::random(&mut rng, 0.5), MlpParams::random(&mut rng, 0.5)],
        };
        let w = LossWeights::default();
        let pass = case.forward(&stack).unwrap();
        let ctx = case.context(&pass, w).unwrap();
        let (_, g) = backprop_with(&case, &stack, &pass, &ctx).unwrap();
        let g = g.to_flat();
        let base = stack.to_flat();
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        for k in (0..base.len()).step_by(7) {
            let mut a = base.clone();
            let mut b = base.clone();
            a[k] += h;
            b[k] -= h;
            let fa = frozen_loss(&case, &GsnStack::from_flat(&a), &ctx).unwrap().total;
            let fb = frozen_loss(&case, &GsnStack::from_flat(&b), &ctx).unwrap().total;
            let fd = (fa - fb) / (2.0 * h);
            worst = worst.max((fd - g[k]).abs() / (fd.abs().max(g[k].abs()).max(1e-6)));
        }
        assert!(worst < 1e-3, "worst relative error {worst}");
    }

    #[test]
    fn zero_lr_keeps_parameters() {
        let case = small_case();
        let cfg = TrainConfig {
            epochs: 3,
            lr: 0.0,
            seed: 4,
            ..Default::default()
        };
        let r = train(&[case], &cfg).unwrap();
        assert_eq!(r.last, GsnStack::init(4));
        assert_eq!(r.history.len(), 4);
        assert!(r.history.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn training_is_deterministic_and_descends() {
        let case = small_case();
        let cfg = TrainConfig {
            epochs: 15,
            seed: 2,
            ..Default::default()
        };
        let a = train(&[case.clone()], &cfg).unwrap();
        let b = train(&[case], &cfg).unwrap();
        assert_eq!(a.history, b.history);
        assert!(a.best_loss <= a.history[0]);
    }

    #[test]
    fn empty_dataset_rejected() {
        assert!(train(&[], &TrainConfig::default()).is_err());
    }
}
