use nalgebra::{SMatrix, SVector};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::Vec3;

pub const HIDDEN: usize = 16;

pub type W1 = SMatrix<f64, HIDDEN, 3>;
pub type W2 = SMatrix<f64, HIDDEN, HIDDEN>;
pub type W3 = SMatrix<f64, 3, HIDDEN>;
pub type Hidden = SVector<f64, HIDDEN>;

/// Weights of the 3→16→16→3 vertex-update network. Hidden layers use a
/// rectifier, the output is linear.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub w1: W1,
    pub b1: Hidden,
    pub w2: W2,
    pub b2: Hidden,
    pub w3: W3,
    pub b3: Vec3,
}

/// Parameter count of one network.
pub const NUM_PARAMS: usize = 3 * HIDDEN + HIDDEN + HIDDEN * HIDDEN + HIDDEN + HIDDEN * 3 + 3;

/// Intermediate values of one evaluation, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct Activations {
    pub x: Vec3,
    pub z1: Hidden,
    pub h1: Hidden,
    pub z2: Hidden,
    pub h2: Hidden,
}

fn relu(z: &Hidden) -> Hidden {
    z.map(|v| v.max(0.0))
}

impl MlpParams {
    pub fn zeros() -> Self {
        MlpParams {
            w1: W1::zeros(),
            b1: Hidden::zeros(),
            w2: W2::zeros(),
            b2: Hidden::zeros(),
            w3: W3::zeros(),
            b3: Vec3::zeros(),
        }
    }

    /// Glorot-uniform hidden layers, zero output layer, zero biases.
    pub fn init(rng: &mut ChaCha8Rng) -> Self {
        let mut p = MlpParams::zeros();
        let a1 = (6.0 / (3 + HIDDEN) as f64).sqrt();
        let a2 = (6.0 / (2 * HIDDEN) as f64).sqrt();
        fill_uniform(p.w1.as_mut_slice(), a1, rng);
        fill_uniform(p.w2.as_mut_slice(), a2, rng);
        p
    }

    /// Every entry uniform in ±`scale`, biases included.
    pub fn random(rng: &mut ChaCha8Rng, scale: f64) -> Self {
        let mut v = vec![0.0; NUM_PARAMS];
        fill_uniform(&mut v, scale, rng);
        MlpParams::from_flat(&v)
    }

    pub fn forward(&self, x: &Vec3) -> Vec3 {
        let h1 = relu(&(self.w1 * x + self.b1));
        let h2 = relu(&(self.w2 * h1 + self.b2));
        self.w3 * h2 + self.b3
    }

    pub fn forward_recorded(&self, x: &Vec3) -> (Vec3, Activations) {
        let z1 = self.w1 * x + self.b1;
        let h1 = relu(&z1);
        let z2 = self.w2 * h1 + self.b2;
        let h2 = relu(&z2);
        let y = self.w3 * h2 + self.b3;
        (
            y,
            Activations {
                x: *x,
                z1,
                h1,
                z2,
                h2,
            },
        )
    }

    /// Accumulates `∂/∂θ ⟨dy, h(x)⟩` into `grad` and returns `∂/∂x`.
    pub fn backward(&self, act: &Activations, dy: &Vec3, grad: &mut MlpParams) -> Vec3 {
        grad.w3 += dy * act.h2.transpose();
        grad.b3 += dy;
        let mut d2 = self.w3.transpose() * dy;
        for (d, z) in d2.iter_mut().zip(act.z2.iter()) {
            if *z <= 0.0 {
                *d = 0.0;
            }
        }
        grad.w2 += d2 * act.h1.transpose();
        grad.b2 += d2;
        let mut d1 = self.w2.transpose() * d2;
        for (d, z) in d1.iter_mut().zip(act.z1.iter()) {
            if *z <= 0.0 {
                *d = 0.0;
            }
        }
        grad.w1 += d1 * act.x.transpose();
        grad.b1 += d1;
        self.w1.transpose() * d1
    }

    /// Row-major weights then bias, layer by layer.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(NUM_PARAMS);
        push_rows(&mut out, self.w1.as_slice(), HIDDEN, 3);
        out.extend_from_slice(self.b1.as_slice());
        push_rows(&mut out, self.w2.as_slice(), HIDDEN, HIDDEN);
        out.extend_from_slice(self.b2.as_slice());
        push_rows(&mut out, self.w3.as_slice(), 3, HIDDEN);
        out.extend_from_slice(self.b3.as_slice());
        out
    }

    pub fn from_flat(v: &[f64]) -> Self {
        assert_eq!(v.len(), NUM_PARAMS);
        let mut at = 0;
        let mut take = |n: usize| {
            let s = &v[at..at + n];
            at += n;
            s
        };
        MlpParams {
            w1: W1::from_row_slice(take(HIDDEN * 3)),
            b1: Hidden::from_column_slice(take(HIDDEN)),
            w2: W2::from_row_slice(take(HIDDEN * HIDDEN)),
            b2: Hidden::from_column_slice(take(HIDDEN)),
            w3: W3::from_row_slice(take(3 * HIDDEN)),
            b3: Vec3::from_column_slice(take(3)),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_flat().iter().all(|v| v.is_finite())
    }
}

fn push_rows(out: &mut Vec<f64>, col_major: &[f64], rows: usize, cols: usize) {
    for r in 0..rows {
        for c in 0..cols {
            out.push(col_major[c * rows + r]);
        }
    }
}

fn fill_uniform(dst: &mut [f64], a: f64, rng: &mut ChaCha8Rng) {
    for v in dst {
        *v = rng.random_range(-a..a);
    }
}

/// The two per-level networks.
#[derive(Debug, Clone, PartialEq)]
pub struct GsnStack {
    pub layers: [MlpParams; 2],
}

impl GsnStack {
    pub fn zeros() -> Self {
        GsnStack {
            layers: [MlpParams::zeros(), MlpParams::zeros()],
        }
    }

    pub fn init(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = MlpParams::init(&mut rng);
        let b = MlpParams::init(&mut rng);
        GsnStack { layers: [a, b] }
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = self.layers[0].to_flat();
        v.extend(self.layers[1].to_flat());
        v
    }

    pub fn from_flat(v: &[f64]) -> Self {
        assert_eq!(v.len(), 2 * NUM_PARAMS);
        GsnStack {
            layers: [
                MlpParams::from_flat(&v[..NUM_PARAMS]),
                MlpParams::from_flat(&v[NUM_PARAMS..]),
            ],
        }
    }
}

/// Evaluates one network on one input.
pub fn mlp_forward(theta: &MlpParams, x: &Vec3) -> Vec3 {
    theta.forward(x)
}
