use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::linear::margin_loss;
use super::{sigmoid, Dataset, Hyper, LearnError, Learner, ModelParams};
use crate::features::FeatureVector;

/// One tanh hidden layer and a sigmoid output. `w1[j * hidden + k]` links
/// input `j` to hidden unit `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub dim: usize,
    pub hidden: usize,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
}

impl MlpParams {
    pub fn zeros(dim: usize, hidden: usize) -> Self {
        Self { dim, hidden, w1: vec![0.0; dim * hidden], b1: vec![0.0; hidden], w2: vec![0.0; hidden], b2: 0.0 }
    }

    fn activations(&self, x: &FeatureVector, w1_scale: f64) -> Vec<f64> {
        let h = self.hidden;
        let mut z = vec![0.0; h];
        for (j, v) in x.iter() {
            let col = &self.w1[j * h..(j + 1) * h];
            z.iter_mut().zip(col).for_each(|(zk, w)| *zk += w * v);
        }
        z.iter().zip(&self.b1).map(|(zk, b)| (w1_scale * zk + b).tanh()).collect()
    }

    fn output_margin(&self, a: &[f64]) -> f64 {
        self.b2 + a.iter().zip(&self.w2).map(|(a, w)| a * w).sum::<f64>()
    }

    pub fn predict(&self, x: &FeatureVector) -> f64 {
        sigmoid(self.output_margin(&self.activations(x, 1.0)))
    }

    /// All parameters in the order `w1, b1, w2, b2`.
    pub fn flatten(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.w1.len() + 2 * self.hidden + 1);
        v.extend(&self.w1);
        v.extend(&self.b1);
        v.extend(&self.w2);
        v.push(self.b2);
        v
    }

    pub fn from_flat(dim: usize, hidden: usize, flat: &[f64]) -> Self {
        let n1 = dim * hidden;
        assert_eq!(flat.len(), n1 + 2 * hidden + 1);
        Self {
            dim,
            hidden,
            w1: flat[..n1].to_vec(),
            b1: flat[n1..n1 + hidden].to_vec(),
            w2: flat[n1 + hidden..n1 + 2 * hidden].to_vec(),
            b2: flat[n1 + 2 * hidden],
        }
    }
}

/// Mean cross-entropy plus `l2/2` times the squared norm of both weight layers.
pub fn mlp_loss(params: &MlpParams, data: &Dataset, l2: f64) -> f64 {
    let ce: f64 = data
        .rows
        .iter()
        .map(|r| margin_loss(params.output_margin(&params.activations(&r.x, 1.0)), r.positive))
        .sum();
    let reg: f64 = params.w1.iter().chain(&params.w2).map(|w| w * w).sum();
    ce / data.len() as f64 + 0.5 * l2 * reg
}

/// Analytic gradient of [`mlp_loss`] by backpropagation.
pub fn mlp_gradient(params: &MlpParams, data: &Dataset, l2: f64) -> MlpParams {
    let h = params.hidden;
    let n = data.len() as f64;
    let mut g = MlpParams::zeros(params.dim, h);
    for (gw, w) in g.w1.iter_mut().zip(&params.w1) {
        *gw = l2 * w;
    }
    for (gw, w) in g.w2.iter_mut().zip(&params.w2) {
        *gw = l2 * w;
    }
    for r in &data.rows {
        let a = params.activations(&r.x, 1.0);
        let d_out = (sigmoid(params.output_margin(&a)) - if r.positive { 1.0 } else { 0.0 }) / n;
        g.b2 += d_out;
        for k in 0..h {
            g.w2[k] += d_out * a[k];
            let dz = d_out * params.w2[k] * (1.0 - a[k] * a[k]);
            g.b1[k] += dz;
            for (j, v) in r.x.iter() {
                g.w1[j * h + k] += dz * v;
            }
        }
    }
    g
}

/// Seeded minibatch SGD on [`mlp_loss`]; the first layer is kept as
/// `scale * w1` so L2 shrinkage stays cheap on wide sparse inputs.
pub struct Mlp1;

impl Learner for Mlp1 {
    fn kind(&self) -> &'static str {
        "mlp1"
    }

    fn fit(&self, data: &Dataset, hyper: &Hyper, seed: u64) -> Result<ModelParams, LearnError> {
        if hyper.hidden == 0 {
            return Err(LearnError::InvalidHyper("mlp1 needs at least one hidden unit".into()));
        }
        hyper.check_sgd()?;
        let (dim, h) = (data.dim, hyper.hidden);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = MlpParams::zeros(dim, h);
        let r1 = (6.0 / (dim + h) as f64).sqrt();
        let r2 = (6.0 / (h + 1) as f64).sqrt();
        p.w1.iter_mut().for_each(|w| *w = rng.random_range(-r1..r1));
        p.w2.iter_mut().for_each(|w| *w = rng.random_range(-r2..r2));
        let mut scale = 1.0;
        let mut order: Vec<usize> = (0..data.len()).collect();
        for epoch in 0..hyper.epochs {
            let lr = hyper.lr / (1.0 + epoch as f64).sqrt();
            order.shuffle(&mut rng);
            let mut total = 0.0;
            for batch in order.chunks(hyper.batch_size) {
                let m = batch.len() as f64;
                let mut gw2 = vec![0.0; h];
                let mut gb1 = vec![0.0; h];
                let mut gb2 = 0.0;
                let mut dzs: Vec<(usize, Vec<f64>)> = Vec::with_capacity(batch.len());
                for &i in batch {
                    let r = &data.rows[i];
                    let a = p.activations(&r.x, scale);
                    let z = p.output_margin(&a);
                    total += margin_loss(z, r.positive);
                    let d_out = sigmoid(z) - if r.positive { 1.0 } else { 0.0 };
                    gb2 += d_out;
                    let dz: Vec<f64> = (0..h)
                        .map(|k| {
                            gw2[k] += d_out * a[k];
                            let d = d_out * p.w2[k] * (1.0 - a[k] * a[k]);
                            gb1[k] += d;
                            d
                        })
                        .collect();
                    dzs.push((i, dz));
                }
                let shrink = 1.0 - lr * hyper.l2;
                if shrink <= 0.0 {
                    return Err(LearnError::InvalidHyper("lr * l2 must stay below 1".into()));
                }
                scale *= shrink;
                for (i, dz) in dzs {
                    for (j, v) in data.rows[i].x.iter() {
                        let col = &mut p.w1[j * h..(j + 1) * h];
                        let c = lr * v / (m * scale);
                        col.iter_mut().zip(&dz).for_each(|(w, d)| *w -= c * d);
                    }
                }
                if scale < 1e-9 {
                    p.w1.iter_mut().for_each(|w| *w *= scale);
                    scale = 1.0;
                }
                for k in 0..h {
                    p.w2[k] -= lr * (gw2[k] / m + hyper.l2 * p.w2[k]);
                    p.b1[k] -= lr * gb1[k] / m;
                }
                p.b2 -= lr * gb2 / m;
            }
            if !total.is_finite() || !p.b2.is_finite() {
                return Err(LearnError::NonFiniteLoss { epoch });
            }
        }
        p.w1.iter_mut().for_each(|w| *w *= scale);
        if p.flatten().iter().any(|v| !v.is_finite()) {
            return Err(LearnError::NonFiniteLoss { epoch: hyper.epochs });
        }
        Ok(ModelParams::Mlp(p))
    }
}
