use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{sigmoid, split_train_test, Dataset, Example, Hyper, LearnError, Learner, ModelParams};
use crate::features::FeatureVector;

/// `ln(1 + e^z)` without overflow.
pub(crate) fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Cross-entropy of margin `z` against a 0/1 label.
pub(crate) fn margin_loss(z: f64, positive: bool) -> f64 {
    if positive {
        softplus(-z)
    } else {
        softplus(z)
    }
}

/// Weights stored as `scale * v` so L2 shrinkage costs O(1) per step.
struct ScaledWeights {
    v: Vec<f64>,
    scale: f64,
}

impl ScaledWeights {
    fn zeros(dim: usize) -> Self {
        Self { v: vec![0.0; dim], scale: 1.0 }
    }

    fn dot(&self, x: &FeatureVector) -> f64 {
        self.scale * x.dot(&self.v)
    }

    fn shrink(&mut self, factor: f64) {
        if factor <= 0.0 {
            self.v.iter_mut().for_each(|w| *w = 0.0);
            self.scale = 1.0;
            return;
        }
        self.scale *= factor;
        if self.scale < 1e-9 {
            let s = self.scale;
            self.v.iter_mut().for_each(|w| *w *= s);
            self.scale = 1.0;
        }
    }

    /// `w += coef * x`.
    fn add(&mut self, x: &FeatureVector, coef: f64) {
        let c = coef / self.scale;
        for (i, xi) in x.iter() {
            self.v[i] += c * xi;
        }
    }

    fn into_vec(self) -> Vec<f64> {
        let s = self.scale;
        self.v.into_iter().map(|w| w * s).collect()
    }
}

fn split_params(params: &[f64], dim: usize) -> (&[f64], f64) {
    assert_eq!(params.len(), dim + 1, "parameters are the weights followed by the bias");
    (&params[..dim], params[dim])
}

/// Mean cross-entropy plus `l2/2 * |w|^2`; `params` is `w` then the bias.
pub fn logreg_objective(params: &[f64], data: &Dataset, l2: f64) -> f64 {
    let (w, b) = split_params(params, data.dim);
    let ce: f64 = data.rows.iter().map(|r| margin_loss(r.x.dot(w) + b, r.positive)).sum();
    ce / data.len() as f64 + 0.5 * l2 * w.iter().map(|v| v * v).sum::<f64>()
}

/// Analytic gradient of [`logreg_objective`].
pub fn logreg_gradient(params: &[f64], data: &Dataset, l2: f64) -> Vec<f64> {
    let (w, b) = split_params(params, data.dim);
    let n = data.len() as f64;
    let mut g: Vec<f64> = w.iter().map(|wi| l2 * wi).chain(std::iter::once(0.0)).collect();
    for r in &data.rows {
        let resid = sigmoid(r.x.dot(w) + b) - if r.positive { 1.0 } else { 0.0 };
        for (i, xi) in r.x.iter() {
            g[i] += resid * xi / n;
        }
        g[data.dim] += resid / n;
    }
    g
}

/// Mean hinge loss on labels in {-1, +1} plus `l2/2 * |w|^2`.
pub fn hinge_objective(params: &[f64], data: &Dataset, l2: f64) -> f64 {
    let (w, b) = split_params(params, data.dim);
    let hinge: f64 = data.rows.iter().map(|r| (1.0 - signed(r) * (r.x.dot(w) + b)).max(0.0)).sum();
    hinge / data.len() as f64 + 0.5 * l2 * w.iter().map(|v| v * v).sum::<f64>()
}

/// A subgradient of [`hinge_objective`]; rows exactly on the kink contribute zero.
pub fn hinge_subgradient(params: &[f64], data: &Dataset, l2: f64) -> Vec<f64> {
    let (w, b) = split_params(params, data.dim);
    let n = data.len() as f64;
    let mut g: Vec<f64> = w.iter().map(|wi| l2 * wi).chain(std::iter::once(0.0)).collect();
    for r in &data.rows {
        let y = signed(r);
        if y * (r.x.dot(w) + b) < 1.0 {
            for (i, xi) in r.x.iter() {
                g[i] -= y * xi / n;
            }
            g[data.dim] -= y / n;
        }
    }
    g
}

fn signed(r: &Example) -> f64 {
    if r.positive {
        1.0
    } else {
        -1.0
    }
}

enum Loss {
    Logistic,
    Hinge,
}

/// Seeded minibatch (sub)gradient descent with step `lr / sqrt(1 + epoch)`.
fn sgd(rows: &[&Example], dim: usize, hyper: &Hyper, seed: u64, loss: Loss) -> Result<(Vec<f64>, f64), LearnError> {
    hyper.check_sgd()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = ScaledWeights::zeros(dim);
    let mut b = 0.0;
    let mut order: Vec<usize> = (0..rows.len()).collect();
    for epoch in 0..hyper.epochs {
        let lr = hyper.lr / (1.0 + epoch as f64).sqrt();
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(hyper.batch_size) {
            let m = batch.len() as f64;
            let coefs: Vec<(usize, f64)> = batch
                .iter()
                .map(|&i| {
                    let r = rows[i];
                    let z = w.dot(&r.x) + b;
                    match loss {
                        Loss::Logistic => {
                            total += margin_loss(z, r.positive);
                            (i, -(sigmoid(z) - if r.positive { 1.0 } else { 0.0 }))
                        }
                        Loss::Hinge => {
                            let y = signed(r);
                            total += (1.0 - y * z).max(0.0);
                            (i, if y * z < 1.0 { y } else { 0.0 })
                        }
                    }
                })
                .collect();
            w.shrink(1.0 - lr * hyper.l2);
            for (i, c) in coefs {
                if c != 0.0 {
                    w.add(&rows[i].x, lr * c / m);
                    b += lr * c / m;
                }
            }
        }
        if !total.is_finite() || !b.is_finite() || !w.scale.is_finite() {
            return Err(LearnError::NonFiniteLoss { epoch });
        }
    }
    let w = w.into_vec();
    if w.iter().any(|v| !v.is_finite()) {
        return Err(LearnError::NonFiniteLoss { epoch: hyper.epochs });
    }
    Ok((w, b))
}

/// Logistic link `p = sigmoid(a * margin + b)` with `a > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Platt {
    pub a: f64,
    pub b: f64,
}

impl Platt {
    pub fn apply(&self, margin: f64) -> f64 {
        sigmoid(self.a * margin + self.b)
    }
}

/// Fits a Platt link by Newton's method on the log loss. Returns `None`
/// when the fitted slope is not positive.
pub fn fit_platt(margins: &[f64], positive: &[bool]) -> Option<Platt> {
    if margins.is_empty() {
        return None;
    }
    let nll = |a: f64, b: f64| -> f64 {
        margins.iter().zip(positive).map(|(&m, &y)| margin_loss(a * m + b, y)).sum::<f64>()
            + 1e-6 * (a * a + b * b)
    };
    let (mut a, mut b) = (1.0, 0.0);
    let mut cur = nll(a, b);
    for _ in 0..100 {
        let (mut ga, mut gb, mut haa, mut hab, mut hbb) = (2e-6 * a, 2e-6 * b, 2e-6, 0.0, 2e-6);
        for (&m, &y) in margins.iter().zip(positive) {
            let p = sigmoid(a * m + b);
            let r = p - if y { 1.0 } else { 0.0 };
            let s = p * (1.0 - p);
            ga += r * m;
            gb += r;
            haa += s * m * m;
            hab += s * m;
            hbb += s;
        }
        let det = haa * hbb - hab * hab;
        let (da, db) = if det > 1e-12 {
            ((hbb * ga - hab * gb) / det, (haa * gb - hab * ga) / det)
        } else {
            (ga, gb)
        };
        let mut step = 1.0;
        let mut improved = false;
        while step > 1e-10 {
            let (na, nb) = (a - step * da, b - step * db);
            let next = nll(na, nb);
            if next.is_finite() && next <= cur {
                improved = cur - next > 1e-12;
                a = na;
                b = nb;
                cur = next;
                break;
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }
    (a > 0.0 && a.is_finite() && b.is_finite()).then_some(Platt { a, b })
}

pub struct LogReg;

impl Learner for LogReg {
    fn kind(&self) -> &'static str {
        "logreg"
    }

    fn fit(&self, data: &Dataset, hyper: &Hyper, seed: u64) -> Result<ModelParams, LearnError> {
        let rows: Vec<&Example> = data.rows.iter().collect();
        let (weights, bias) = sgd(&rows, data.dim, hyper, seed, Loss::Logistic)?;
        Ok(ModelParams::Linear { weights, bias, platt: None })
    }
}

/// Hinge-loss linear SVM. Probabilities come from a Platt link fitted on
/// margins of rows held out from a calibration fit; the final weights use
/// all rows.
pub struct LinearSvm;

impl Learner for LinearSvm {
    fn kind(&self) -> &'static str {
        "linear_svm"
    }

    fn fit(&self, data: &Dataset, hyper: &Hyper, seed: u64) -> Result<ModelParams, LearnError> {
        let rows: Vec<&Example> = data.rows.iter().collect();
        let (weights, bias) = sgd(&rows, data.dim, hyper, seed, Loss::Hinge)?;
        let frac = hyper.calibration_fraction;
        let held_out = if frac > 0.0 && frac < 1.0 {
            split_train_test(data, 1.0 - frac, seed ^ 0x5eed, true).ok()
        } else {
            None
        };
        let mut platt = None;
        if let Some((fit_part, calib)) = held_out {
            let fit_rows: Vec<&Example> = fit_part.rows.iter().collect();
            let (w, b) = sgd(&fit_rows, data.dim, hyper, seed, Loss::Hinge)?;
            let margins: Vec<f64> = calib.rows.iter().map(|r| r.x.dot(&w) + b).collect();
            let labels: Vec<bool> = calib.rows.iter().map(|r| r.positive).collect();
            platt = fit_platt(&margins, &labels);
        }
        if platt.is_none() {
            let margins: Vec<f64> = data.rows.iter().map(|r| r.x.dot(&weights) + bias).collect();
            let labels: Vec<bool> = data.rows.iter().map(|r| r.positive).collect();
            platt = fit_platt(&margins, &labels);
        }
        let platt = platt.unwrap_or(Platt { a: 1.0, b: 0.0 });
        Ok(ModelParams::Linear { weights, bias, platt: Some(platt) })
    }
}
