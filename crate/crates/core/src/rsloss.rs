//! Random-set training loss and a small deterministic trainer.
//!
//! Predicted beliefs are `b̂ = σ(z)` for one logit per budget set. The loss is
//! `BCE(b̂, g) + α·Mr + β·Ms`, where the masses `m̂` are the budget-restricted
//! Moebius inverse of `b̂`, `Mr` is the batch mean of `Σ max(0, −m̂(A))` and
//! `Ms = max(0, batch mean of Σ m̂(A) − 1)`.

use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::belief::{encode_ground_truth, pignistic, repaired_mass_from_belief, BeliefFunction, ProbabilityVector};
use crate::error::{Error, Result};
use crate::frame::Budget;
use crate::lattice::{subset_moebius, subset_moebius_transpose};
use crate::measures::{shannon_entropy, LogBase};
use crate::seeding::{mix, stream_rng};
use crate::TOL;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    pub alpha: f64,
    pub beta: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            alpha: 1e-3,
            beta: 1e-3,
        }
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn clamp_prob(b: f64) -> f64 {
    b.clamp(TOL.sigmoid_clamp, 1.0 - TOL.sigmoid_clamp)
}

fn check_shapes(a: &[Vec<f64>], b: &[Vec<f64>], width: Option<usize>) -> Result<usize> {
    if a.is_empty() {
        return Err(Error::ShapeMismatch("empty batch".into()));
    }
    if a.len() != b.len() {
        return Err(Error::ShapeMismatch(format!(
            "batch of {} predictions against {} targets",
            a.len(),
            b.len()
        )));
    }
    let k = width.unwrap_or(a[0].len());
    if k == 0 || a.iter().chain(b).any(|row| row.len() != k) {
        return Err(Error::ShapeMismatch(format!("every row must have {k} entries")));
    }
    Ok(k)
}

/// Mean binary cross-entropy over the batch and the budget sets.
pub fn rs_bce(pred_beliefs: &[Vec<f64>], gt: &[Vec<f64>]) -> Result<f64> {
    let k = check_shapes(pred_beliefs, gt, None)?;
    let mut total = 0.0;
    for (p, g) in pred_beliefs.iter().zip(gt) {
        for (&b, &y) in p.iter().zip(g) {
            let b = clamp_prob(b);
            total -= y * b.ln() + (1.0 - y) * (1.0 - b).ln();
        }
    }
    Ok(total / (pred_beliefs.len() * k) as f64)
}

/// `(Mr, Ms)` of a batch of predicted masses.
pub fn mass_regularizers(pred_masses: &[Vec<f64>]) -> (f64, f64) {
    if pred_masses.is_empty() {
        return (0.0, 0.0);
    }
    let b = pred_masses.len() as f64;
    let mr = pred_masses
        .iter()
        .map(|m| m.iter().map(|v| (-v).max(0.0)).sum::<f64>())
        .sum::<f64>()
        / b;
    let sum = pred_masses.iter().map(|m| m.iter().sum::<f64>()).sum::<f64>() / b;
    (mr, (sum - 1.0).max(0.0))
}

fn forward(budget: &Budget, logits: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let beliefs: Vec<Vec<f64>> = logits
        .iter()
        .map(|z| z.iter().map(|&v| sigmoid(v)).collect())
        .collect();
    let masses = beliefs.iter().map(|b| subset_moebius(budget, b)).collect();
    (beliefs, masses)
}

pub fn rs_total_loss(budget: &Budget, logits: &[Vec<f64>], gt: &[Vec<f64>], cfg: &LossConfig) -> Result<f64> {
    check_shapes(logits, gt, Some(budget.len()))?;
    let (beliefs, masses) = forward(budget, logits);
    let (mr, ms) = mass_regularizers(&masses);
    Ok(rs_bce(&beliefs, gt)? + cfg.alpha * mr + cfg.beta * ms)
}

/// Gradient of [`rs_total_loss`] with respect to the logits. Hinges and the
/// sigmoid clamp contribute a zero subgradient.
pub fn loss_gradient(budget: &Budget, logits: &[Vec<f64>], gt: &[Vec<f64>], cfg: &LossConfig) -> Result<Vec<Vec<f64>>> {
    let k = check_shapes(logits, gt, Some(budget.len()))?;
    let (beliefs, masses) = forward(budget, logits);
    let batch = logits.len() as f64;
    let scale = 1.0 / (batch * k as f64);
    let sum = masses.iter().map(|m| m.iter().sum::<f64>()).sum::<f64>() / batch;
    let ms_active = sum - 1.0 > 0.0;
    Ok(beliefs
        .iter()
        .zip(&masses)
        .zip(gt)
        .map(|((b, m), g)| {
            let dm: Vec<f64> = m
                .iter()
                .map(|&v| {
                    let r = if v < 0.0 { -cfg.alpha / batch } else { 0.0 };
                    r + if ms_active { cfg.beta / batch } else { 0.0 }
                })
                .collect();
            let db = subset_moebius_transpose(budget, &dm);
            b.iter()
                .zip(g)
                .zip(&db)
                .map(|((&s, &y), &d)| {
                    let clamped = !(TOL.sigmoid_clamp..=1.0 - TOL.sigmoid_clamp).contains(&s);
                    let bce = if clamped { 0.0 } else { (s - y) * scale };
                    bce + d * s * (1.0 - s)
                })
                .collect()
        })
        .collect())
}

/// Labelled 2-D points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyData {
    pub n_classes: usize,
    pub points: Vec<[f64; 2]>,
    pub labels: Vec<usize>,
}

impl ToyData {
    pub fn translated(&self, by: [f64; 2]) -> Self {
        Self {
            n_classes: self.n_classes,
            points: self.points.iter().map(|p| [p[0] + by[0], p[1] + by[1]]).collect(),
            labels: self.labels.clone(),
        }
    }
}

/// Isotropic Gaussian blobs centred on a circle of the given radius.
pub fn gaussian_blobs(n_classes: usize, per_class: usize, radius: f64, spread: f64, seed: u64, stream: u64) -> Result<ToyData> {
    if n_classes == 0 {
        return Err(Error::EmptyFrame);
    }
    let normal = Normal::new(0.0, spread).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut rng = stream_rng(mix(seed, 0x626c_6f62), stream);
    let mut points = Vec::with_capacity(n_classes * per_class);
    let mut labels = Vec::with_capacity(n_classes * per_class);
    for i in 0..n_classes * per_class {
        let c = i % n_classes;
        let angle = std::f64::consts::TAU * c as f64 / n_classes as f64;
        points.push([
            radius * angle.cos() + normal.sample(&mut rng),
            radius * angle.sin() + normal.sample(&mut rng),
        ]);
        labels.push(c);
    }
    Ok(ToyData {
        n_classes,
        points,
        labels,
    })
}

/// `x → W₂ φ(W₁x + b₁) + b₂` with the bump `φ(a) = exp(−a²/2)`, one output
/// logit per budget set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyModel {
    pub hidden: usize,
    pub outputs: usize,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

fn bump(a: f64) -> f64 {
    (-0.5 * a * a).exp()
}

impl ToyModel {
    pub fn init(hidden: usize, outputs: usize, seed: u64) -> Self {
        let mut rng = stream_rng(mix(seed, 0x696e_6974), 0);
        let w = Normal::new(0.0, 0.5).expect("valid");
        let b = Normal::new(0.0, 1.0).expect("valid");
        let mut draw = |d: &Normal<f64>, count: usize| -> Vec<f64> { (0..count).map(|_| d.sample(&mut rng)).collect() };
        let w1 = draw(&w, hidden * 2);
        let b1 = draw(&b, hidden);
        let w2 = draw(&w, outputs * hidden);
        Self {
            hidden,
            outputs,
            w1,
            b1,
            w2,
            b2: vec![0.0; outputs],
        }
    }

    fn hidden_pre(&self, x: [f64; 2]) -> Vec<f64> {
        (0..self.hidden)
            .map(|j| self.w1[2 * j] * x[0] + self.w1[2 * j + 1] * x[1] + self.b1[j])
            .collect()
    }

    pub fn logits(&self, x: [f64; 2]) -> Vec<f64> {
        let h: Vec<f64> = self.hidden_pre(x).into_iter().map(bump).collect();
        (0..self.outputs)
            .map(|o| self.b2[o] + (0..self.hidden).map(|j| self.w2[o * self.hidden + j] * h[j]).sum::<f64>())
            .collect()
    }

    /// Pignistic probability of the repaired mass of the predicted beliefs.
    pub fn pignistic(&self, budget: &Budget, x: [f64; 2]) -> Result<ProbabilityVector> {
        let beliefs = self.logits(x).into_iter().map(sigmoid).collect();
        let mass = repaired_mass_from_belief(&BeliefFunction::new(budget.clone(), beliefs)?)?;
        pignistic(&mass)
    }

    /// Parameter gradient for one input given `∂L/∂logits`.
    fn backward(&self, x: [f64; 2], dlogits: &[f64]) -> ToyModel {
        let a = self.hidden_pre(x);
        let h: Vec<f64> = a.iter().map(|&v| bump(v)).collect();
        let mut g = ToyModel {
            hidden: self.hidden,
            outputs: self.outputs,
            w1: vec![0.0; self.w1.len()],
            b1: vec![0.0; self.b1.len()],
            w2: vec![0.0; self.w2.len()],
            b2: dlogits.to_vec(),
        };
        for j in 0..self.hidden {
            let mut dh = 0.0;
            for o in 0..self.outputs {
                g.w2[o * self.hidden + j] = dlogits[o] * h[j];
                dh += dlogits[o] * self.w2[o * self.hidden + j];
            }
            let da = dh * (-a[j] * h[j]);
            g.w1[2 * j] = da * x[0];
            g.w1[2 * j + 1] = da * x[1];
            g.b1[j] = da;
        }
        g
    }

    fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.w1
            .iter_mut()
            .chain(self.b1.iter_mut())
            .chain(self.w2.iter_mut())
            .chain(self.b2.iter_mut())
    }

    fn params(&self) -> impl Iterator<Item = &f64> {
        self.w1.iter().chain(&self.b1).chain(&self.w2).chain(&self.b2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub hidden: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub loss: LossConfig,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden: 16,
            epochs: 2000,
            learning_rate: 2.0,
            loss: LossConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyMetrics {
    pub epochs: usize,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub id_entropy_mean: f64,
    pub ood_entropy_mean: f64,
}

fn accuracy_and_entropy(model: &ToyModel, budget: &Budget, data: &ToyData) -> Result<(f64, f64)> {
    let res = data
        .points
        .par_iter()
        .zip(data.labels.par_iter())
        .map(|(&x, &c)| {
            let p = model.pignistic(budget, x)?;
            Ok(((p.argmax() == c) as usize, shannon_entropy(&p, LogBase::E)))
        })
        .collect::<Result<Vec<_>>>()?;
    let n = data.points.len().max(1) as f64;
    let hits: usize = res.iter().map(|r| r.0).sum();
    let entropy: f64 = res.iter().map(|r| r.1).sum();
    Ok((hits as f64 / n, entropy / n))
}

/// Full-batch gradient descent with a fixed step. Returns the trained model and
/// pignistic accuracy / entropy on the training set, the held-out iD set and
/// the shifted set.
pub fn train_toy(
    train: &ToyData,
    test_id: &ToyData,
    test_ood: &ToyData,
    budget: &Budget,
    cfg: &TrainConfig,
) -> Result<(ToyModel, ToyMetrics)> {
    if !budget.contains_all_singletons() {
        return Err(Error::InvalidArgument("budget must contain every singleton".into()));
    }
    if train.points.is_empty() || train.points.len() != train.labels.len() {
        return Err(Error::ShapeMismatch("training points and labels differ in length".into()));
    }
    if train.n_classes != budget.n() {
        return Err(Error::FrameMismatch {
            expected: budget.n(),
            found: train.n_classes,
        });
    }
    let gt: Vec<Vec<f64>> = train
        .labels
        .iter()
        .map(|&c| encode_ground_truth(budget, c))
        .collect::<Result<_>>()?;
    let mut model = ToyModel::init(cfg.hidden, budget.len(), cfg.seed);
    let mut initial_loss = f64::NAN;
    let mut loss = f64::NAN;
    for epoch in 0..=cfg.epochs {
        let logits: Vec<Vec<f64>> = train.points.par_iter().map(|&x| model.logits(x)).collect();
        loss = rs_total_loss(budget, &logits, &gt, &cfg.loss)?;
        if !loss.is_finite() {
            return Err(Error::DivergedLoss(epoch));
        }
        if epoch == 0 {
            initial_loss = loss;
        }
        if epoch == cfg.epochs {
            break;
        }
        let dlogits = loss_gradient(budget, &logits, &gt, &cfg.loss)?;
        let grads: Vec<ToyModel> = train
            .points
            .par_iter()
            .zip(dlogits.par_iter())
            .map(|(&x, d)| model.backward(x, d))
            .collect();
        let mut total = vec![0.0; model.params().count()];
        for g in &grads {
            for (t, v) in total.iter_mut().zip(g.params()) {
                *t += v;
            }
        }
        for (p, g) in model.params_mut().zip(&total) {
            *p -= cfg.learning_rate * g;
        }
        if model.params().any(|p| !p.is_finite()) {
            return Err(Error::DivergedLoss(epoch));
        }
    }
    let (train_accuracy, _) = accuracy_and_entropy(&model, budget, train)?;
    let (test_accuracy, id_entropy_mean) = accuracy_and_entropy(&model, budget, test_id)?;
    let (_, ood_entropy_mean) = accuracy_and_entropy(&model, budget, test_ood)?;
    Ok((
        model,
        ToyMetrics {
            epochs: cfg.epochs,
            initial_loss,
            final_loss: loss,
            train_accuracy,
            test_accuracy,
            id_entropy_mean,
            ood_entropy_mean,
        },
    ))
}

/// The standard toy experiment: three blobs, singletons and pairs, a held-out
/// iD set and the same set translated by `shift` on both axes.
pub fn toy_experiment(n_classes: usize, per_class: usize, shift: f64, cfg: &TrainConfig) -> Result<(ToyModel, ToyMetrics)> {
    let budget = Budget::up_to_cardinality(n_classes, 2.min(n_classes))?;
    let train = gaussian_blobs(n_classes, per_class, 3.0, 0.5, cfg.seed, 0)?;
    let test = gaussian_blobs(n_classes, per_class, 3.0, 0.5, cfg.seed, 1)?;
    let ood = test.translated([shift, shift]);
    train_toy(&train, &test, &ood, &budget, cfg)
}
