//! Calibration and out-of-distribution separation metrics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredOutcome {
    pub confidence: f64,
    pub predicted: usize,
    pub truth: usize,
}

impl ScoredOutcome {
    pub fn correct(&self) -> bool {
        self.predicted == self.truth
    }
}

/// Uncertainty scores of in-distribution and out-of-distribution inputs.
/// Higher scores are expected on the OoD side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OodScores {
    pub id: Vec<f64>,
    pub ood: Vec<f64>,
}

impl OodScores {
    pub fn new(id: Vec<f64>, ood: Vec<f64>) -> Result<Self> {
        if id.is_empty() || ood.is_empty() {
            return Err(Error::EmptySide);
        }
        if id.iter().chain(&ood).any(|s| !s.is_finite()) {
            return Err(Error::InvalidArgument("scores must be finite".into()));
        }
        Ok(Self { id, ood })
    }

    pub fn swapped(&self) -> Self {
        Self {
            id: self.ood.clone(),
            ood: self.id.clone(),
        }
    }

    fn check(&self) -> Result<()> {
        if self.id.is_empty() || self.ood.is_empty() {
            return Err(Error::EmptySide);
        }
        Ok(())
    }
}

/// Expected calibration error over `bins` equal-width, right-inclusive bins;
/// a confidence of exactly 0 falls in the first bin.
pub fn ece(outcomes: &[ScoredOutcome], bins: usize) -> Result<f64> {
    if outcomes.is_empty() {
        return Err(Error::EmptyInput);
    }
    if bins == 0 {
        return Err(Error::InvalidArgument("bins must be at least 1".into()));
    }
    let mut count = vec![0usize; bins];
    let mut hits = vec![0usize; bins];
    let mut conf = vec![0.0f64; bins];
    for o in outcomes {
        if !(0.0..=1.0).contains(&o.confidence) {
            return Err(Error::InvalidArgument(format!(
                "confidence {} outside [0, 1]",
                o.confidence
            )));
        }
        let k = ((o.confidence * bins as f64).ceil() as usize).clamp(1, bins) - 1;
        count[k] += 1;
        hits[k] += o.correct() as usize;
        conf[k] += o.confidence;
    }
    let total = outcomes.len() as f64;
    Ok((0..bins)
        .filter(|&k| count[k] > 0)
        .map(|k| {
            let c = count[k] as f64;
            (hits[k] as f64 / c - conf[k] / c).abs() * (c / total)
        })
        .sum())
}

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

/// Probability that a random OoD score exceeds a random iD score, ties ½.
pub fn roc_auc(s: &OodScores) -> Result<f64> {
    s.check()?;
    let id = sorted(&s.id);
    // twice the Mann-Whitney statistic, kept integral
    let mut twice_u: u64 = 0;
    for &x in &s.ood {
        let below = id.partition_point(|&v| v < x) as u64;
        let upto = id.partition_point(|&v| v <= x) as u64;
        twice_u += 2 * below + (upto - below);
    }
    let pairs = 2 * (s.id.len() as u64) * (s.ood.len() as u64);
    Ok(twice_u as f64 / pairs as f64)
}

/// Average precision with OoD as the positive class: Σ (R_k − R_{k−1}) P_k
/// over distinct thresholds taken from the highest score down.
pub fn pr_auc(s: &OodScores) -> Result<f64> {
    s.check()?;
    let mut all: Vec<(f64, bool)> = s
        .id
        .iter()
        .map(|&v| (v, false))
        .chain(s.ood.iter().map(|&v| (v, true)))
        .collect();
    all.sort_by(|a, b| b.0.total_cmp(&a.0));
    let positives = s.ood.len() as f64;
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut prev_recall = 0.0;
    let mut ap = 0.0;
    let mut i = 0;
    while i < all.len() {
        let t = all[i].0;
        while i < all.len() && all[i].0 == t {
            if all[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let recall = tp as f64 / positives;
        let precision = tp as f64 / (tp + fp) as f64;
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    Ok(ap)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyShift {
    pub id_mean: f64,
    pub id_std: f64,
    pub ood_mean: f64,
    pub ood_std: f64,
    /// OoD mean minus iD mean.
    pub gap: f64,
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn entropy_shift(id_entropies: &[f64], ood_entropies: &[f64]) -> Result<EntropyShift> {
    if id_entropies.is_empty() || ood_entropies.is_empty() {
        return Err(Error::EmptySide);
    }
    let (id_mean, id_std) = mean_std(id_entropies);
    let (ood_mean, ood_std) = mean_std(ood_entropies);
    Ok(EntropyShift {
        id_mean,
        id_std,
        ood_mean,
        ood_std,
        gap: ood_mean - id_mean,
    })
}
