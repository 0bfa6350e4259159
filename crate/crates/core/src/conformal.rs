//! Inductive conformal prediction over belief predictions.
//!
//! The non-conformity of class `c` is `1 − Pl({c})`. P-values are smoothed
//! and count the test point itself among the ties:
//! `p = (#{s_j > s} + u·(#{s_j = s} + 1)) / (q + 1)`, with one uniform `u`
//! per (instance, class) drawn from a stream derived from the seed and the
//! instance position.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::belief::{plausibility, MassFunction};
use crate::error::{Error, Result};
use crate::frame::{Budget, FocalSet};
use crate::seeding::{mix, stream_rng};

/// Tie-count convention echoed into coverage reports.
pub const TIE_CONVENTION: &str = "test point included in the equality count";

pub fn nonconformity(m: &MassFunction, class: usize) -> Result<f64> {
    if class >= m.n() {
        return Err(Error::OutOfRange {
            index: class,
            n: m.n(),
        });
    }
    Ok((1.0 - plausibility(m, FocalSet::singleton(class))?).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConformalCalibration {
    scores: Vec<f64>,
}

impl ConformalCalibration {
    pub fn from_scores(mut scores: Vec<f64>) -> Result<Self> {
        if scores.is_empty() {
            return Err(Error::EmptyInput);
        }
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidArgument("non-finite calibration score".into()));
        }
        scores.sort_by(f64::total_cmp);
        Ok(Self { scores })
    }

    /// Ascending calibration scores.
    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn q(&self) -> usize {
        self.scores.len()
    }

    pub fn p_value(&self, s: f64, u: f64) -> f64 {
        let lt = self.scores.partition_point(|&v| v < s);
        let le = self.scores.partition_point(|&v| v <= s);
        let greater = (self.q() - le) as f64;
        let equal = (le - lt) as f64;
        (greater + u * (equal + 1.0)) / (self.q() as f64 + 1.0)
    }

    /// Percentile-threshold view: the `⌈(q+1)(1−ε)⌉`-th smallest score, or
    /// `None` when that rank exceeds `q` (every class would be kept).
    pub fn threshold(&self, epsilon: f64) -> Option<f64> {
        let rank = ((self.q() as f64 + 1.0) * (1.0 - epsilon)).ceil() as usize;
        (rank >= 1 && rank <= self.q()).then(|| self.scores[rank - 1])
    }
}

pub fn calibrate(masses: &[MassFunction], labels: &[usize]) -> Result<ConformalCalibration> {
    if masses.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: masses.len(),
            right: labels.len(),
        });
    }
    let scores = masses
        .iter()
        .zip(labels)
        .map(|(m, &c)| nonconformity(m, c))
        .collect::<Result<Vec<_>>>()?;
    ConformalCalibration::from_scores(scores)
}

/// The uniforms used for instance `index`, one per class.
pub fn tie_uniforms(seed: u64, index: u64, n: usize) -> Vec<f64> {
    let mut rng = stream_rng(seed, index);
    (0..n).map(|_| rng.random::<f64>()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionSet {
    pub id: String,
    pub members: Vec<usize>,
    pub p_values: Vec<f64>,
    pub epsilon: f64,
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must lie in (0, 1), got {epsilon}"
        )));
    }
    Ok(())
}

/// Prediction set of one instance at position `index` of its batch.
pub fn predict_set(
    cal: &ConformalCalibration,
    id: &str,
    m: &MassFunction,
    epsilon: f64,
    seed: u64,
    index: u64,
) -> Result<PredictionSet> {
    check_epsilon(epsilon)?;
    let u = tie_uniforms(seed, index, m.n());
    let p_values = (0..m.n())
        .map(|c| Ok(cal.p_value(nonconformity(m, c)?, u[c])))
        .collect::<Result<Vec<_>>>()?;
    let members = (0..m.n()).filter(|&c| p_values[c] > epsilon).collect();
    Ok(PredictionSet {
        id: id.to_string(),
        members,
        p_values,
        epsilon,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassCoverage {
    pub class: usize,
    pub count: usize,
    pub coverage: Option<f64>,
    pub avg_set_size: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub epsilon: f64,
    pub seed: u64,
    pub calibration_size: usize,
    pub test_size: usize,
    pub coverage: f64,
    pub avg_set_size: f64,
    pub empty_sets: usize,
    pub threshold: Option<f64>,
    pub tie_convention: String,
    pub per_class: Vec<ClassCoverage>,
}

pub fn predict_sets(
    cal: &ConformalCalibration,
    ids: &[String],
    masses: &[MassFunction],
    epsilon: f64,
    seed: u64,
) -> Result<Vec<PredictionSet>> {
    if ids.len() != masses.len() {
        return Err(Error::LengthMismatch {
            left: ids.len(),
            right: masses.len(),
        });
    }
    ids.par_iter()
        .zip(masses.par_iter())
        .enumerate()
        .map(|(i, (id, m))| predict_set(cal, id, m, epsilon, seed, i as u64))
        .collect()
}

pub fn coverage_report(
    cal: &ConformalCalibration,
    masses: &[MassFunction],
    labels: &[usize],
    epsilon: f64,
    seed: u64,
) -> Result<CoverageReport> {
    if masses.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: masses.len(),
            right: labels.len(),
        });
    }
    if masses.is_empty() {
        return Err(Error::EmptyInput);
    }
    let ids: Vec<String> = (0..masses.len()).map(|i| i.to_string()).collect();
    let sets = predict_sets(cal, &ids, masses, epsilon, seed)?;
    coverage_from_sets(cal, &sets, labels, seed)
}

/// Aggregates already computed prediction sets against their labels.
pub fn coverage_from_sets(
    cal: &ConformalCalibration,
    sets: &[PredictionSet],
    labels: &[usize],
    seed: u64,
) -> Result<CoverageReport> {
    if sets.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: sets.len(),
            right: labels.len(),
        });
    }
    if sets.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = sets[0].p_values.len();
    let mut count = vec![0usize; n];
    let mut hit = vec![0usize; n];
    let mut size = vec![0usize; n];
    let (mut hits, mut total_size, mut empty) = (0usize, 0usize, 0usize);
    for (s, &c) in sets.iter().zip(labels) {
        if c >= n {
            return Err(Error::OutOfRange { index: c, n });
        }
        let covered = s.members.contains(&c);
        count[c] += 1;
        hit[c] += covered as usize;
        size[c] += s.members.len();
        hits += covered as usize;
        total_size += s.members.len();
        empty += s.members.is_empty() as usize;
    }
    let t = sets.len() as f64;
    let epsilon = sets[0].epsilon;
    Ok(CoverageReport {
        epsilon,
        seed,
        calibration_size: cal.q(),
        test_size: sets.len(),
        coverage: hits as f64 / t,
        avg_set_size: total_size as f64 / t,
        empty_sets: empty,
        threshold: cal.threshold(epsilon),
        tie_convention: TIE_CONVENTION.into(),
        per_class: (0..n)
            .map(|c| ClassCoverage {
                class: c,
                count: count[c],
                coverage: (count[c] > 0).then(|| hit[c] as f64 / count[c] as f64),
                avg_set_size: (count[c] > 0).then(|| size[c] as f64 / count[c] as f64),
            })
            .collect(),
    })
}

/// Exchangeable synthetic belief predictions: the true class is uniform, the
/// logits are Gaussian with a boost on the true class, singleton masses follow
/// their softmax and a random share in `[0, 0.3)` goes to the whole frame.
pub fn synthetic_beliefs(
    n: usize,
    count: usize,
    signal: f64,
    seed: u64,
    stream: u64,
) -> Result<(Vec<MassFunction>, Vec<usize>)> {
    if n < 1 {
        return Err(Error::EmptyFrame);
    }
    let mut sets: Vec<FocalSet> = (0..n).map(FocalSet::singleton).collect();
    if n > 1 {
        sets.push(FocalSet::universe(n));
    }
    let budget = Budget::new(n, sets)?;
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut rng = stream_rng(mix(seed, 0x636f_6e66), stream);
    let mut masses = Vec::with_capacity(count);
    let mut labels = Vec::with_capacity(count);
    for _ in 0..count {
        let c = rng.random_range(0..n);
        let z: Vec<f64> = (0..n)
            .map(|k| normal.sample(&mut rng) + if k == c { signal } else { 0.0 })
            .collect();
        let w = if n > 1 { 0.3 * rng.random::<f64>() } else { 0.0 };
        let zmax = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = z.iter().map(|v| (v - zmax).exp()).collect();
        let sum: f64 = e.iter().sum();
        let mut m: Vec<f64> = e.iter().map(|v| (1.0 - w) * v / sum).collect();
        if n > 1 {
            m.push(w);
        }
        masses.push(MassFunction::from_raw(budget.clone(), m)?);
        labels.push(c);
    }
    Ok((masses, labels))
}
