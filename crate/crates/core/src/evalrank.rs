//! The evaluation metric `E = d + λ·NS`, dataset reports and model ranking.
//!
//! Every prediction kind is first lifted to a credal set and a mass function:
//!
//! * point: the single distribution, no mass on non-singletons (`NS = 0`);
//! * samples: lower envelope on the lower-probability budget, Moebius inverse
//!   and repair;
//! * belief: Moebius inverse of the belief vector and repair;
//! * interval: reachable intervals for the vertices, the implied lower
//!   probabilities on the budget for the mass.
//!
//! `d` is the smallest divergence from the one-hot truth to any vertex, `NS`
//! the non-specificity of the mass, and the predicted class the pignistic
//! argmax (lowest index on ties).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::belief::{pignistic, repaired_mass_from_belief, MassFunction, ProbabilityVector};
use crate::credal::{
    credal_from_intervals, credal_vertices_approx, credal_vertices_exact, reachable_intervals,
    CredalSet, MAX_VERTEX_CLASSES,
};
use crate::error::{Error, Result};
use crate::frame::Budget;
use crate::io::{Prediction, PredictionRecord};
use crate::lowerprob::{lower_from_samples, mass_from_lower, LowerProbability};
use crate::measures::{min_divergence_to_credal, non_specificity, MeasureConfig, VertexMode};

/// Tolerance used when matching λ values across reports and grids.
pub const LAMBDA_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub measures: MeasureConfig,
    /// Largest focal-set cardinality in the fallback lower-probability budget
    /// (used when a dataset declares no budget). `None` picks the full
    /// powerset for frames of up to eight classes and pairs beyond.
    pub lower_max_cardinality: Option<usize>,
    /// Replace every sample cloud by its mean before evaluation.
    pub collapse_samples: bool,
}

/// Budget on which lower probabilities of sample and interval predictions live.
pub fn lower_probability_budget(
    n: usize,
    declared: Option<&Budget>,
    cfg: &EvalConfig,
) -> Result<Budget> {
    if let Some(b) = declared {
        return Ok(b.clone());
    }
    let k = cfg
        .lower_max_cardinality
        .unwrap_or(if n <= MAX_VERTEX_CLASSES { n } else { 2 });
    Budget::up_to_cardinality(n, k)
}

/// Canonical credal view of one prediction.
#[derive(Debug, Clone)]
pub struct Lifted {
    pub credal: CredalSet,
    pub mass: MassFunction,
    pub pignistic: ProbabilityVector,
}

fn vertices(m: &MassFunction, mode: VertexMode) -> Result<CredalSet> {
    match mode {
        VertexMode::Exact => credal_vertices_exact(m),
        VertexMode::Approx => credal_vertices_approx(m),
    }
}

/// The mass function a prediction stands for.
pub fn lift_mass(pred: &Prediction, cfg: &EvalConfig, lower_budget: &Budget) -> Result<MassFunction> {
    if pred.n() != lower_budget.n() {
        return Err(Error::FrameMismatch {
            expected: lower_budget.n(),
            found: pred.n(),
        });
    }
    match pred {
        Prediction::Point(p) => MassFunction::bayesian(p),
        Prediction::Samples(cloud) if cfg.collapse_samples => MassFunction::bayesian(&cloud.mean()),
        Prediction::Samples(cloud) => mass_from_lower(&lower_from_samples(cloud, lower_budget)?),
        Prediction::Belief { belief, .. } => repaired_mass_from_belief(belief),
        Prediction::Interval(iv) => {
            let iv = reachable_intervals(iv)?;
            let lower = lower_budget.sets().iter().map(|&a| iv.lower_prob_of(a)).collect();
            mass_from_lower(&LowerProbability::new(lower_budget.clone(), lower)?)
        }
    }
}

pub fn lift(pred: &Prediction, cfg: &EvalConfig, lower_budget: &Budget) -> Result<Lifted> {
    let mass = lift_mass(pred, cfg, lower_budget)?;
    let (credal, pignistic) = match pred {
        Prediction::Point(p) => (CredalSet::point(p.clone()), p.clone()),
        Prediction::Samples(cloud) if cfg.collapse_samples => {
            let p = cloud.mean();
            (CredalSet::point(p.clone()), p)
        }
        Prediction::Interval(iv) if iv.len() <= MAX_VERTEX_CLASSES => {
            (credal_from_intervals(&reachable_intervals(iv)?)?, pignistic(&mass)?)
        }
        _ => (vertices(&mass, cfg.measures.vertex_mode)?, pignistic(&mass)?),
    };
    Ok(Lifted {
        credal,
        mass,
        pignistic,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub id: String,
    pub truth: usize,
    pub predicted: usize,
    pub correct: bool,
    pub d: f64,
    pub ns: f64,
    pub e: f64,
}

pub fn evaluate_instance(
    id: &str,
    pred: &Prediction,
    truth: usize,
    lambda: f64,
    cfg: &EvalConfig,
    lower_budget: &Budget,
) -> Result<EvalRow> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "lambda must be finite and non-negative, got {lambda}"
        )));
    }
    let n = pred.n();
    if n != lower_budget.n() {
        return Err(Error::FrameMismatch {
            expected: lower_budget.n(),
            found: n,
        });
    }
    let y = ProbabilityVector::one_hot(n, truth)?;
    let lifted = lift(pred, cfg, lower_budget)?;
    let d = min_divergence_to_credal(&y, &lifted.credal, &cfg.measures)?;
    let ns = match pred {
        Prediction::Point(_) => 0.0,
        _ => non_specificity(&lifted.mass, cfg.measures.ns_base)?,
    };
    let predicted = lifted.pignistic.argmax();
    Ok(EvalRow {
        id: id.to_string(),
        truth,
        predicted,
        correct: predicted == truth,
        d,
        ns,
        e: d + lambda * ns,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean_d: f64,
    pub std_d: f64,
    pub mean_ns: f64,
    pub std_ns: f64,
    pub mean_e: f64,
    pub std_e: f64,
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

impl Summary {
    /// Population statistics; `None` for an empty slice.
    pub fn of(rows: &[&EvalRow]) -> Option<Self> {
        if rows.is_empty() {
            return None;
        }
        let (mean_d, std_d) = mean_std(rows.iter().map(|r| r.d));
        let (mean_ns, std_ns) = mean_std(rows.iter().map(|r| r.ns));
        let (mean_e, std_e) = mean_std(rows.iter().map(|r| r.e));
        Some(Self {
            count: rows.len(),
            mean_d,
            std_d,
            mean_ns,
            std_ns,
            mean_e,
            std_e,
        })
    }
}

/// Conventions that affect reported numbers, echoed verbatim into reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conventions {
    pub moebius: String,
    pub mass_repair: String,
    pub approx_vertex_order: String,
    pub argmax_tie_break: String,
    pub std: String,
}

impl Default for Conventions {
    fn default() -> Self {
        Self {
            moebius: "budget-restricted subset order".into(),
            mass_repair: "clamp negatives; shortfall to universe; excess rescaled".into(),
            approx_vertex_order: "pinned class first/last, others in frame order".into(),
            argmax_tie_break: "lowest class index".into(),
            std: "population".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model: String,
    pub lambda: f64,
    pub config: EvalConfig,
    pub conventions: Conventions,
    pub overall: Summary,
    pub correct: Option<Summary>,
    pub incorrect: Option<Summary>,
    pub rows: Vec<EvalRow>,
}

impl EvalReport {
    /// Aggregates rows, recomputing `e` for `lambda`.
    pub fn from_rows(
        model: &str,
        lambda: f64,
        config: EvalConfig,
        mut rows: Vec<EvalRow>,
    ) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyInput);
        }
        for r in &mut rows {
            r.e = r.d + lambda * r.ns;
        }
        let all: Vec<&EvalRow> = rows.iter().collect();
        let (cc, icc): (Vec<&EvalRow>, Vec<&EvalRow>) = rows.iter().partition(|r| r.correct);
        Ok(Self {
            model: model.to_string(),
            lambda,
            config,
            conventions: Conventions::default(),
            overall: Summary::of(&all).expect("non-empty"),
            correct: Summary::of(&cc),
            incorrect: Summary::of(&icc),
            rows,
        })
    }

    /// The same rows re-aggregated at another λ.
    pub fn at_lambda(&self, lambda: f64) -> Result<Self> {
        Self::from_rows(&self.model, lambda, self.config, self.rows.clone())
    }
}

/// Evaluates every record against its label; rows keep input order.
pub fn evaluate_dataset(
    model: &str,
    records: &[PredictionRecord],
    labels: &[usize],
    lambda: f64,
    cfg: &EvalConfig,
    lower_budget: &Budget,
) -> Result<EvalReport> {
    if records.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: records.len(),
            right: labels.len(),
        });
    }
    if records.is_empty() {
        return Err(Error::EmptyInput);
    }
    let rows = records
        .par_iter()
        .zip(labels.par_iter())
        .map(|(r, &t)| evaluate_instance(&r.id, &r.prediction, t, lambda, cfg, lower_budget))
        .collect::<Result<Vec<_>>>()?;
    EvalReport::from_rows(model, lambda, *cfg, rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    pub model: String,
    pub mean_e: f64,
    pub mean_d: f64,
    pub mean_ns: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankLevel {
    pub lambda: f64,
    pub order: Vec<RankEntry>,
}

impl RankLevel {
    pub fn models(&self) -> Vec<&str> {
        self.order.iter().map(|e| e.model.as_str()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    pub grid: Vec<f64>,
    pub levels: Vec<RankLevel>,
}

/// Orders models by ascending mean `E` at every grid λ; ties go by name.
pub fn rank_models(reports: &[EvalReport], grid: &[f64]) -> Result<Ranking> {
    let mut models: Vec<&str> = reports.iter().map(|r| r.model.as_str()).collect();
    models.sort_unstable();
    models.dedup();
    let mut levels = Vec::with_capacity(grid.len());
    for &lambda in grid {
        let mut order = Vec::with_capacity(models.len());
        for &model in &models {
            let r = reports
                .iter()
                .find(|r| r.model == model && (r.lambda - lambda).abs() <= LAMBDA_TOL)
                .ok_or_else(|| Error::GridMismatch {
                    model: model.to_string(),
                    lambda,
                })?;
            order.push(RankEntry {
                model: model.to_string(),
                mean_e: r.overall.mean_e,
                mean_d: r.overall.mean_d,
                mean_ns: r.overall.mean_ns,
            });
        }
        order.sort_by(|a, b| a.mean_e.total_cmp(&b.mean_e).then_with(|| a.model.cmp(&b.model)));
        levels.push(RankLevel { lambda, order });
    }
    Ok(Ranking {
        grid: grid.to_vec(),
        levels,
    })
}

/// λ at which two models with mean `(d, ns)` pairs swap order, if any.
pub fn crossover_lambda(d1: f64, ns1: f64, d2: f64, ns2: f64) -> Option<f64> {
    if ns1 == ns2 {
        return None;
    }
    let lambda = (d2 - d1) / (ns1 - ns2);
    (lambda >= 0.0).then_some(lambda)
}

/// Parses `start:stop:step`, inclusive of `stop` within [`LAMBDA_TOL`].
pub fn parse_lambda_grid(text: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidArgument(format!("lambda grid must be start:stop:step, got `{text}`"));
    let parts: Vec<f64> = text
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    let [start, stop, step] = parts[..] else {
        return Err(bad());
    };
    if !(start >= 0.0 && stop >= start && step > 0.0) || !stop.is_finite() {
        return Err(bad());
    }
    let mut out = Vec::new();
    for i in 0.. {
        let v = start + i as f64 * step;
        if v > stop + LAMBDA_TOL {
            break;
        }
        out.push((v * 1e12).round() / 1e12);
    }
    Ok(out)
}

/// The default grid 0.1, 0.2, ..., 1.0.
pub fn default_lambda_grid() -> Vec<f64> {
    parse_lambda_grid("0.1:1.0:0.1").expect("static grid")
}
