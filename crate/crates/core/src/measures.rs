//! Entropy, non-specificity and divergence measures.

use serde::{Deserialize, Serialize};

use crate::belief::{pignistic, MassFunction, ProbabilityVector};
use crate::credal::{interval_vertices, reachable_intervals, CredalSet, ProbabilityIntervals};
use crate::error::{Error, Result};
use crate::TOL;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LogBase {
    #[serde(rename = "2")]
    Two,
    #[serde(rename = "e")]
    E,
}

impl LogBase {
    pub fn log(self, x: f64) -> f64 {
        match self {
            LogBase::Two => x.log2(),
            LogBase::E => x.ln(),
        }
    }
}

impl std::str::FromStr for LogBase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "2" => Ok(LogBase::Two),
            "e" => Ok(LogBase::E),
            other => Err(Error::InvalidArgument(format!(
                "log base must be `2` or `e`, got `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DivergenceKind {
    Kl,
    Js,
}

impl std::str::FromStr for DivergenceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kl" => Ok(DivergenceKind::Kl),
            "js" => Ok(DivergenceKind::Js),
            other => Err(Error::InvalidArgument(format!(
                "divergence must be `kl` or `js`, got `{other}`"
            ))),
        }
    }
}

/// How credal vertices of belief-valued predictions are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VertexMode {
    Exact,
    Approx,
}

impl std::str::FromStr for VertexMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(VertexMode::Exact),
            "approx" => Ok(VertexMode::Approx),
            other => Err(Error::InvalidArgument(format!(
                "vertex mode must be `exact` or `approx`, got `{other}`"
            ))),
        }
    }
}

/// Every knob that changes a measure's value. Echoed into reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureConfig {
    pub divergence: DivergenceKind,
    pub divergence_base: LogBase,
    pub ns_base: LogBase,
    pub entropy_base: LogBase,
    pub kl_epsilon: f64,
    pub vertex_mode: VertexMode,
}

impl Default for MeasureConfig {
    fn default() -> Self {
        Self {
            divergence: DivergenceKind::Kl,
            divergence_base: LogBase::E,
            ns_base: LogBase::Two,
            entropy_base: LogBase::E,
            kl_epsilon: TOL.kl_epsilon,
            vertex_mode: VertexMode::Approx,
        }
    }
}

fn entropy_of(p: &[f64], base: LogBase) -> f64 {
    -p.iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| x * base.log(x))
        .sum::<f64>()
}

pub fn shannon_entropy(p: &ProbabilityVector, base: LogBase) -> f64 {
    entropy_of(p.as_slice(), base).max(0.0)
}

/// Shannon entropy of the pignistic distribution.
pub fn pignistic_entropy(m: &MassFunction, base: LogBase) -> Result<f64> {
    Ok(shannon_entropy(&pignistic(m)?, base))
}

/// `Σ m(A) log|A|`.
pub fn non_specificity(m: &MassFunction, base: LogBase) -> Result<f64> {
    m.check()?;
    Ok(m.focal_elements()
        .map(|(a, mass)| mass * base.log(a.cardinality() as f64))
        .sum())
}

fn same_frame(y: &ProbabilityVector, q: &ProbabilityVector) -> Result<()> {
    if y.len() != q.len() {
        return Err(Error::FrameMismatch {
            expected: y.len(),
            found: q.len(),
        });
    }
    Ok(())
}

/// `Σ y log(y / max(q, epsilon))`; zero entries of `y` contribute nothing.
pub fn kl_divergence(
    y: &ProbabilityVector,
    q: &ProbabilityVector,
    epsilon: f64,
    base: LogBase,
) -> Result<f64> {
    same_frame(y, q)?;
    Ok(y.as_slice()
        .iter()
        .zip(q.as_slice())
        .filter(|(yi, _)| **yi > 0.0)
        .map(|(yi, qi)| yi * base.log(yi / qi.max(epsilon)))
        .sum())
}

/// Jensen-Shannon divergence: mean KL of both arguments to their midpoint.
pub fn js_divergence(y: &ProbabilityVector, q: &ProbabilityVector, base: LogBase) -> Result<f64> {
    same_frame(y, q)?;
    let half_kl = |a: &[f64], mid: &[f64]| -> f64 {
        a.iter()
            .zip(mid)
            .filter(|(ai, _)| **ai > 0.0)
            .map(|(ai, mi)| ai * base.log(ai / mi))
            .sum::<f64>()
    };
    let mid: Vec<f64> = y
        .as_slice()
        .iter()
        .zip(q.as_slice())
        .map(|(a, b)| 0.5 * (a + b))
        .collect();
    let js = 0.5 * half_kl(y.as_slice(), &mid) + 0.5 * half_kl(q.as_slice(), &mid);
    Ok(js.max(0.0))
}

pub fn divergence(
    y: &ProbabilityVector,
    q: &ProbabilityVector,
    cfg: &MeasureConfig,
) -> Result<f64> {
    match cfg.divergence {
        DivergenceKind::Kl => kl_divergence(y, q, cfg.kl_epsilon, cfg.divergence_base),
        DivergenceKind::Js => js_divergence(y, q, cfg.divergence_base),
    }
}

/// Smallest divergence from `truth` to any vertex of `cre`.
pub fn min_divergence_to_credal(
    truth: &ProbabilityVector,
    cre: &CredalSet,
    cfg: &MeasureConfig,
) -> Result<f64> {
    if !cre.has_vertices() {
        return Err(Error::NoVertices);
    }
    let mut best = f64::INFINITY;
    for v in cre.vertices() {
        best = best.min(divergence(truth, v, cfg)?);
    }
    Ok(best)
}

/// Maximum-entropy member of an interval credal set: `p_i = clamp(t, l_i, u_i)`
/// with the level `t` chosen so the entries sum to one.
pub fn max_entropy_distribution(iv: &ProbabilityIntervals) -> ProbabilityVector {
    let (lo, hi) = (iv.lower(), iv.upper());
    let fill = |t: f64| -> f64 { lo.iter().zip(hi).map(|(l, u)| t.max(*l).min(*u)).sum() };
    let (mut a, mut b) = (0.0f64, 1.0f64);
    // fill is monotone in t; bisect until the bracket collapses
    while b - a > 1e-15 {
        let mid = 0.5 * (a + b);
        if fill(mid) < 1.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    let t = 0.5 * (a + b);
    let mut p: Vec<f64> = lo.iter().zip(hi).map(|(l, u)| t.max(*l).min(*u)).collect();
    // spread the bisection residue over coordinates that are not pinned
    let residue = 1.0 - p.iter().sum::<f64>();
    let free: Vec<usize> = (0..p.len())
        .filter(|&i| hi[i] - lo[i] > 1e-10 && p[i] > lo[i] + 1e-10 && p[i] < hi[i] - 1e-10)
        .collect();
    if !free.is_empty() {
        let share = residue / free.len() as f64;
        for i in free {
            p[i] += share;
        }
    }
    ProbabilityVector::from_vec_unchecked(p)
}

/// Upper minus lower entropy over the credal set of the intervals.
pub fn credal_uncertainty(iv: &ProbabilityIntervals, base: LogBase) -> Result<f64> {
    let iv = reachable_intervals(iv)?;
    let upper = shannon_entropy(&max_entropy_distribution(&iv), base);
    let lower = interval_vertices(&iv)?
        .iter()
        .map(|v| shannon_entropy(v, base))
        .fold(f64::INFINITY, f64::min);
    Ok((upper - lower).max(0.0))
}
