//! Credal sets: vertices of the probabilities dominating a belief function,
//! class probability bounds, and credal sets defined by probability intervals.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::belief::{pignistic, plausibility, MassFunction, ProbabilityVector};
use crate::error::{Error, Result};
use crate::frame::FocalSet;
use crate::TOL;

/// Largest frame for which vertices are enumerated exactly.
pub const MAX_VERTEX_CLASSES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CredalKind {
    Exact,
    Approximate,
    IntervalDerived,
}

/// A finite set of extreme probability vectors plus per-class bounds.
///
/// Interval-derived credal sets on frames above [`MAX_VERTEX_CLASSES`] carry
/// bounds only and an empty vertex list.
#[derive(Debug, Clone, PartialEq)]
pub struct CredalSet {
    n: usize,
    vertices: Vec<ProbabilityVector>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    kind: CredalKind,
}

impl CredalSet {
    /// Deduplicates the vertices and derives class bounds from them.
    pub fn from_vertices(
        n: usize,
        vertices: Vec<ProbabilityVector>,
        kind: CredalKind,
    ) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::NoVertices);
        }
        if let Some(v) = vertices.iter().find(|v| v.len() != n) {
            return Err(Error::FrameMismatch {
                expected: n,
                found: v.len(),
            });
        }
        let vertices = dedup_vertices(vertices);
        let mut lower = vec![f64::INFINITY; n];
        let mut upper = vec![f64::NEG_INFINITY; n];
        for v in &vertices {
            for (c, &p) in v.as_slice().iter().enumerate() {
                lower[c] = lower[c].min(p);
                upper[c] = upper[c].max(p);
            }
        }
        Ok(Self {
            n,
            vertices,
            lower,
            upper,
            kind,
        })
    }

    /// Single-vertex credal set of a precise prediction.
    pub fn point(p: ProbabilityVector) -> Self {
        Self {
            n: p.len(),
            lower: p.as_slice().to_vec(),
            upper: p.as_slice().to_vec(),
            vertices: vec![p],
            kind: CredalKind::Exact,
        }
    }

    fn bounds_only(iv: &ProbabilityIntervals) -> Self {
        Self {
            n: iv.len(),
            vertices: Vec::new(),
            lower: iv.lower.clone(),
            upper: iv.upper.clone(),
            kind: CredalKind::IntervalDerived,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn vertices(&self) -> &[ProbabilityVector] {
        &self.vertices
    }

    pub fn has_vertices(&self) -> bool {
        !self.vertices.is_empty()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn kind(&self) -> CredalKind {
        self.kind
    }

    /// True when `p` coincides with one of the vertices (after rounding).
    pub fn has_vertex(&self, p: &ProbabilityVector) -> bool {
        let key = vertex_key(p.as_slice());
        self.vertices.iter().any(|v| vertex_key(v.as_slice()) == key)
    }
}

fn vertex_key(p: &[f64]) -> Vec<i64> {
    let scale = 10f64.powi(TOL.vertex_digits);
    p.iter().map(|x| (x * scale).round() as i64).collect()
}

fn dedup_vertices(vertices: Vec<ProbabilityVector>) -> Vec<ProbabilityVector> {
    let mut seen = HashSet::with_capacity(vertices.len());
    vertices
        .into_iter()
        .filter(|v| seen.insert(vertex_key(v.as_slice())))
        .collect()
}

/// Extreme point for one class ordering: each focal set hands its mass to its
/// earliest-ranked member.
pub fn extremal_probability(m: &MassFunction, order: &[usize]) -> ProbabilityVector {
    let n = m.n();
    debug_assert_eq!(order.len(), n);
    let mut rank = vec![usize::MAX; n];
    for (pos, &c) in order.iter().enumerate() {
        rank[c] = pos;
    }
    let mut p = vec![0.0; n];
    for (set, mass) in m.focal_elements() {
        let first = set
            .members()
            .min_by_key(|&c| rank[c])
            .expect("focal sets are non-empty");
        p[first] += mass;
    }
    ProbabilityVector::from_vec_unchecked(p)
}

/// Every vertex of the credal set of `m`, one per class permutation.
pub fn credal_vertices_exact(m: &MassFunction) -> Result<CredalSet> {
    let n = m.n();
    if n > MAX_VERTEX_CLASSES {
        return Err(Error::TooManyClasses(n));
    }
    m.check()?;
    let mut order: Vec<usize> = (0..n).collect();
    let mut vertices = Vec::new();
    loop {
        vertices.push(extremal_probability(m, &order));
        if !next_permutation(&mut order) {
            break;
        }
    }
    CredalSet::from_vertices(n, vertices, CredalKind::Exact)
}

fn next_permutation(v: &mut [usize]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// The 2N-permutation approximation: each class is placed first once and last
/// once, the remaining classes keep frame order.
pub fn credal_vertices_approx(m: &MassFunction) -> Result<CredalSet> {
    m.check()?;
    let n = m.n();
    let mut vertices = Vec::with_capacity(2 * n);
    for c in 0..n {
        let rest = (0..n).filter(|&k| k != c);
        let first: Vec<usize> = std::iter::once(c).chain(rest.clone()).collect();
        let last: Vec<usize> = rest.chain(std::iter::once(c)).collect();
        vertices.push(extremal_probability(m, &first));
        vertices.push(extremal_probability(m, &last));
    }
    CredalSet::from_vertices(n, vertices, CredalKind::Approximate)
}

/// `(Bel({c}), Pl({c}))`.
pub fn class_bounds(m: &MassFunction, class: usize) -> Result<(f64, f64)> {
    if class >= m.n() {
        return Err(Error::OutOfRange {
            index: class,
            n: m.n(),
        });
    }
    m.check()?;
    let single = FocalSet::singleton(class);
    Ok((m.belief_of(single), plausibility(m, single)?))
}

/// Upper minus lower probability of the pignistic argmax class.
pub fn credal_width(m: &MassFunction) -> Result<f64> {
    let top = pignistic(m)?.argmax();
    let (lo, hi) = class_bounds(m, top)?;
    Ok(hi - lo)
}

/// Per-class probability intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityIntervals {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl ProbabilityIntervals {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::FrameMismatch {
                expected: lower.len(),
                found: upper.len(),
            });
        }
        if lower.is_empty() {
            return Err(Error::InvalidIntervals("no classes".into()));
        }
        let eps = TOL.normalization;
        for (i, (&l, &u)) in lower.iter().zip(&upper).enumerate() {
            if !l.is_finite() || !u.is_finite() || l < -eps || u > 1.0 + eps || l > u + eps {
                return Err(Error::InvalidIntervals(format!(
                    "class {i} has interval [{l}, {u}]"
                )));
            }
        }
        let sum_lower: f64 = lower.iter().sum();
        let sum_upper: f64 = upper.iter().sum();
        if sum_lower > 1.0 + eps || sum_upper < 1.0 - eps {
            return Err(Error::EmptyCredalSet {
                sum_lower,
                sum_upper,
            });
        }
        Ok(Self { lower, upper })
    }

    /// Degenerate intervals around a single distribution.
    pub fn point(p: &ProbabilityVector) -> Self {
        Self {
            lower: p.as_slice().to_vec(),
            upper: p.as_slice().to_vec(),
        }
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    /// Lower probability of an arbitrary set of classes implied by the intervals.
    pub fn lower_prob_of(&self, set: FocalSet) -> f64 {
        let inside: f64 = set.members().map(|c| self.lower[c]).sum();
        let outside: f64 = set
            .complement(self.len())
            .members()
            .map(|c| self.upper[c])
            .sum();
        inside.max(1.0 - outside).clamp(0.0, 1.0)
    }
}

/// Maps score intervals to probability intervals. Class `i` uses its own bound
/// against the exponentiated midpoints of every other class.
pub fn interval_softmax(lower_scores: &[f64], upper_scores: &[f64]) -> Result<ProbabilityIntervals> {
    if lower_scores.len() != upper_scores.len() {
        return Err(Error::FrameMismatch {
            expected: lower_scores.len(),
            found: upper_scores.len(),
        });
    }
    if let Some(i) = lower_scores
        .iter()
        .zip(upper_scores)
        .position(|(l, u)| l > u || !l.is_finite() || !u.is_finite())
    {
        return Err(Error::NonOrderedScores(i));
    }
    // the ratios are invariant to a common shift
    let shift = upper_scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mid_exp: Vec<f64> = lower_scores
        .iter()
        .zip(upper_scores)
        .map(|(l, u)| ((l + u) / 2.0 - shift).exp())
        .collect();
    let total_mid: f64 = mid_exp.iter().sum();
    let bound = |i: usize, score: f64| {
        let own = (score - shift).exp();
        let others = total_mid - mid_exp[i];
        own / (own + others)
    };
    let lower = (0..lower_scores.len()).map(|i| bound(i, lower_scores[i])).collect();
    let upper = (0..upper_scores.len()).map(|i| bound(i, upper_scores[i])).collect();
    ProbabilityIntervals::new(lower, upper)
}

/// Tightens every bound to the values actually reachable inside the simplex.
pub fn reachable_intervals(iv: &ProbabilityIntervals) -> Result<ProbabilityIntervals> {
    let sum_lower: f64 = iv.lower.iter().sum();
    let sum_upper: f64 = iv.upper.iter().sum();
    let eps = TOL.normalization;
    if sum_lower > 1.0 + eps || sum_upper < 1.0 - eps {
        return Err(Error::EmptyCredalSet {
            sum_lower,
            sum_upper,
        });
    }
    let n = iv.len();
    let mut lower = Vec::with_capacity(n);
    let mut upper = Vec::with_capacity(n);
    for i in 0..n {
        let others_lower = sum_lower - iv.lower[i];
        let others_upper = sum_upper - iv.upper[i];
        let l = iv.lower[i].max(1.0 - others_upper);
        let u = iv.upper[i].min(1.0 - others_lower);
        // rounding can cross the bounds of a degenerate interval
        lower.push(l.min(u));
        upper.push(u.max(l));
    }
    Ok(ProbabilityIntervals { lower, upper })
}

/// Vertices of `{p : lower ≤ p ≤ upper, Σp = 1}` by bound saturation: at every
/// vertex all coordinates but one sit at a bound.
pub fn interval_vertices(iv: &ProbabilityIntervals) -> Result<Vec<ProbabilityVector>> {
    let n = iv.len();
    if n > MAX_VERTEX_CLASSES {
        return Err(Error::TooManyClasses(n));
    }
    let eps = TOL.normalization;
    let mut out = Vec::new();
    for free in 0..n {
        for pattern in 0u32..(1u32 << (n - 1)) {
            let mut p = vec![0.0; n];
            let mut bit = 0;
            let mut fixed = 0.0;
            for (c, slot) in p.iter_mut().enumerate() {
                if c == free {
                    continue;
                }
                *slot = if pattern & (1 << bit) != 0 {
                    iv.upper[c]
                } else {
                    iv.lower[c]
                };
                fixed += *slot;
                bit += 1;
            }
            let rest = 1.0 - fixed;
            if rest >= iv.lower[free] - eps && rest <= iv.upper[free] + eps {
                p[free] = rest.clamp(iv.lower[free], iv.upper[free]).max(0.0);
                out.push(ProbabilityVector::from_vec_unchecked(p));
            }
        }
    }
    if out.is_empty() {
        return Err(Error::EmptyCredalSet {
            sum_lower: iv.lower.iter().sum(),
            sum_upper: iv.upper.iter().sum(),
        });
    }
    let mut out = dedup_vertices(out);
    out.sort_by(|a, b| {
        a.as_slice()
            .iter()
            .zip(b.as_slice())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(out)
}

/// Credal set of reachable probability intervals: explicit vertices up to
/// [`MAX_VERTEX_CLASSES`] classes, bounds only beyond.
pub fn credal_from_intervals(iv: &ProbabilityIntervals) -> Result<CredalSet> {
    let iv = reachable_intervals(iv)?;
    if iv.len() > MAX_VERTEX_CLASSES {
        return Ok(CredalSet::bounds_only(&iv));
    }
    let vertices = interval_vertices(&iv)?;
    let mut cs = CredalSet::from_vertices(iv.len(), vertices, CredalKind::IntervalDerived)?;
    cs.lower = iv.lower.clone();
    cs.upper = iv.upper.clone();
    Ok(cs)
}
