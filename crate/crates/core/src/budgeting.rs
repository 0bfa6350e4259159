//! Focal-set budgeting.
//!
//! Ellipsoid budgeting fits one Gaussian per class to 3-D embeddings, takes the
//! 95% ellipsoid of each (`half-length = √(7.815·λ)` per covariance eigenvalue)
//! and keeps the `K` non-singleton sets whose ellipsoids overlap most, measured
//! by Monte-Carlo intersection-over-union. Clustering budgeting merges class
//! embeddings by average-linkage agglomerative clustering instead.

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{combinations, Budget, FocalSet};
use crate::io::EmbeddingFile;
use crate::seeding::{mix, stream_rng};

/// χ² quantile at 0.95 with three degrees of freedom.
pub const CHI2_95_3D: f64 = 7.815;
/// Smallest accepted Monte-Carlo sample count.
pub const MIN_MC: usize = 1000;
/// Samples per deterministic RNG shard.
pub const MC_SHARD: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassEllipsoid {
    pub class: usize,
    pub mean: [f64; 3],
    pub covariance: [[f64; 3]; 3],
    /// Principal directions as rows, matching `half_lengths`.
    pub axes: [[f64; 3]; 3],
    pub half_lengths: [f64; 3],
}

impl ClassEllipsoid {
    pub fn from_gaussian(class: usize, mean: [f64; 3], covariance: [[f64; 3]; 3]) -> Result<Self> {
        let c = Matrix3::from_fn(|i, j| covariance[i][j]);
        if c.iter().any(|v| !v.is_finite()) || (c - c.transpose()).abs().max() > 1e-9 * (1.0 + c.abs().max()) {
            return Err(Error::InvalidArgument("covariance must be finite and symmetric".into()));
        }
        let eig = SymmetricEigen::new(c);
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let mut axes = [[0.0; 3]; 3];
        let mut half_lengths = [0.0; 3];
        for (k, &i) in order.iter().enumerate() {
            let v = eig.eigenvectors.column(i);
            axes[k] = [v[0], v[1], v[2]];
            half_lengths[k] = (CHI2_95_3D * eig.eigenvalues[i].max(0.0)).sqrt();
        }
        Ok(Self {
            class,
            mean,
            covariance,
            axes,
            half_lengths,
        })
    }

    pub fn contains(&self, p: [f64; 3]) -> bool {
        let d = Vector3::new(p[0] - self.mean[0], p[1] - self.mean[1], p[2] - self.mean[2]);
        let mut q = 0.0;
        for k in 0..3 {
            let a = Vector3::from(self.axes[k]);
            let t = a.dot(&d);
            let h = self.half_lengths[k];
            if h == 0.0 {
                if t.abs() > 1e-12 {
                    return false;
                }
            } else {
                q += (t / h) * (t / h);
            }
        }
        q <= 1.0
    }

    /// Axis-aligned bounding box `(min, max)`.
    pub fn bounding_box(&self) -> ([f64; 3], [f64; 3]) {
        let mut lo = [0.0; 3];
        let mut hi = [0.0; 3];
        for j in 0..3 {
            let r = (0..3)
                .map(|k| (self.half_lengths[k] * self.axes[k][j]).powi(2))
                .sum::<f64>()
                .sqrt();
            lo[j] = self.mean[j] - r;
            hi[j] = self.mean[j] + r;
        }
        (lo, hi)
    }
}

/// One maximum-likelihood Gaussian per class of the frame.
pub fn fit_class_ellipsoids(emb: &EmbeddingFile) -> Result<Vec<ClassEllipsoid>> {
    let n = emb.frame.len();
    let mut groups: Vec<Vec<[f64; 3]>> = vec![Vec::new(); n];
    for (&c, &p) in emb.classes.iter().zip(&emb.points) {
        groups[c].push(p);
    }
    groups
        .iter()
        .enumerate()
        .map(|(c, pts)| {
            if pts.len() < 2 {
                return Err(Error::InsufficientPoints {
                    class: c,
                    count: pts.len(),
                    required: 2,
                });
            }
            let k = pts.len() as f64;
            let mut mean = [0.0; 3];
            for p in pts {
                for j in 0..3 {
                    mean[j] += p[j];
                }
            }
            mean.iter_mut().for_each(|m| *m /= k);
            let mut cov = [[0.0; 3]; 3];
            for p in pts {
                for i in 0..3 {
                    for j in 0..3 {
                        cov[i][j] += (p[i] - mean[i]) * (p[j] - mean[j]);
                    }
                }
            }
            cov.iter_mut().flatten().for_each(|v| *v /= k);
            ClassEllipsoid::from_gaussian(c, mean, cov)
        })
        .collect()
}

/// Monte-Carlo IoU of the ellipsoids of the classes in `set`, sampling
/// uniformly in the bounding box of their union. Returns 0 when no sample
/// lands in any ellipsoid.
pub fn overlap_ratio(ellipsoids: &[ClassEllipsoid], set: FocalSet, mc: usize, seed: u64) -> Result<f64> {
    if set.cardinality() < 2 {
        return Err(Error::SingletonSet);
    }
    if mc < MIN_MC {
        return Err(Error::InvalidArgument(format!(
            "at least {MIN_MC} Monte-Carlo samples required, got {mc}"
        )));
    }
    let members: Vec<&ClassEllipsoid> = set
        .members()
        .map(|c| {
            ellipsoids.get(c).ok_or(Error::OutOfRange {
                index: c,
                n: ellipsoids.len(),
            })
        })
        .collect::<Result<_>>()?;
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for e in &members {
        let (l, h) = e.bounding_box();
        for j in 0..3 {
            lo[j] = lo[j].min(l[j]);
            hi[j] = hi[j].max(h[j]);
        }
    }
    let shards = mc.div_ceil(MC_SHARD);
    let set_seed = mix(seed, set.bits());
    let (all, any) = (0..shards)
        .into_par_iter()
        .map(|s| {
            let mut rng = stream_rng(set_seed, s as u64);
            let count = MC_SHARD.min(mc - s * MC_SHARD);
            let (mut all, mut any) = (0u64, 0u64);
            for _ in 0..count {
                let mut p = [0.0; 3];
                for j in 0..3 {
                    p[j] = lo[j] + (hi[j] - lo[j]) * rng.random::<f64>();
                }
                let mut inside = 0usize;
                for e in &members {
                    inside += e.contains(p) as usize;
                }
                all += (inside == members.len()) as u64;
                any += (inside > 0) as u64;
            }
            (all, any)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    Ok(if any == 0 { 0.0 } else { all as f64 / any as f64 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredSet {
    pub set: FocalSet,
    pub overlap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BudgetSelection {
    pub budget: Budget,
    /// The selected non-singleton sets in budget order.
    pub selected: Vec<ScoredSet>,
    /// Largest cardinality whose overlaps were evaluated.
    pub max_cardinality: usize,
}

fn rank(scored: &[ScoredSet], k: usize) -> Vec<ScoredSet> {
    let mut v = scored.to_vec();
    v.sort_by(|a, b| {
        b.overlap
            .total_cmp(&a.overlap)
            .then_with(|| a.set.order_key().cmp(&b.set.order_key()))
    });
    v.truncate(k);
    v
}

/// Singletons plus the `k` most-overlapping sets, growing the cardinality from
/// two until the top-`k` list stops changing. A set with a sub-set of one
/// fewer class whose estimated overlap is exactly zero scores zero without
/// sampling.
pub fn select_budget(ellipsoids: &[ClassEllipsoid], k: usize, mc: usize, seed: u64) -> Result<BudgetSelection> {
    let n = ellipsoids.len();
    let singletons = Budget::singletons(n)?;
    if k == 0 || n < 2 {
        return Ok(BudgetSelection {
            budget: singletons,
            selected: Vec::new(),
            max_cardinality: 1,
        });
    }
    let mut scored: Vec<ScoredSet> = Vec::new();
    let mut zero: std::collections::HashSet<FocalSet> = Default::default();
    let mut top: Vec<ScoredSet> = Vec::new();
    let mut reached = 1;
    for r in 2..=n {
        let candidates = combinations(n, r);
        let level = candidates
            .par_iter()
            .map(|&set| {
                let pruned = r > 2 && set.members().any(|c| zero.contains(&FocalSet::from_bits(set.bits() & !(1u64 << c))));
                let overlap = if pruned { 0.0 } else { overlap_ratio(ellipsoids, set, mc, seed)? };
                Ok(ScoredSet { set, overlap })
            })
            .collect::<Result<Vec<_>>>()?;
        zero.extend(level.iter().filter(|s| s.overlap == 0.0).map(|s| s.set));
        scored.extend(level);
        reached = r;
        let next = rank(&scored, k);
        let unchanged = r > 2 && next == top;
        top = next;
        if unchanged {
            break;
        }
    }
    let mut sets = singletons.sets().to_vec();
    sets.extend(top.iter().map(|s| s.set));
    Ok(BudgetSelection {
        budget: Budget::new(n, sets)?,
        selected: top,
        max_cardinality: reached,
    })
}

/// Singletons plus one focal set per multi-member cluster when the points
/// (one per class) are cut into `k` average-linkage clusters.
pub fn budget_by_clustering(points: &[Vec<f64>], k: usize) -> Result<Budget> {
    let n = points.len();
    if k == 0 {
        return Err(Error::InvalidArgument("cluster count must be at least 1".into()));
    }
    if n < k || n == 0 {
        return Err(Error::TooFewPoints { points: n, clusters: k });
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::ShapeMismatch("points of differing dimension".into()));
    }
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite coordinate".into()));
    }
    let mut sets = Budget::singletons(n)?.sets().to_vec();
    if n > 1 {
        let mut condensed = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                let d2: f64 = points[i].iter().zip(&points[j]).map(|(a, b)| (a - b) * (a - b)).sum();
                condensed.push(d2.sqrt());
            }
        }
        let dendrogram = kodama::linkage(&mut condensed, n, kodama::Method::Average);
        // cluster label n + s is created by step s
        let mut members: Vec<u64> = (0..n).map(|c| 1u64 << c).collect();
        let mut alive: Vec<bool> = vec![true; n];
        for step in dendrogram.steps().iter().take(n - k) {
            let merged = members[step.cluster1] | members[step.cluster2];
            alive[step.cluster1] = false;
            alive[step.cluster2] = false;
            members.push(merged);
            alive.push(true);
        }
        let mut clusters: Vec<FocalSet> = members
            .iter()
            .zip(&alive)
            .filter(|(m, a)| **a && m.count_ones() > 1)
            .map(|(m, _)| FocalSet::from_bits(*m))
            .collect();
        clusters.sort_by_key(|s| s.order_key());
        sets.extend(clusters);
    }
    Budget::new(n, sets)
}

/// Per-class centroids of an embedding file, in frame order.
pub fn class_centroids(emb: &EmbeddingFile) -> Result<Vec<Vec<f64>>> {
    let n = emb.frame.len();
    let mut sum = vec![vec![0.0; 3]; n];
    let mut count = vec![0usize; n];
    for (&c, p) in emb.classes.iter().zip(&emb.points) {
        count[c] += 1;
        for j in 0..3 {
            sum[c][j] += p[j];
        }
    }
    (0..n)
        .map(|c| {
            if count[c] == 0 {
                return Err(Error::InsufficientPoints {
                    class: c,
                    count: 0,
                    required: 1,
                });
            }
            Ok(sum[c].iter().map(|v| v / count[c] as f64).collect())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::Frame;

    fn sphere(class: usize, center: [f64; 3], radius: f64) -> ClassEllipsoid {
        let v = radius * radius / CHI2_95_3D;
        ClassEllipsoid::from_gaussian(class, center, [[v, 0.0, 0.0], [0.0, v, 0.0], [0.0, 0.0, v]]).unwrap()
    }

    fn emb(classes: &[&str], pts: &[[f64; 3]]) -> EmbeddingFile {
        let mut labels: Vec<&str> = Vec::new();
        for c in classes {
            if !labels.contains(c) {
                labels.push(c);
            }
        }
        let frame = Frame::new(&labels).unwrap();
        EmbeddingFile {
            ids: (0..pts.len()).map(|i| format!("p{i}")).collect(),
            classes: classes.iter().map(|c| frame.index_of(c).unwrap()).collect(),
            points: pts.to_vec(),
            frame,
        }
    }

    #[test]
    fn unit_variance_cube_gives_chi2_half_lengths() {
        let mut pts = Vec::new();
        for x in [-1.0, 1.0] {
            for y in [-1.0, 1.0] {
                for z in [-1.0, 1.0] {
                    pts.push([x, y, z]);
                }
            }
        }
        let e = fit_class_ellipsoids(&emb(&["a"; 8], &pts)).unwrap();
        for h in e[0].half_lengths {
            assert!((h - CHI2_95_3D.sqrt()).abs() < 1e-9);
        }
        assert!((CHI2_95_3D.sqrt() - 2.7955).abs() < 1e-4);
    }

    #[test]
    fn identical_points_are_degenerate() {
        let e = fit_class_ellipsoids(&emb(&["a", "a", "a"], &[[1.0, 2.0, 3.0]; 3])).unwrap();
        assert_eq!(e[0].half_lengths, [0.0; 3]);
        assert!(e[0].contains([1.0, 2.0, 3.0]));
        assert!(!e[0].contains([1.0, 2.0, 3.1]));
    }

    #[test]
    fn one_point_class_rejected() {
        let r = fit_class_ellipsoids(&emb(&["a", "a", "b"], &[[0.0; 3], [1.0; 3], [2.0; 3]]));
        assert!(matches!(r, Err(Error::InsufficientPoints { class: 1, count: 1, .. })));
    }

    #[test]
    fn overlap_examples() {
        let same = [sphere(0, [0.0; 3], 1.0), sphere(1, [0.0; 3], 1.0)];
        let pair = FocalSet::from_indices(&[0, 1]);
        assert!((overlap_ratio(&same, pair, 20_000, 1).unwrap() - 1.0).abs() < 1e-12);
        let apart = [sphere(0, [0.0; 3], 1.0), sphere(1, [5.0, 0.0, 0.0], 1.0)];
        assert_eq!(overlap_ratio(&apart, pair, 20_000, 1).unwrap(), 0.0);
        assert_eq!(
            overlap_ratio(&same, FocalSet::singleton(0), 20_000, 1),
            Err(Error::SingletonSet)
        );
    }

    #[test]
    fn two_sphere_lens() {
        // lens volume π(4r+d)(2r−d)²/12 with r=1, d=1 is 5π/12; union 27π/12
        let s = [sphere(0, [0.0; 3], 1.0), sphere(1, [1.0, 0.0, 0.0], 1.0)];
        let iou = overlap_ratio(&s, FocalSet::from_indices(&[0, 1]), 200_000, 42).unwrap();
        let exact = 5.0 / 27.0;
        assert!((iou - exact).abs() / exact < 0.02, "{iou}");
    }

    #[test]
    fn select_budget_examples() {
        let far: Vec<ClassEllipsoid> = (0..4).map(|c| sphere(c, [10.0 * c as f64, 0.0, 0.0], 1.0)).collect();
        let b = select_budget(&far, 0, 2000, 3).unwrap();
        assert_eq!(b.budget, Budget::singletons(4).unwrap());
        let b = select_budget(&far, 5, 2000, 3).unwrap();
        let expected: Vec<FocalSet> = combinations(4, 2).into_iter().take(5).collect();
        assert_eq!(b.budget.sets()[4..], expected[..]);
        assert!(b.selected.iter().all(|s| s.overlap == 0.0));

        let geo = [
            sphere(0, [0.0; 3], 1.0),
            sphere(1, [0.8, 0.0, 0.0], 1.0),
            sphere(2, [0.0, 9.0, 0.0], 1.0),
        ];
        let b = select_budget(&geo, 1, 5000, 11).unwrap();
        assert_eq!(b.budget.sets()[3], FocalSet::from_indices(&[0, 1]));
        assert!(b.selected[0].overlap > 0.2);
    }

    #[test]
    fn clustering_examples() {
        let pts = vec![vec![0.0, 0.0], vec![0.1, 0.0], vec![10.0, 0.0], vec![10.0, 0.1]];
        assert_eq!(budget_by_clustering(&pts, 4).unwrap(), Budget::singletons(4).unwrap());
        let b = budget_by_clustering(&pts, 2).unwrap();
        assert_eq!(
            &b.sets()[4..],
            &[FocalSet::from_indices(&[0, 1]), FocalSet::from_indices(&[2, 3])]
        );
        let b = budget_by_clustering(&pts, 1).unwrap();
        assert_eq!(b.len(), 5);
        assert_eq!(b.sets()[4], FocalSet::universe(4));
        assert!(matches!(budget_by_clustering(&pts, 5), Err(Error::TooFewPoints { .. })));
    }
}
