//! Coherent lower probabilities from clouds of sampled predictions.

use crate::belief::{repair_mass, MassFunction, ProbabilityVector};
use crate::error::{Error, Result};
use crate::frame::Budget;
use crate::lattice;

/// Probability vectors sampled from one predictive distribution (posterior
/// weight draws, ensemble members, ...).
#[derive(Debug, Clone, PartialEq)]
pub struct SampleCloud {
    n: usize,
    samples: Vec<ProbabilityVector>,
}

impl SampleCloud {
    pub fn new(samples: Vec<ProbabilityVector>) -> Result<Self> {
        let first = samples.first().ok_or(Error::EmptyCloud)?;
        let n = first.len();
        if let Some(bad) = samples.iter().find(|s| s.len() != n) {
            return Err(Error::FrameMismatch {
                expected: n,
                found: bad.len(),
            });
        }
        Ok(Self { n, samples })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn samples(&self) -> &[ProbabilityVector] {
        &self.samples
    }

    /// Collapses the cloud to its average prediction.
    pub fn mean(&self) -> ProbabilityVector {
        let k = self.samples.len() as f64;
        let mut mean = vec![0.0; self.n];
        for s in &self.samples {
            for (acc, p) in mean.iter_mut().zip(s.as_slice()) {
                *acc += p / k;
            }
        }
        ProbabilityVector::from_vec_unchecked(mean)
    }
}

/// Lower probability values on the sets of a budget.
#[derive(Debug, Clone, PartialEq)]
pub struct LowerProbability {
    budget: Budget,
    lower: Vec<f64>,
}

impl LowerProbability {
    pub fn new(budget: Budget, lower: Vec<f64>) -> Result<Self> {
        if budget.len() != lower.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} lower probabilities for a budget of {} sets",
                lower.len(),
                budget.len()
            )));
        }
        if let Some(v) = lower.iter().find(|v| !(0.0..=1.0 + 1e-12).contains(*v)) {
            return Err(Error::InvalidArgument(format!(
                "lower probability {v} outside [0, 1]"
            )));
        }
        Ok(Self { budget, lower })
    }

    pub fn budget(&self) -> &Budget {
        &self.budget
    }

    pub fn values(&self) -> &[f64] {
        &self.lower
    }
}

/// `lower(A) = min over samples of p(A)`.
pub fn lower_from_samples(cloud: &SampleCloud, budget: &Budget) -> Result<LowerProbability> {
    if cloud.samples.is_empty() {
        return Err(Error::EmptyCloud);
    }
    if cloud.n != budget.n() {
        return Err(Error::FrameMismatch {
            expected: budget.n(),
            found: cloud.n,
        });
    }
    let lower = budget
        .sets()
        .iter()
        .map(|&a| {
            cloud
                .samples
                .iter()
                .map(|s| s.prob_of(a))
                .fold(f64::INFINITY, f64::min)
                .clamp(0.0, 1.0)
        })
        .collect();
    Ok(LowerProbability {
        budget: budget.clone(),
        lower,
    })
}

/// Moebius inverse of the lower probability on its budget, then repair.
pub fn mass_from_lower(lp: &LowerProbability) -> Result<MassFunction> {
    let raw = lattice::subset_moebius(&lp.budget, &lp.lower);
    repair_mass(&lp.budget, &raw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::belief::pignistic;
    use crate::frame::FocalSet;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pv(v: &[f64]) -> ProbabilityVector {
        ProbabilityVector::new(v.to_vec()).unwrap()
    }

    fn random_simplex(rng: &mut ChaCha8Rng, n: usize) -> ProbabilityVector {
        let raw: Vec<f64> = (0..n).map(|_| -rng.random::<f64>().ln()).collect();
        let s: f64 = raw.iter().sum();
        ProbabilityVector::new(raw.into_iter().map(|x| x / s).collect()).unwrap()
    }

    #[test]
    fn single_sample_lower_is_the_sample() {
        let p = pv(&[0.2, 0.3, 0.5]);
        let budget = Budget::powerset(3).unwrap();
        let lp = lower_from_samples(&SampleCloud::new(vec![p.clone()]).unwrap(), &budget).unwrap();
        for (a, v) in budget.sets().iter().zip(lp.values()) {
            assert_abs_diff_eq!(*v, p.prob_of(*a), epsilon = 1e-15);
        }
        let m = mass_from_lower(&lp).unwrap();
        for (a, v) in m.budget().sets().iter().zip(m.masses()) {
            let expect = if a.cardinality() == 1 { p.prob_of(*a) } else { 0.0 };
            assert_abs_diff_eq!(*v, expect, epsilon = 1e-12);
        }
        let bet = pignistic(&m).unwrap();
        for (x, y) in bet.as_slice().iter().zip(p.as_slice()) {
            assert_abs_diff_eq!(*x, *y, epsilon = 1e-12);
        }
    }

    #[test]
    fn opposing_corners_give_vacuous_mass() {
        let cloud = SampleCloud::new(vec![pv(&[1.0, 0.0]), pv(&[0.0, 1.0])]).unwrap();
        let budget = Budget::powerset(2).unwrap();
        let lp = lower_from_samples(&cloud, &budget).unwrap();
        assert_eq!(lp.values(), &[0.0, 0.0, 1.0]);
        let m = mass_from_lower(&lp).unwrap();
        assert_abs_diff_eq!(m.mass_of(FocalSet::universe(2)), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn lower_never_exceeds_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let samples: Vec<_> = (0..100).map(|_| random_simplex(&mut rng, 4)).collect();
        let cloud = SampleCloud::new(samples).unwrap();
        let mean = cloud.mean();
        let budget = Budget::powerset(4).unwrap();
        let lp = lower_from_samples(&cloud, &budget).unwrap();
        for (a, v) in budget.sets().iter().zip(lp.values()) {
            // brute force: min over the cloud, compared with the cloud mean
            let brute = cloud
                .samples()
                .iter()
                .map(|s| s.as_slice().iter().enumerate().filter(|(c, _)| a.contains(*c)).map(|(_, p)| p).sum::<f64>())
                .fold(f64::INFINITY, f64::min);
            assert_abs_diff_eq!(*v, brute, epsilon = 1e-12);
            assert!(*v <= mean.prob_of(*a) + 1e-12);
        }
    }

    #[test]
    fn repaired_masses_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let budget = Budget::powerset(4).unwrap();
        for _ in 0..1000 {
            let k = rng.random_range(1..8);
            let samples: Vec<_> = (0..k).map(|_| random_simplex(&mut rng, 4)).collect();
            let lp = lower_from_samples(&SampleCloud::new(samples).unwrap(), &budget).unwrap();
            let m = mass_from_lower(&lp).unwrap();
            assert!(m.is_valid());
        }
    }

    #[test]
    fn errors() {
        assert_eq!(SampleCloud::new(vec![]), Err(Error::EmptyCloud));
        let cloud = SampleCloud::new(vec![pv(&[0.5, 0.5])]).unwrap();
        assert!(matches!(
            lower_from_samples(&cloud, &Budget::powerset(3).unwrap()),
            Err(Error::FrameMismatch { .. })
        ));
    }
}
