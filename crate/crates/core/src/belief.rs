//! Mass, belief and plausibility on a budget of focal sets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{Budget, FocalSet};
use crate::lattice;
use crate::TOL;

/// A probability distribution over the classes of a frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProbabilityVector(Vec<f64>);

impl ProbabilityVector {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidProbability("no classes".into()));
        }
        if let Some((i, p)) = probs
            .iter()
            .enumerate()
            .find(|(_, p)| !p.is_finite() || **p < 0.0)
        {
            return Err(Error::InvalidProbability(format!(
                "entry {i} is {p}; probabilities must be finite and non-negative"
            )));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > TOL.normalization {
            return Err(Error::InvalidProbability(format!("entries sum to {sum}")));
        }
        Ok(Self(probs))
    }

    pub fn one_hot(n: usize, class: usize) -> Result<Self> {
        if class >= n {
            return Err(Error::OutOfRange { index: class, n });
        }
        let mut p = vec![0.0; n];
        p[class] = 1.0;
        Ok(Self(p))
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    pub(crate) fn from_vec_unchecked(probs: Vec<f64>) -> Self {
        Self(probs)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Probability of a set of classes.
    pub fn prob_of(&self, set: FocalSet) -> f64 {
        set.members().map(|c| self.0[c]).sum()
    }

    /// Index of the largest entry; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        argmax(&self.0)
    }
}

pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Masses over the sets of a budget. Values straight out of a Moebius inverse
/// may be negative or unnormalised; every consumer checks validity first.
#[derive(Debug, Clone, PartialEq)]
pub struct MassFunction {
    budget: Budget,
    masses: Vec<f64>,
}

impl MassFunction {
    /// Validated constructor.
    pub fn new(budget: Budget, masses: Vec<f64>) -> Result<Self> {
        let m = Self::from_raw(budget, masses)?;
        m.check()?;
        Ok(m)
    }

    /// Pairs masses with a budget without checking non-negativity or normalisation.
    pub fn from_raw(budget: Budget, masses: Vec<f64>) -> Result<Self> {
        if budget.len() != masses.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} masses for a budget of {} sets",
                masses.len(),
                budget.len()
            )));
        }
        Ok(Self { budget, masses })
    }

    /// Bayesian mass: all mass on singletons.
    pub fn bayesian(p: &ProbabilityVector) -> Result<Self> {
        Self::new(Budget::singletons(p.len())?, p.as_slice().to_vec())
    }

    /// All mass on the whole frame.
    pub fn vacuous(n: usize) -> Result<Self> {
        Self::new(Budget::new(n, vec![FocalSet::universe(n)])?, vec![1.0])
    }

    /// Builds a validated mass from `(set, mass)` pairs.
    pub fn from_pairs(n: usize, pairs: &[(FocalSet, f64)]) -> Result<Self> {
        let budget = Budget::new(n, pairs.iter().map(|p| p.0).collect())?;
        Self::new(budget, pairs.iter().map(|p| p.1).collect())
    }

    pub fn check(&self) -> Result<()> {
        if let Some((i, m)) = self
            .masses
            .iter()
            .enumerate()
            .find(|(_, m)| !m.is_finite() || **m < 0.0)
        {
            return Err(Error::InvalidMass(format!(
                "mass of {} is {m}",
                self.budget.sets()[i]
            )));
        }
        let sum: f64 = self.masses.iter().sum();
        if (sum - 1.0).abs() > TOL.normalization {
            return Err(Error::InvalidMass(format!("masses sum to {sum}")));
        }
        Ok(())
    }

    pub fn is_valid(&self) -> bool {
        self.check().is_ok()
    }

    pub fn n(&self) -> usize {
        self.budget.n()
    }

    pub fn budget(&self) -> &Budget {
        &self.budget
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn mass_of(&self, set: FocalSet) -> f64 {
        self.budget.position(set).map_or(0.0, |i| self.masses[i])
    }

    /// Iterates `(set, mass)` pairs with non-zero mass.
    pub fn focal_elements(&self) -> impl Iterator<Item = (FocalSet, f64)> + '_ {
        self.budget
            .sets()
            .iter()
            .copied()
            .zip(self.masses.iter().copied())
            .filter(|(_, m)| *m != 0.0)
    }

    /// Belief of an arbitrary set, budget member or not.
    pub fn belief_of(&self, set: FocalSet) -> f64 {
        self.focal_elements()
            .filter(|(b, _)| b.is_subset_of(set))
            .map(|(_, m)| m)
            .sum()
    }

    /// True when every focal element is a singleton.
    pub fn is_bayesian(&self) -> bool {
        self.focal_elements().all(|(s, _)| s.cardinality() == 1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeliefFunction {
    budget: Budget,
    beliefs: Vec<f64>,
}

impl BeliefFunction {
    pub fn new(budget: Budget, beliefs: Vec<f64>) -> Result<Self> {
        if budget.len() != beliefs.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} beliefs for a budget of {} sets",
                beliefs.len(),
                budget.len()
            )));
        }
        Ok(Self { budget, beliefs })
    }

    pub fn budget(&self) -> &Budget {
        &self.budget
    }

    pub fn beliefs(&self) -> &[f64] {
        &self.beliefs
    }

    pub fn belief_of(&self, set: FocalSet) -> Option<f64> {
        self.budget.position(set).map(|i| self.beliefs[i])
    }
}

/// `Bel(A) = Σ m(B)` over budget sets `B ⊆ A`.
pub fn belief_from_mass(m: &MassFunction) -> Result<BeliefFunction> {
    m.check()?;
    let beliefs = lattice::subset_sum(&m.budget, &m.masses);
    BeliefFunction::new(m.budget.clone(), beliefs)
}

/// Moebius inverse of a belief vector on its budget. The result may hold
/// negative masses; see [`repair_mass`].
pub fn mass_from_belief(bel: &BeliefFunction) -> MassFunction {
    let masses = lattice::subset_moebius(&bel.budget, &bel.beliefs);
    MassFunction {
        budget: bel.budget.clone(),
        masses,
    }
}

/// `Pl(A) = 1 - Bel(Θ ∖ A)`.
pub fn plausibility(m: &MassFunction, set: FocalSet) -> Result<f64> {
    m.check()?;
    Ok(1.0 - m.belief_of(set.complement(m.n())))
}

/// Pignistic transform: every focal set shares its mass equally among its members.
pub fn pignistic(m: &MassFunction) -> Result<ProbabilityVector> {
    m.check()?;
    let mut p = vec![0.0; m.n()];
    for (set, mass) in m.focal_elements() {
        let share = mass / set.cardinality() as f64;
        for c in set.members() {
            p[c] += share;
        }
    }
    Ok(ProbabilityVector(p))
}

/// Ground-truth belief vector: 1 for every budget set containing `true_class`.
pub fn encode_ground_truth(budget: &Budget, true_class: usize) -> Result<Vec<f64>> {
    if true_class >= budget.n() {
        return Err(Error::OutOfRange {
            index: true_class,
            n: budget.n(),
        });
    }
    Ok(budget
        .sets()
        .iter()
        .map(|s| if s.contains(true_class) { 1.0 } else { 0.0 })
        .collect())
}

/// Turns arbitrary raw masses into a valid mass function.
///
/// Negative entries are clamped to zero. A shortfall below one goes to the
/// universal set, which is appended to the budget when absent; an excess is
/// removed by proportional rescaling. Already-valid masses pass through.
pub fn repair_mass(budget: &Budget, raw: &[f64]) -> Result<MassFunction> {
    if budget.len() != raw.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} masses for a budget of {} sets",
            raw.len(),
            budget.len()
        )));
    }
    if let Some(bad) = raw.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidMass(format!("non-finite raw mass {bad}")));
    }
    if raw.iter().all(|&v| v <= 0.0) {
        return Err(Error::AllZero);
    }
    let mut masses: Vec<f64> = raw.iter().map(|&v| v.max(0.0)).collect();
    let sum: f64 = masses.iter().sum();
    if (sum - 1.0).abs() <= TOL.normalization {
        return Ok(MassFunction {
            budget: budget.clone(),
            masses,
        });
    }
    if sum > 1.0 {
        masses.iter_mut().for_each(|v| *v /= sum);
        return Ok(MassFunction {
            budget: budget.clone(),
            masses,
        });
    }
    let universe = budget.universe();
    let residual = 1.0 - sum;
    match budget.position(universe) {
        Some(i) => {
            masses[i] += residual;
            Ok(MassFunction {
                budget: budget.clone(),
                masses,
            })
        }
        None => {
            masses.push(residual);
            Ok(MassFunction {
                budget: budget.with_set(universe)?,
                masses,
            })
        }
    }
}

/// Moebius inverse followed by [`repair_mass`].
pub fn repaired_mass_from_belief(bel: &BeliefFunction) -> Result<MassFunction> {
    let raw = mass_from_belief(bel);
    repair_mass(&raw.budget, &raw.masses)
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// The three-class example: m({c1}) = 0.5, m({c3}) = 0.1, m({c1,c2}) = 0.4.
    pub fn unified_example() -> MassFunction {
        MassFunction::from_pairs(
            3,
            &[
                (FocalSet::from_indices(&[0]), 0.5),
                (FocalSet::from_indices(&[2]), 0.1),
                (FocalSet::from_indices(&[0, 1]), 0.4),
            ],
        )
        .unwrap()
    }
}
