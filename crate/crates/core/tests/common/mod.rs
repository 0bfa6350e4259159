//! Random generators shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rsnn_lab::{Budget, FocalSet, MassFunction, ProbabilityVector};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random distribution; roughly a third of the draws put zeros in.
pub fn random_prob(rng: &mut impl Rng, n: usize) -> ProbabilityVector {
    let sparse = rng.random_bool(0.3);
    let mut w: Vec<f64> = (0..n)
        .map(|_| {
            if sparse && rng.random_bool(0.4) {
                0.0
            } else {
                -rng.random::<f64>().max(1e-300).ln()
            }
        })
        .collect();
    if w.iter().all(|&v| v == 0.0) {
        w[rng.random_range(0..n)] = 1.0;
    }
    let s: f64 = w.iter().sum();
    let mut p: Vec<f64> = w.iter().map(|v| v / s).collect();
    // absorb rounding so the vector passes strict validation
    let drift = 1.0 - p.iter().sum::<f64>();
    let i = (0..n).max_by(|&a, &b| p[a].total_cmp(&p[b])).unwrap();
    p[i] += drift;
    ProbabilityVector::new(p).unwrap()
}

/// A random valid mass on `budget` with about `density` of the sets focal.
pub fn random_mass_on(rng: &mut impl Rng, budget: &Budget, density: f64) -> MassFunction {
    let k = budget.len();
    let mut w: Vec<f64> = (0..k)
        .map(|_| if rng.random_bool(density) { rng.random::<f64>() } else { 0.0 })
        .collect();
    if w.iter().all(|&v| v == 0.0) {
        w[rng.random_range(0..k)] = 1.0;
    }
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= s);
    MassFunction::new(budget.clone(), w).unwrap()
}

pub fn random_mass(rng: &mut impl Rng, n: usize) -> MassFunction {
    let density = rng.random_range(0.1..=1.0);
    random_mass_on(rng, &Budget::powerset(n).unwrap(), density)
}

/// Every non-empty subset of an `n`-class frame.
pub fn all_sets(n: usize) -> Vec<FocalSet> {
    (1u64..(1u64 << n)).map(FocalSet::from_bits).collect()
}

/// Writes calibration and test belief files plus label files for `n` synthetic classes.
pub fn write_conformal_fixture(
    dir: &std::path::Path,
    n: usize,
    calibration: usize,
    test: usize,
    seed: u64,
) -> [std::path::PathBuf; 4] {
    use rsnn_lab::belief::{belief_from_mass, BeliefFunction};
    use rsnn_lab::conformal::synthetic_beliefs;
    use rsnn_lab::io::{
        format_labels, write_predictions, DatasetFile, DatasetHeader, Labels, Prediction,
        PredictionRecord,
    };
    use rsnn_lab::Frame;

    let names: Vec<String> = (0..n).map(|i| format!("class{i}")).collect();
    let frame = Frame::new(&names).unwrap();
    let mut out = Vec::new();
    for (stream, (count, tag)) in [(calibration, "cal"), (test, "test")].into_iter().enumerate() {
        let (masses, classes) = synthetic_beliefs(n, count, 1.5, seed, stream as u64).unwrap();
        let budget = masses[0].budget().clone();
        let records = masses
            .iter()
            .enumerate()
            .map(|(i, m)| {
                let bel = belief_from_mass(m).unwrap();
                PredictionRecord {
                    id: format!("{tag}{i}"),
                    prediction: Prediction::Belief {
                        belief: BeliefFunction::new(budget.clone(), bel.beliefs().to_vec()).unwrap(),
                        set_indices: (0..budget.len()).collect(),
                    },
                }
            })
            .collect();
        let ds = DatasetFile {
            header: DatasetHeader { frame: frame.clone(), budget: Some(budget), defaults: Default::default() },
            records,
        };
        let pred = dir.join(format!("{tag}.jsonl"));
        write_predictions(&ds, &pred).unwrap();
        let labels = Labels {
            ids: (0..count).map(|i| format!("{tag}{i}")).collect(),
            classes,
        };
        let lab = dir.join(format!("{tag}_labels.csv"));
        std::fs::write(&lab, format_labels(&labels, &frame)).unwrap();
        out.push(pred);
        out.push(lab);
    }
    out.try_into().unwrap()
}
