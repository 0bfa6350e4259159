mod common;

use common::{random_mass, random_prob, rng};
use proptest::prelude::*;
use rand::Rng;
use rsnn_lab::belief::{belief_from_mass, encode_ground_truth, BeliefFunction};
use rsnn_lab::budgeting::{overlap_ratio, select_budget, ClassEllipsoid};
use rsnn_lab::calib::{ece, pr_auc, roc_auc, OodScores, ScoredOutcome};
use rsnn_lab::conformal::{calibrate, coverage_report, predict_set, synthetic_beliefs, ConformalCalibration};
use rsnn_lab::credal::ProbabilityIntervals;
use rsnn_lab::evalrank::{crossover_lambda, rank_models, EvalConfig, EvalReport, EvalRow};
use rsnn_lab::frame::{Budget, FocalSet, Frame};
use rsnn_lab::io::{
    format_predictions, format_report, parse_predictions, ConfigDefaults, DatasetFile, DatasetHeader,
    Prediction, PredictionRecord,
};
use rsnn_lab::lowerprob::SampleCloud;
use rsnn_lab::rsloss::{loss_gradient, rs_total_loss, LossConfig};
use rsnn_lab::{DivergenceKind, LogBase};

fn report(model: &str, lambda: f64, d: f64, ns: f64) -> EvalReport {
    let row = EvalRow {
        id: "x".into(),
        truth: 0,
        predicted: 0,
        correct: true,
        d,
        ns,
        e: 0.0,
    };
    EvalReport::from_rows(model, lambda, EvalConfig::default(), vec![row]).unwrap()
}

fn sphere(class: usize, center: [f64; 3], radius: f64) -> ClassEllipsoid {
    let v = radius * radius / rsnn_lab::budgeting::CHI2_95_3D;
    ClassEllipsoid::from_gaussian(class, center, [[v, 0.0, 0.0], [0.0, v, 0.0], [0.0, 0.0, v]]).unwrap()
}

fn pool(threads: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ranking_at_zero_follows_distance(ds in prop::collection::vec(0.0f64..3.0, 1..6), nss in prop::collection::vec(0.0f64..3.0, 6)) {
        let names: Vec<String> = (0..ds.len()).map(|i| format!("m{i}")).collect();
        let reports: Vec<EvalReport> = names.iter().zip(&ds).zip(&nss).map(|((m, &d), &ns)| report(m, 0.0, d, ns)).collect();
        let r = rank_models(&reports, &[0.0]).unwrap();
        let mut by_d: Vec<(f64, &str)> = ds.iter().cloned().zip(names.iter().map(String::as_str)).collect();
        by_d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(b.1)));
        prop_assert_eq!(r.levels[0].models(), by_d.iter().map(|x| x.1).collect::<Vec<_>>());
    }

    #[test]
    fn ranking_invariant_to_increasing_transform(es in prop::collection::vec(0.0f64..3.0, 1..6)) {
        let names: Vec<String> = (0..es.len()).map(|i| format!("m{i}")).collect();
        let plain: Vec<EvalReport> = names.iter().zip(&es).map(|(m, &e)| report(m, 1.0, e, 0.0)).collect();
        let warped: Vec<EvalReport> = names.iter().zip(&es).map(|(m, &e)| report(m, 1.0, e.exp(), 0.0)).collect();
        let a = rank_models(&plain, &[1.0]).unwrap();
        let b = rank_models(&warped, &[1.0]).unwrap();
        prop_assert_eq!(a.levels[0].models(), b.levels[0].models());
    }

    #[test]
    fn point_models_rank_independent_of_lambda(ds in prop::collection::vec(0.0f64..3.0, 1..6), lambda in 0.0f64..10.0) {
        let names: Vec<String> = (0..ds.len()).map(|i| format!("m{i}")).collect();
        let mut reports = Vec::new();
        for l in [0.0, lambda] {
            reports.extend(names.iter().zip(&ds).map(|(m, &d)| report(m, l, d, 0.0)));
        }
        let grid = if lambda == 0.0 { vec![0.0] } else { vec![0.0, lambda] };
        let r = rank_models(&reports, &grid).unwrap();
        prop_assert_eq!(r.levels[0].models(), r.levels.last().unwrap().models());
    }

    #[test]
    fn crossover_matches_affine_lines(d1 in 0.0f64..2.0, n1 in 0.0f64..2.0, d2 in 0.0f64..2.0, n2 in 0.0f64..2.0) {
        match crossover_lambda(d1, n1, d2, n2) {
            Some(l) => {
                prop_assert!(l >= 0.0);
                prop_assert!(((d1 + l * n1) - (d2 + l * n2)).abs() <= 1e-9 * (1.0 + l));
            }
            None => prop_assert!(n1 == n2 || (d2 - d1) / (n1 - n2) < 0.0),
        }
    }

    #[test]
    fn overlap_in_unit_interval(cx in -2.0f64..2.0, r0 in 0.5f64..2.0, r1 in 0.5f64..2.0, seed in any::<u64>()) {
        let e = [sphere(0, [0.0; 3], r0), sphere(1, [cx, 0.3, 0.0], r1)];
        let v = overlap_ratio(&e, FocalSet::from_indices(&[0, 1]), 2000, seed).unwrap();
        prop_assert!((0.0..=1.0).contains(&v));
    }

    #[test]
    fn loss_non_negative_and_monotone_in_weights(seed in any::<u64>(), alpha in 0.0f64..1.0, beta in 0.0f64..1.0, bump in 0.0f64..1.0) {
        let mut r = rng(seed);
        let budget = Budget::up_to_cardinality(3, 2).unwrap();
        let z: Vec<Vec<f64>> = (0..3).map(|_| (0..budget.len()).map(|_| r.random_range(-5.0..5.0)).collect()).collect();
        let gt: Vec<Vec<f64>> = (0..3).map(|i| encode_ground_truth(&budget, i).unwrap()).collect();
        let base = LossConfig { alpha, beta };
        let l0 = rs_total_loss(&budget, &z, &gt, &base).unwrap();
        prop_assert!(l0 >= 0.0);
        let la = rs_total_loss(&budget, &z, &gt, &LossConfig { alpha: alpha + bump, beta }).unwrap();
        let lb = rs_total_loss(&budget, &z, &gt, &LossConfig { alpha, beta: beta + bump }).unwrap();
        prop_assert!(la >= l0 && lb >= l0);
    }

    #[test]
    fn auroc_side_swap_is_exact(id in prop::collection::vec(0.0f64..1.0, 1..40), ood in prop::collection::vec(0.0f64..1.0, 1..40)) {
        let s = OodScores::new(id, ood).unwrap();
        prop_assert_eq!(roc_auc(&s).unwrap() + roc_auc(&s.swapped()).unwrap(), 1.0);
    }

    #[test]
    fn ood_metrics_invariant_to_monotone_maps(id in prop::collection::vec(0u32..1000, 1..30), ood in prop::collection::vec(0u32..1000, 1..30)) {
        let to = |v: &[u32], f: &dyn Fn(f64) -> f64| v.iter().map(|&x| f(x as f64 / 1000.0)).collect::<Vec<f64>>();
        let plain = OodScores::new(to(&id, &|x| x), to(&ood, &|x| x)).unwrap();
        let warped = OodScores::new(to(&id, &|x| x.exp() * 3.0), to(&ood, &|x| x.exp() * 3.0)).unwrap();
        prop_assert_eq!(roc_auc(&plain).unwrap(), roc_auc(&warped).unwrap());
        prop_assert_eq!(pr_auc(&plain).unwrap(), pr_auc(&warped).unwrap());
    }

    #[test]
    fn ece_bounded_and_permutation_invariant(conf in prop::collection::vec((0.0f64..=1.0, any::<bool>()), 1..60), bins in 1usize..20, seed in any::<u64>()) {
        let outcomes: Vec<ScoredOutcome> = conf.iter().map(|&(c, ok)| ScoredOutcome { confidence: c, predicted: 0, truth: if ok { 0 } else { 1 } }).collect();
        let e = ece(&outcomes, bins).unwrap();
        prop_assert!((0.0..=1.0).contains(&e));
        let mut shuffled = outcomes.clone();
        let mut r = rng(seed);
        for i in (1..shuffled.len()).rev() {
            shuffled.swap(i, r.random_range(0..=i));
        }
        prop_assert!((ece(&shuffled, bins).unwrap() - e).abs() <= 1e-12);
    }

    #[test]
    fn p_value_non_increasing(scores in prop::collection::vec(0.0f64..1.0, 1..50), s1 in 0.0f64..1.0, s2 in 0.0f64..1.0, u in 0.0f64..=1.0) {
        let cal = ConformalCalibration::from_scores(scores).unwrap();
        let (lo, hi) = if s1 <= s2 { (s1, s2) } else { (s2, s1) };
        prop_assert!(cal.p_value(hi, u) <= cal.p_value(lo, u));
    }

    #[test]
    fn prediction_sets_nest(seed in any::<u64>(), e1 in 0.01f64..0.5, gap in 0.0f64..0.4) {
        let (masses, labels) = synthetic_beliefs(6, 80, 1.0, seed, 0).unwrap();
        let cal = calibrate(&masses[..50], &labels[..50]).unwrap();
        for (i, m) in masses[50..].iter().enumerate() {
            let wide = predict_set(&cal, "t", m, e1, seed, i as u64).unwrap();
            let narrow = predict_set(&cal, "t", m, e1 + gap, seed, i as u64).unwrap();
            prop_assert!(narrow.members.iter().all(|c| wide.members.contains(c)));
        }
    }

    #[test]
    fn prediction_files_round_trip(seed in any::<u64>(), n in 2usize..=5, count in 1usize..8) {
        let mut r = rng(seed);
        let labels: Vec<String> = (0..n).map(|i| format!("k{i}")).collect();
        let budget = Budget::up_to_cardinality(n, 2).unwrap();
        let records = (0..count).map(|i| {
            let prediction = match r.random_range(0..4) {
                0 => Prediction::Point(random_prob(&mut r, n)),
                1 => Prediction::Samples(SampleCloud::new((0..3).map(|_| random_prob(&mut r, n)).collect()).unwrap()),
                2 => {
                    let m = common::random_mass_on(&mut r, &budget, 0.7);
                    let bel = belief_from_mass(&m).unwrap();
                    Prediction::Belief { belief: BeliefFunction::new(budget.clone(), bel.beliefs().to_vec()).unwrap(), set_indices: (0..budget.len()).collect() }
                }
                _ => {
                    let p = random_prob(&mut r, n);
                    let lower: Vec<f64> = p.as_slice().iter().map(|v| v * 0.5).collect();
                    let upper: Vec<f64> = p.as_slice().iter().map(|v| (v * 1.5).min(1.0)).collect();
                    Prediction::Interval(ProbabilityIntervals::new(lower, upper).unwrap())
                }
            };
            PredictionRecord { id: format!("r{i}"), prediction }
        }).collect();
        let ds = DatasetFile {
            header: DatasetHeader {
                frame: Frame::new(&labels).unwrap(),
                budget: Some(budget.clone()),
                defaults: ConfigDefaults { divergence: Some(DivergenceKind::Js), ns_base: Some(LogBase::E), ..Default::default() },
            },
            records,
        };
        let text = format_predictions(&ds);
        let back = parse_predictions(text.as_bytes(), "mem").unwrap();
        prop_assert_eq!(back, ds);
    }

    #[test]
    fn reports_round_trip(seed in any::<u64>()) {
        let mut r = rng(seed);
        let rows: Vec<EvalRow> = (0..5).map(|i| EvalRow {
            id: format!("ü{i}"),
            truth: i % 3,
            predicted: r.random_range(0..3),
            correct: r.random_bool(0.5),
            d: r.random::<f64>(),
            ns: r.random::<f64>() * 2.0,
            e: 0.0,
        }).collect();
        let rep = EvalReport::from_rows("modèle-α", r.random::<f64>(), EvalConfig::default(), rows).unwrap();
        let text = format_report(&rep);
        let back: EvalReport = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(&back, &rep);
        prop_assert_eq!(format_report(&back), text);
    }
}

#[test]
fn gradient_matches_central_differences_away_from_kinks() {
    let mut r = rng(99);
    let cfg = LossConfig::default();
    let h = 1e-5;
    for case in 0..40 {
        let n = 2 + case % 3;
        let budget = Budget::up_to_cardinality(n, n).unwrap();
        let z: Vec<Vec<f64>> = (0..2).map(|_| (0..budget.len()).map(|_| r.random_range(-4.0..4.0)).collect()).collect();
        let gt: Vec<Vec<f64>> = (0..2).map(|i| encode_ground_truth(&budget, i % n).unwrap()).collect();
        let g = loss_gradient(&budget, &z, &gt, &cfg).unwrap();
        let mut num = 0.0f64;
        let mut den = 0.0f64;
        for i in 0..z.len() {
            for k in 0..budget.len() {
                let mut zp = z.clone();
                zp[i][k] += h;
                let mut zm = z.clone();
                zm[i][k] -= h;
                let fd = (rs_total_loss(&budget, &zp, &gt, &cfg).unwrap() - rs_total_loss(&budget, &zm, &gt, &cfg).unwrap()) / (2.0 * h);
                num = num.max((fd - g[i][k]).abs());
                den = den.max(fd.abs()).max(g[i][k].abs());
            }
        }
        assert!(num / den <= 1e-5, "case {case}: {}", num / den);
    }
}

#[test]
fn select_budget_same_under_any_thread_count() {
    let e: Vec<ClassEllipsoid> = (0..5)
        .map(|c| sphere(c, [0.9 * c as f64, 0.2 * (c % 2) as f64, 0.0], 1.0))
        .collect();
    let one = pool(1).install(|| select_budget(&e, 4, 5000, 17).unwrap());
    let eight = pool(8).install(|| select_budget(&e, 4, 5000, 17).unwrap());
    assert_eq!(one, eight);
    assert_eq!(one, select_budget(&e, 4, 5000, 17).unwrap());
}

#[test]
fn overlap_shrinks_when_a_class_joins() {
    let mut r = rng(5);
    for _ in 0..20 {
        let e: Vec<ClassEllipsoid> = (0..3)
            .map(|c| sphere(c, [r.random_range(-1.0..1.0), r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)], r.random_range(0.6..1.4)))
            .collect();
        let triple = overlap_ratio(&e, FocalSet::from_indices(&[0, 1, 2]), 20_000, 3).unwrap();
        for pair in [[0, 1], [0, 2], [1, 2]] {
            let p = overlap_ratio(&e, FocalSet::from_indices(&pair), 20_000, 3).unwrap();
            assert!(triple <= p + 0.02, "{triple} > {p}");
        }
    }
}

#[test]
fn overlap_symmetric_under_relabelling() {
    let a = sphere(0, [0.0; 3], 1.0);
    let b = sphere(1, [0.7, 0.0, 0.0], 0.8);
    let ab = overlap_ratio(&[a.clone(), b.clone()], FocalSet::from_indices(&[0, 1]), 50_000, 8).unwrap();
    let ba = overlap_ratio(&[b, a], FocalSet::from_indices(&[0, 1]), 50_000, 8).unwrap();
    assert!((ab - ba).abs() < 0.02);
}

#[test]
fn coverage_holds_over_twenty_seeds() {
    let eps = 0.1;
    let mut total = 0.0;
    for seed in 0..20u64 {
        let (masses, labels) = synthetic_beliefs(5, 700, 1.2, seed, 0).unwrap();
        let cal = calibrate(&masses[..200], &labels[..200]).unwrap();
        let rep = coverage_report(&cal, &masses[200..], &labels[200..], eps, seed).unwrap();
        // three standard deviations of calibration plus test noise
        assert!(rep.coverage >= 1.0 - eps - 0.075, "seed {seed}: {}", rep.coverage);
        total += rep.coverage;
    }
    assert!(total / 20.0 >= 1.0 - eps - 0.02);
}

#[test]
fn random_masses_pass_conformal_scoring() {
    let mut r = rng(3);
    for _ in 0..100 {
        let m = random_mass(&mut r, 4);
        for c in 0..4 {
            let s = rsnn_lab::conformal::nonconformity(&m, c).unwrap();
            assert!((0.0..=1.0).contains(&s));
        }
    }
}
