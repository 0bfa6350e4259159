//! Python bindings for the rsnn-lab calculus.
//!
//! Set functions travel as a list of focal sets (each a list of class
//! indices) plus a parallel list of values.

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use rsnn_lab::belief::{self, BeliefFunction, MassFunction, ProbabilityVector};
use rsnn_lab::calib::{self, OodScores, ScoredOutcome};
use rsnn_lab::evalrank::{self, EvalConfig};
use rsnn_lab::frame::{Budget, FocalSet};
use rsnn_lab::measures::{LogBase, VertexMode};
use rsnn_lab::{conformal, credal, io, measures, rsloss, Error};

fn py_err(e: Error) -> PyErr {
    if e.is_validation() {
        PyValueError::new_err(e.to_string())
    } else {
        PyIOError::new_err(e.to_string())
    }
}

fn budget(n: usize, sets: &[Vec<usize>]) -> PyResult<Budget> {
    let sets = sets
        .iter()
        .map(|s| {
            if let Some(&c) = s.iter().find(|&&c| c >= n) {
                return Err(py_err(Error::OutOfRange { index: c, n }));
            }
            Ok(FocalSet::from_indices(s))
        })
        .collect::<PyResult<Vec<_>>>()?;
    Budget::new(n, sets).map_err(py_err)
}

fn mass(n: usize, sets: &[Vec<usize>], masses: Vec<f64>) -> PyResult<MassFunction> {
    MassFunction::new(budget(n, sets)?, masses).map_err(py_err)
}

fn base(s: &str) -> PyResult<LogBase> {
    s.parse().map_err(py_err)
}

/// Belief of every focal set from its mass.
#[pyfunction]
fn belief_from_mass(n: usize, sets: Vec<Vec<usize>>, masses: Vec<f64>) -> PyResult<Vec<f64>> {
    let m = mass(n, &sets, masses)?;
    Ok(belief::belief_from_mass(&m).map_err(py_err)?.beliefs().to_vec())
}

/// Moebius inverse of a belief vector; the result may hold negative masses.
#[pyfunction]
fn mass_from_belief(n: usize, sets: Vec<Vec<usize>>, beliefs: Vec<f64>) -> PyResult<Vec<f64>> {
    let bel = BeliefFunction::new(budget(n, &sets)?, beliefs).map_err(py_err)?;
    Ok(belief::mass_from_belief(&bel).masses().to_vec())
}

/// Moebius inverse followed by the mass repair.
#[pyfunction]
fn repaired_mass_from_belief(n: usize, sets: Vec<Vec<usize>>, beliefs: Vec<f64>) -> PyResult<Vec<f64>> {
    let bel = BeliefFunction::new(budget(n, &sets)?, beliefs).map_err(py_err)?;
    Ok(belief::repaired_mass_from_belief(&bel).map_err(py_err)?.masses().to_vec())
}

#[pyfunction]
fn plausibility(n: usize, sets: Vec<Vec<usize>>, masses: Vec<f64>, set: Vec<usize>) -> PyResult<f64> {
    let m = mass(n, &sets, masses)?;
    belief::plausibility(&m, FocalSet::from_indices(&set)).map_err(py_err)
}

#[pyfunction]
fn pignistic(n: usize, sets: Vec<Vec<usize>>, masses: Vec<f64>) -> PyResult<Vec<f64>> {
    let m = mass(n, &sets, masses)?;
    Ok(belief::pignistic(&m).map_err(py_err)?.into_vec())
}

/// Extreme points of the credal set, exact or by the 2N approximation.
#[pyfunction]
#[pyo3(signature = (n, sets, masses, mode = "exact"))]
fn credal_vertices(n: usize, sets: Vec<Vec<usize>>, masses: Vec<f64>, mode: &str) -> PyResult<Vec<Vec<f64>>> {
    let m = mass(n, &sets, masses)?;
    let set = match mode.parse::<VertexMode>().map_err(py_err)? {
        VertexMode::Exact => credal::credal_vertices_exact(&m),
        VertexMode::Approx => credal::credal_vertices_approx(&m),
    }
    .map_err(py_err)?;
    Ok(set.vertices().iter().map(|v| v.as_slice().to_vec()).collect())
}

#[pyfunction]
#[pyo3(signature = (n, sets, masses, base = "2"))]
fn non_specificity(n: usize, sets: Vec<Vec<usize>>, masses: Vec<f64>, base: &str) -> PyResult<f64> {
    let m = mass(n, &sets, masses)?;
    measures::non_specificity(&m, self::base(base)?).map_err(py_err)
}

/// Width of the entropy range over the credal set of reachable intervals.
#[pyfunction]
#[pyo3(signature = (lower, upper, base = "e"))]
fn credal_uncertainty(lower: Vec<f64>, upper: Vec<f64>, base: &str) -> PyResult<f64> {
    let iv = credal::ProbabilityIntervals::new(lower, upper).map_err(py_err)?;
    let reach = credal::reachable_intervals(&iv).map_err(py_err)?;
    measures::credal_uncertainty(&reach, self::base(base)?).map_err(py_err)
}

/// `(d, ns, e)` for one point prediction against a true class.
#[pyfunction]
fn evaluate_point(probs: Vec<f64>, truth: usize, lam: f64) -> PyResult<(f64, f64, f64)> {
    let p = ProbabilityVector::new(probs).map_err(py_err)?;
    let n = p.len();
    let lower = Budget::singletons(n).map_err(py_err)?;
    let row = evalrank::evaluate_instance("", &io::Prediction::Point(p), truth, lam, &EvalConfig::default(), &lower)
        .map_err(py_err)?;
    Ok((row.d, row.ns, row.e))
}

/// Evaluates a predictions file against a labels file; returns the JSON report.
#[pyfunction]
#[pyo3(signature = (predictions, labels, lam, name = "model"))]
fn evaluate_file(predictions: &str, labels: &str, lam: f64, name: &str) -> PyResult<String> {
    let ds = io::read_predictions(predictions).map_err(py_err)?;
    let lab = io::read_labels(labels, &ds.header.frame).map_err(py_err)?;
    let truth = lab.align(ds.records.iter().map(|r| r.id.as_str())).map_err(py_err)?;
    let cfg = EvalConfig::default();
    let lower = evalrank::lower_probability_budget(ds.n(), ds.header.budget.as_ref(), &cfg).map_err(py_err)?;
    let report = evalrank::evaluate_dataset(name, &ds.records, &truth, lam, &cfg, &lower).map_err(py_err)?;
    Ok(io::format_report(&report))
}

#[pyfunction]
#[pyo3(signature = (n, sets, logits, gt, alpha = 1e-3, beta = 1e-3))]
fn rs_total_loss(
    n: usize,
    sets: Vec<Vec<usize>>,
    logits: Vec<Vec<f64>>,
    gt: Vec<Vec<f64>>,
    alpha: f64,
    beta: f64,
) -> PyResult<f64> {
    let cfg = rsloss::LossConfig { alpha, beta };
    rsloss::rs_total_loss(&budget(n, &sets)?, &logits, &gt, &cfg).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (n, sets, logits, gt, alpha = 1e-3, beta = 1e-3))]
fn loss_gradient(
    n: usize,
    sets: Vec<Vec<usize>>,
    logits: Vec<Vec<f64>>,
    gt: Vec<Vec<f64>>,
    alpha: f64,
    beta: f64,
) -> PyResult<Vec<Vec<f64>>> {
    let cfg = rsloss::LossConfig { alpha, beta };
    rsloss::loss_gradient(&budget(n, &sets)?, &logits, &gt, &cfg).map_err(py_err)
}

#[pyfunction]
fn roc_auc(id: Vec<f64>, ood: Vec<f64>) -> PyResult<f64> {
    calib::roc_auc(&OodScores::new(id, ood).map_err(py_err)?).map_err(py_err)
}

#[pyfunction]
fn pr_auc(id: Vec<f64>, ood: Vec<f64>) -> PyResult<f64> {
    calib::pr_auc(&OodScores::new(id, ood).map_err(py_err)?).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (confidence, predicted, truth, bins = 10))]
fn ece(confidence: Vec<f64>, predicted: Vec<usize>, truth: Vec<usize>, bins: usize) -> PyResult<f64> {
    if confidence.len() != predicted.len() || confidence.len() != truth.len() {
        return Err(PyValueError::new_err("confidence, predicted and truth differ in length"));
    }
    let outcomes: Vec<ScoredOutcome> = confidence
        .into_iter()
        .zip(predicted)
        .zip(truth)
        .map(|((confidence, predicted), truth)| ScoredOutcome { confidence, predicted, truth })
        .collect();
    calib::ece(&outcomes, bins).map_err(py_err)
}

/// Conformal p-values of every class for one test mass, given calibration
/// non-conformity scores.
#[pyfunction]
fn conformal_p_values(
    calibration_scores: Vec<f64>,
    n: usize,
    sets: Vec<Vec<usize>>,
    masses: Vec<f64>,
    seed: u64,
    index: u64,
) -> PyResult<Vec<f64>> {
    let cal = conformal::ConformalCalibration::from_scores(calibration_scores).map_err(py_err)?;
    let m = mass(n, &sets, masses)?;
    // epsilon only decides membership, the p-values do not depend on it
    let set = conformal::predict_set(&cal, "", &m, 0.5, seed, index).map_err(py_err)?;
    Ok(set.p_values)
}

/// Runs the command-line interface with `args` (without the program name)
/// and returns its exit code.
#[pyfunction]
fn run_cli(args: Vec<String>) -> i32 {
    let argv = std::iter::once("rsnn-lab".to_string()).chain(args);
    rsnn_lab::cli::main_with_args(argv.map(std::ffi::OsString::from))
}

#[pymodule]
fn rsnn_lab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(belief_from_mass, m)?)?;
    m.add_function(wrap_pyfunction!(mass_from_belief, m)?)?;
    m.add_function(wrap_pyfunction!(repaired_mass_from_belief, m)?)?;
    m.add_function(wrap_pyfunction!(plausibility, m)?)?;
    m.add_function(wrap_pyfunction!(pignistic, m)?)?;
    m.add_function(wrap_pyfunction!(credal_vertices, m)?)?;
    m.add_function(wrap_pyfunction!(non_specificity, m)?)?;
    m.add_function(wrap_pyfunction!(credal_uncertainty, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_point, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_file, m)?)?;
    m.add_function(wrap_pyfunction!(rs_total_loss, m)?)?;
    m.add_function(wrap_pyfunction!(loss_gradient, m)?)?;
    m.add_function(wrap_pyfunction!(roc_auc, m)?)?;
    m.add_function(wrap_pyfunction!(pr_auc, m)?)?;
    m.add_function(wrap_pyfunction!(ece, m)?)?;
    m.add_function(wrap_pyfunction!(conformal_p_values, m)?)?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
