//! Random-set and belief-function uncertainty calculus for classifiers.
//!
//! The crate turns classifier outputs of four kinds (point probabilities,
//! probability samples, belief vectors over a budget of focal sets, and
//! probability intervals) into mass functions and credal sets, and scores
//! them with entropy, non-specificity, divergence-to-credal-set and the
//! combined evaluation metric `E = d + λ·NS`. Alongside sit focal-set
//! budgeting from class embeddings, the random-set training loss with its
//! analytic gradient, calibration metrics and an inductive conformal wrapper.

pub mod belief;
pub mod budgeting;
pub mod calib;
pub mod cli;
pub mod conformal;
pub mod credal;
pub mod error;
pub mod evalrank;
pub mod frame;
pub mod io;
pub mod lattice;
pub mod lowerprob;
pub mod measures;
pub mod rsloss;
pub(crate) mod seeding;

pub use belief::{
    belief_from_mass, encode_ground_truth, mass_from_belief, pignistic, plausibility,
    repair_mass, BeliefFunction, MassFunction, ProbabilityVector,
};
pub use credal::{CredalKind, CredalSet, ProbabilityIntervals};
pub use error::{Error, Result};
pub use frame::{Budget, FocalSet, Frame};
pub use measures::{DivergenceKind, LogBase, MeasureConfig, VertexMode};

/// Numerical tolerances shared by every module.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    /// Allowed deviation of a probability or mass total from one.
    pub normalization: f64,
    /// Decimal digits kept when deduplicating credal vertices.
    pub vertex_digits: i32,
    /// Floor applied to the second argument of the KL divergence.
    pub kl_epsilon: f64,
    /// Clamp applied to sigmoid outputs inside the binary cross-entropy.
    pub sigmoid_clamp: f64,
}

pub const TOL: Tolerances = Tolerances {
    normalization: 1e-9,
    vertex_digits: 12,
    kl_epsilon: 1e-12,
    sigmoid_clamp: 1e-7,
};
