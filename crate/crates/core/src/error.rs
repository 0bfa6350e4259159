use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("duplicate class label `{0}`")]
    DuplicateLabel(String),
    #[error("frame has {0} classes; at most {max} are supported", max = crate::frame::MAX_CLASSES)]
    TooManyClasses(usize),
    #[error("frame must contain at least one class")]
    EmptyFrame,
    #[error("unknown class label `{0}`")]
    UnknownLabel(String),
    #[error("focal sets must be non-empty")]
    EmptySet,
    #[error("powerset of {n} classes up to cardinality {max_cardinality} is too large to enumerate")]
    PowersetTooLarge { n: usize, max_cardinality: usize },
    #[error("class index {index} out of range for a frame of {n} classes")]
    OutOfRange { index: usize, n: usize },
    #[error("invalid mass function: {0}")]
    InvalidMass(String),
    #[error("invalid probability vector: {0}")]
    InvalidProbability(String),
    #[error("every raw mass is non-positive; nothing to repair")]
    AllZero,
    #[error("frame mismatch: expected {expected} classes, found {found}")]
    FrameMismatch { expected: usize, found: usize },
    #[error("lower score exceeds upper score for class {0}")]
    NonOrderedScores(usize),
    #[error("probability intervals describe an empty credal set (sum lower = {sum_lower}, sum upper = {sum_upper})")]
    EmptyCredalSet { sum_lower: f64, sum_upper: f64 },
    #[error("invalid probability intervals: {0}")]
    InvalidIntervals(String),
    #[error("credal set carries no explicit vertices")]
    NoVertices,
    #[error("sample cloud is empty")]
    EmptyCloud,
    #[error("length mismatch: {left} predictions vs {right} labels")]
    LengthMismatch { left: usize, right: usize },
    #[error("model `{model}` was not evaluated at lambda = {lambda}")]
    GridMismatch { model: String, lambda: f64 },
    #[error("class {class} has {count} embedding points; at least {required} are needed")]
    InsufficientPoints { class: usize, count: usize, required: usize },
    #[error("overlap is only defined for sets of two or more classes")]
    SingletonSet,
    #[error("{points} points cannot form {clusters} clusters")]
    TooFewPoints { points: usize, clusters: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("loss diverged at epoch {0}")]
    DivergedLoss(usize),
    #[error("empty input")]
    EmptyInput,
    #[error("one side of the score comparison is empty")]
    EmptySide,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("{path}:{line}: parse error: {message}")]
    Parse { path: String, line: usize, message: String },
    #[error("{path}:{line}: schema error: {message}")]
    Schema { path: String, line: usize, message: String },
    #[error("{path}:{line}: duplicate id `{id}`")]
    DuplicateId { path: String, line: usize, id: String },
    #[error("{path}:{line}: unknown label `{label}`")]
    UnknownLabelAt { path: String, line: usize, label: String },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl Error {
    /// Validation failures (bad input data or arguments) as opposed to I/O trouble.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io { .. } | Error::DivergedLoss(_))
    }
}
