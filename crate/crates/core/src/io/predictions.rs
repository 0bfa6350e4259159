//! Line-oriented prediction files.
//!
//! The first line is a header object naming the class labels, an optional
//! budget of focal sets and optional measure defaults. Each following line is
//! one prediction record tagged by `kind`:
//!
//! ```text
//! {"format":"rsnn-lab-predictions","version":1,"labels":["a","b","c"],"budget":[[0],[1],[2],[0,1]]}
//! {"id":"x1","kind":"point","probs":[0.7,0.2,0.1]}
//! {"id":"x2","kind":"samples","samples":[[0.6,0.3,0.1],[0.8,0.1,0.1]]}
//! {"id":"x3","kind":"belief","sets":[0,1,2,3],"beliefs":[0.5,0.0,0.1,0.9]}
//! {"id":"x4","kind":"interval","lower":[0.5,0.0,0.1],"upper":[0.9,0.4,0.1]}
//! ```

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::belief::{BeliefFunction, ProbabilityVector};
use crate::credal::ProbabilityIntervals;
use crate::error::{Error, Result};
use crate::frame::{Budget, FocalSet, Frame};
use crate::lowerprob::SampleCloud;
use crate::measures::{DivergenceKind, LogBase, VertexMode};

pub const FORMAT_TAG: &str = "rsnn-lab-predictions";
pub const FORMAT_VERSION: u32 = 1;

/// Measure defaults a dataset may carry; command-line flags take precedence.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDefaults {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub divergence: Option<DivergenceKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub divergence_base: Option<LogBase>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ns_base: Option<LogBase>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entropy_base: Option<LogBase>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertex_mode: Option<VertexMode>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHeader {
    format: String,
    version: u32,
    labels: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    budget: Option<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    defaults: Option<ConfigDefaults>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum RawRecord {
    Point {
        id: String,
        probs: Vec<f64>,
    },
    Samples {
        id: String,
        samples: Vec<Vec<f64>>,
    },
    Belief {
        id: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sets: Option<Vec<usize>>,
        beliefs: Vec<f64>,
    },
    Interval {
        id: String,
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
}

/// Payload of one prediction, already validated against the dataset header.
#[derive(Debug, Clone, PartialEq)]
pub enum Prediction {
    Point(ProbabilityVector),
    Samples(SampleCloud),
    /// Belief values with the sub-budget they are defined on, plus the
    /// header budget positions of those sets.
    Belief {
        belief: BeliefFunction,
        set_indices: Vec<usize>,
    },
    Interval(ProbabilityIntervals),
}

impl Prediction {
    pub fn kind(&self) -> &'static str {
        match self {
            Prediction::Point(_) => "point",
            Prediction::Samples(_) => "samples",
            Prediction::Belief { .. } => "belief",
            Prediction::Interval(_) => "interval",
        }
    }

    pub fn n(&self) -> usize {
        match self {
            Prediction::Point(p) => p.len(),
            Prediction::Samples(c) => c.n(),
            Prediction::Belief { belief, .. } => belief.budget().n(),
            Prediction::Interval(iv) => iv.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRecord {
    pub id: String,
    pub prediction: Prediction,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetHeader {
    pub frame: Frame,
    pub budget: Option<Budget>,
    pub defaults: ConfigDefaults,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetFile {
    pub header: DatasetHeader,
    pub records: Vec<PredictionRecord>,
}

impl DatasetFile {
    pub fn n(&self) -> usize {
        self.header.frame.len()
    }
}

pub fn read_predictions(path: impl AsRef<Path>) -> Result<DatasetFile> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_predictions(BufReader::new(file), &path.display().to_string())
}

/// Parses a prediction stream; `origin` names the source in error messages.
pub fn parse_predictions(reader: impl BufRead, origin: &str) -> Result<DatasetFile> {
    let mut header: Option<DatasetHeader> = None;
    let mut records = Vec::new();
    let mut ids = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::Io {
            path: origin.to_string(),
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |e: serde_json::Error| Error::Parse {
            path: origin.to_string(),
            line: line_no,
            message: e.to_string(),
        };
        let schema_err = |message: String| Error::Schema {
            path: origin.to_string(),
            line: line_no,
            message,
        };
        match &header {
            None => {
                let raw: RawHeader = serde_json::from_str(&line).map_err(parse_err)?;
                header = Some(validate_header(raw).map_err(|e| schema_err(e.to_string()))?);
            }
            Some(h) => {
                let raw: RawRecord = serde_json::from_str(&line).map_err(parse_err)?;
                let record = validate_record(raw, h).map_err(|e| schema_err(e.to_string()))?;
                if !ids.insert(record.id.clone()) {
                    return Err(Error::DuplicateId {
                        path: origin.to_string(),
                        line: line_no,
                        id: record.id,
                    });
                }
                records.push(record);
            }
        }
    }
    let header = header.ok_or_else(|| Error::Schema {
        path: origin.to_string(),
        line: 1,
        message: "missing header line".into(),
    })?;
    Ok(DatasetFile { header, records })
}

fn validate_header(raw: RawHeader) -> Result<DatasetHeader> {
    if raw.format != FORMAT_TAG {
        return Err(Error::InvalidArgument(format!(
            "unknown format `{}`, expected `{FORMAT_TAG}`",
            raw.format
        )));
    }
    if raw.version != FORMAT_VERSION {
        return Err(Error::InvalidArgument(format!(
            "unsupported version {}",
            raw.version
        )));
    }
    let frame = Frame::new(&raw.labels)?;
    let budget = raw
        .budget
        .map(|sets| budget_from_indices(frame.len(), &sets))
        .transpose()?;
    Ok(DatasetHeader {
        frame,
        budget,
        defaults: raw.defaults.unwrap_or_default(),
    })
}

pub(crate) fn budget_from_indices(n: usize, sets: &[Vec<usize>]) -> Result<Budget> {
    let mut out = Vec::with_capacity(sets.len());
    for s in sets {
        if s.is_empty() {
            return Err(Error::EmptySet);
        }
        if let Some(&bad) = s.iter().find(|&&c| c >= n) {
            return Err(Error::OutOfRange { index: bad, n });
        }
        out.push(FocalSet::from_indices(s));
    }
    Budget::new(n, out)
}

fn probs(v: Vec<f64>, n: usize, what: &str) -> Result<ProbabilityVector> {
    if v.len() != n {
        return Err(Error::FrameMismatch {
            expected: n,
            found: v.len(),
        });
    }
    ProbabilityVector::new(v).map_err(|e| match e {
        Error::InvalidProbability(msg) => Error::InvalidProbability(format!("{what}: {msg}")),
        other => other,
    })
}

fn validate_record(raw: RawRecord, header: &DatasetHeader) -> Result<PredictionRecord> {
    let n = header.frame.len();
    let (id, prediction) = match raw {
        RawRecord::Point { id, probs: p } => (id, Prediction::Point(probs(p, n, "probs")?)),
        RawRecord::Samples { id, samples } => {
            let cloud = samples
                .into_iter()
                .enumerate()
                .map(|(k, s)| probs(s, n, &format!("sample {k}")))
                .collect::<Result<Vec<_>>>()?;
            (id, Prediction::Samples(SampleCloud::new(cloud)?))
        }
        RawRecord::Belief { id, sets, beliefs } => {
            let budget = header.budget.as_ref().ok_or_else(|| {
                Error::InvalidArgument("belief records need a budget in the header".into())
            })?;
            let set_indices = sets.unwrap_or_else(|| (0..budget.len()).collect());
            if set_indices.len() != beliefs.len() {
                return Err(Error::ShapeMismatch(format!(
                    "{} set indices but {} belief values",
                    set_indices.len(),
                    beliefs.len()
                )));
            }
            let mut sub = Vec::with_capacity(set_indices.len());
            for &k in &set_indices {
                sub.push(budget.get(k).ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "set index {k} is not declared in the header budget of {} sets",
                        budget.len()
                    ))
                })?);
            }
            let slack = crate::TOL.normalization;
            if let Some(b) = beliefs.iter().find(|b| !(-slack..=1.0 + slack).contains(*b)) {
                return Err(Error::InvalidArgument(format!(
                    "belief value {b} outside [0, 1]"
                )));
            }
            let belief = BeliefFunction::new(Budget::new(n, sub)?, beliefs)?;
            (
                id,
                Prediction::Belief {
                    belief,
                    set_indices,
                },
            )
        }
        RawRecord::Interval { id, lower, upper } => {
            if lower.len() != n || upper.len() != n {
                return Err(Error::FrameMismatch {
                    expected: n,
                    found: lower.len().max(upper.len()),
                });
            }
            (id, Prediction::Interval(ProbabilityIntervals::new(lower, upper)?))
        }
    };
    if id.is_empty() {
        return Err(Error::InvalidArgument("empty record id".into()));
    }
    Ok(PredictionRecord { id, prediction })
}

fn to_raw(record: &PredictionRecord) -> RawRecord {
    let id = record.id.clone();
    match &record.prediction {
        Prediction::Point(p) => RawRecord::Point {
            id,
            probs: p.as_slice().to_vec(),
        },
        Prediction::Samples(c) => RawRecord::Samples {
            id,
            samples: c.samples().iter().map(|s| s.as_slice().to_vec()).collect(),
        },
        Prediction::Belief {
            belief,
            set_indices,
        } => RawRecord::Belief {
            id,
            sets: Some(set_indices.clone()),
            beliefs: belief.beliefs().to_vec(),
        },
        Prediction::Interval(iv) => RawRecord::Interval {
            id,
            lower: iv.lower().to_vec(),
            upper: iv.upper().to_vec(),
        },
    }
}

/// Serialises a dataset in the format [`parse_predictions`] reads.
pub fn format_predictions(ds: &DatasetFile) -> String {
    let header = RawHeader {
        format: FORMAT_TAG.to_string(),
        version: FORMAT_VERSION,
        labels: ds.header.frame.labels().to_vec(),
        budget: ds
            .header
            .budget
            .as_ref()
            .map(|b| b.sets().iter().map(|s| s.indices()).collect()),
        defaults: if ds.header.defaults == ConfigDefaults::default() {
            None
        } else {
            Some(ds.header.defaults.clone())
        },
    };
    let mut out = serde_json::to_string(&header).expect("header serialises");
    out.push('\n');
    for r in &ds.records {
        out.push_str(&serde_json::to_string(&to_raw(r)).expect("record serialises"));
        out.push('\n');
    }
    out
}

pub fn write_predictions(ds: &DatasetFile, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let io_err = |e: std::io::Error| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    let mut f = File::create(path).map_err(io_err)?;
    f.write_all(format_predictions(ds).as_bytes()).map_err(io_err)
}
