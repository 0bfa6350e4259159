//! File formats: predictions, labels, embeddings, budgets, scores and reports.

mod predictions;
mod tables;

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

pub use predictions::{
    format_predictions, parse_predictions, read_predictions, write_predictions, ConfigDefaults,
    DatasetFile, DatasetHeader, Prediction, PredictionRecord, FORMAT_TAG, FORMAT_VERSION,
};
pub use tables::{
    format_budget, format_embeddings, format_labels, parse_budget, parse_embeddings,
    parse_labels, read_budget, read_embeddings, read_labels, read_outcomes, read_scores,
    EmbeddingFile, Labels,
};

/// Pretty JSON with fields in declaration order and a trailing newline.
pub fn format_report<T: Serialize>(report: &T) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("reports serialise");
    s.push('\n');
    s
}

pub fn write_report<T: Serialize>(report: &T, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_report(report)).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

pub fn read_report<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        line: e.line(),
        message: e.to_string(),
    })
}
