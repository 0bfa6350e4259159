//! Small comma-separated formats: labels, embeddings, budgets, scores and
//! calibration outcomes.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::frame::{Budget, FocalSet, Frame};

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn csv_rows(text: &str, origin: &str) -> Result<Vec<(usize, Vec<String>)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::Parse {
            path: origin.to_string(),
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        rows.push((line, rec.iter().map(str::to_string).collect()));
    }
    Ok(rows)
}

fn parse_f64(field: &str, origin: &str, line: usize) -> Result<f64> {
    field.parse::<f64>().map_err(|e| Error::Parse {
        path: origin.to_string(),
        line,
        message: format!("`{field}`: {e}"),
    })
}

fn expect_columns(row: &[String], n: usize, origin: &str, line: usize) -> Result<()> {
    if row.len() != n {
        return Err(Error::Parse {
            path: origin.to_string(),
            line,
            message: format!("expected {n} columns, found {}", row.len()),
        });
    }
    Ok(())
}

/// Ground-truth labels keyed by instance id, in file order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Labels {
    pub ids: Vec<String>,
    pub classes: Vec<usize>,
}

impl Labels {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Class of every id in `ids`, in that order.
    pub fn align<'a>(&self, ids: impl IntoIterator<Item = &'a str>) -> Result<Vec<usize>> {
        let map: std::collections::HashMap<&str, usize> = self
            .ids
            .iter()
            .map(String::as_str)
            .zip(self.classes.iter().copied())
            .collect();
        ids.into_iter()
            .map(|id| {
                map.get(id).copied().ok_or_else(|| {
                    Error::InvalidArgument(format!("no label for instance `{id}`"))
                })
            })
            .collect()
    }
}

/// Two columns, `id,label`. A leading `id,label` header row is skipped.
pub fn read_labels(path: impl AsRef<Path>, frame: &Frame) -> Result<Labels> {
    let path = path.as_ref();
    parse_labels(&read_text(path)?, frame, &path.display().to_string())
}

pub fn parse_labels(text: &str, frame: &Frame, origin: &str) -> Result<Labels> {
    let mut ids = Vec::new();
    let mut classes = Vec::new();
    let mut seen = HashSet::new();
    for (k, (line, row)) in csv_rows(text, origin)?.into_iter().enumerate() {
        expect_columns(&row, 2, origin, line)?;
        if k == 0 && row[0] == "id" && row[1] == "label" {
            continue;
        }
        let class = frame.index_of(&row[1]).map_err(|_| Error::UnknownLabelAt {
            path: origin.to_string(),
            line,
            label: row[1].clone(),
        })?;
        if !seen.insert(row[0].clone()) {
            return Err(Error::DuplicateId {
                path: origin.to_string(),
                line,
                id: row[0].clone(),
            });
        }
        ids.push(row[0].clone());
        classes.push(class);
    }
    Ok(Labels { ids, classes })
}

pub fn format_labels(labels: &Labels, frame: &Frame) -> String {
    let mut out = String::from("id,label\n");
    for (id, c) in labels.ids.iter().zip(&labels.classes) {
        out.push_str(&format!("{id},{}\n", frame.labels()[*c]));
    }
    out
}

/// 3-D embedding points with class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingFile {
    pub frame: Frame,
    pub ids: Vec<String>,
    pub classes: Vec<usize>,
    pub points: Vec<[f64; 3]>,
}

/// Rows of `id,class,x,y,z`. Without an explicit frame, classes are indexed in
/// order of first appearance.
pub fn read_embeddings(path: impl AsRef<Path>, frame: Option<&Frame>) -> Result<EmbeddingFile> {
    let path = path.as_ref();
    parse_embeddings(&read_text(path)?, frame, &path.display().to_string())
}

pub fn parse_embeddings(text: &str, frame: Option<&Frame>, origin: &str) -> Result<EmbeddingFile> {
    let rows = csv_rows(text, origin)?;
    let mut parsed = Vec::with_capacity(rows.len());
    for (k, (line, row)) in rows.into_iter().enumerate() {
        expect_columns(&row, 5, origin, line)?;
        if k == 0 && row[0] == "id" && row[1] == "class" {
            continue;
        }
        let point = [
            parse_f64(&row[2], origin, line)?,
            parse_f64(&row[3], origin, line)?,
            parse_f64(&row[4], origin, line)?,
        ];
        if point.iter().any(|x| !x.is_finite()) {
            return Err(Error::Schema {
                path: origin.to_string(),
                line,
                message: "non-finite coordinate".into(),
            });
        }
        parsed.push((line, row[0].clone(), row[1].clone(), point));
    }
    let frame = match frame {
        Some(f) => f.clone(),
        None => {
            let mut labels: Vec<String> = Vec::new();
            for (_, _, c, _) in &parsed {
                if !labels.contains(c) {
                    labels.push(c.clone());
                }
            }
            Frame::new(&labels).map_err(|e| Error::Schema {
                path: origin.to_string(),
                line: 1,
                message: e.to_string(),
            })?
        }
    };
    let mut seen = HashSet::new();
    let mut out = EmbeddingFile {
        frame,
        ids: Vec::new(),
        classes: Vec::new(),
        points: Vec::new(),
    };
    for (line, id, class, point) in parsed {
        let c = out.frame.index_of(&class).map_err(|_| Error::UnknownLabelAt {
            path: origin.to_string(),
            line,
            label: class.clone(),
        })?;
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateId {
                path: origin.to_string(),
                line,
                id,
            });
        }
        out.ids.push(id);
        out.classes.push(c);
        out.points.push(point);
    }
    Ok(out)
}

pub fn format_embeddings(e: &EmbeddingFile) -> String {
    let mut out = String::from("id,class,x,y,z\n");
    for ((id, c), p) in e.ids.iter().zip(&e.classes).zip(&e.points) {
        out.push_str(&format!(
            "{id},{},{},{},{}\n",
            e.frame.labels()[*c],
            p[0],
            p[1],
            p[2]
        ));
    }
    out
}

/// One focal set per line as comma-separated class indices.
pub fn read_budget(path: impl AsRef<Path>, n: usize) -> Result<Budget> {
    let path = path.as_ref();
    parse_budget(&read_text(path)?, n, &path.display().to_string())
}

pub fn parse_budget(text: &str, n: usize, origin: &str) -> Result<Budget> {
    let mut sets = Vec::new();
    let mut seen = HashSet::new();
    for (line, row) in csv_rows(text, origin)? {
        let mut indices = Vec::with_capacity(row.len());
        for f in &row {
            let c: usize = f.parse().map_err(|e| Error::Parse {
                path: origin.to_string(),
                line,
                message: format!("`{f}`: {e}"),
            })?;
            if c >= n {
                return Err(Error::Schema {
                    path: origin.to_string(),
                    line,
                    message: format!("class index {c} outside a frame of {n} classes"),
                });
            }
            indices.push(c);
        }
        let set = FocalSet::from_indices(&indices);
        if set.cardinality() != indices.len() || !seen.insert(set) {
            return Err(Error::Schema {
                path: origin.to_string(),
                line,
                message: format!("duplicate class or set {set}"),
            });
        }
        sets.push(set);
    }
    Budget::new(n, sets).map_err(|e| Error::Schema {
        path: origin.to_string(),
        line: 0,
        message: e.to_string(),
    })
}

pub fn format_budget(budget: &Budget) -> String {
    let mut out = String::new();
    for s in budget.sets() {
        let idx: Vec<String> = s.members().map(|c| c.to_string()).collect();
        out.push_str(&idx.join(","));
        out.push('\n');
    }
    out
}

/// One real score per line.
pub fn read_scores(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let path = path.as_ref();
    let origin = path.display().to_string();
    let mut out = Vec::new();
    for (line, row) in csv_rows(&read_text(path)?, &origin)? {
        expect_columns(&row, 1, &origin, line)?;
        out.push(parse_f64(&row[0], &origin, line)?);
    }
    Ok(out)
}

/// Rows of `confidence,predicted,true` with integer class indices.
pub fn read_outcomes(path: impl AsRef<Path>) -> Result<Vec<crate::calib::ScoredOutcome>> {
    let path = path.as_ref();
    let origin = path.display().to_string();
    let mut out = Vec::new();
    for (k, (line, row)) in csv_rows(&read_text(path)?, &origin)?.into_iter().enumerate() {
        expect_columns(&row, 3, &origin, line)?;
        if k == 0 && row[0] == "confidence" {
            continue;
        }
        let int = |f: &str| -> Result<usize> {
            f.parse().map_err(|e| Error::Parse {
                path: origin.clone(),
                line,
                message: format!("`{f}`: {e}"),
            })
        };
        out.push(crate::calib::ScoredOutcome {
            confidence: parse_f64(&row[0], &origin, line)?,
            predicted: int(&row[1])?,
            truth: int(&row[2])?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame() -> Frame {
        Frame::new(&["a", "b", "c"]).unwrap()
    }

    #[test]
    fn labels_examples() {
        let l = parse_labels("id,label\nx,a\ny,c\nz,b\n", &frame(), "mem").unwrap();
        assert_eq!(l.classes, vec![0, 2, 1]);
        assert!(matches!(
            parse_labels("x,a\ny,d\n", &frame(), "mem"),
            Err(Error::UnknownLabelAt { line: 2, .. })
        ));
        assert!(matches!(
            parse_labels("x,a\nx,b\n", &frame(), "mem"),
            Err(Error::DuplicateId { line: 2, .. })
        ));
        assert_eq!(l.align(["z", "x"]).unwrap(), vec![1, 0]);
        assert!(l.align(["w"]).is_err());
        let again = parse_labels(&format_labels(&l, &frame()), &frame(), "mem").unwrap();
        assert_eq!(again, l);
    }

    #[test]
    fn embeddings_round_trip() {
        let text = "id,class,x,y,z\np1,b,0.5,1,2\np2,a,-1,0,3.25\n";
        let e = parse_embeddings(text, None, "mem").unwrap();
        assert_eq!(e.frame.labels(), &["b".to_string(), "a".to_string()]);
        assert_eq!(e.classes, vec![0, 1]);
        let again = parse_embeddings(&format_embeddings(&e), Some(&e.frame), "mem").unwrap();
        assert_eq!(again, e);
        assert!(matches!(
            parse_embeddings("p1,a,1,2\n", None, "mem"),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn budget_round_trip() {
        let b = parse_budget("# budget\n0\n1\n2\n0,2\n", 3, "mem").unwrap();
        assert_eq!(b.len(), 4);
        assert_eq!(parse_budget(&format_budget(&b), 3, "mem").unwrap(), b);
        assert!(matches!(parse_budget("0\n0\n", 3, "mem"), Err(Error::Schema { line: 2, .. })));
        assert!(matches!(parse_budget("0,5\n", 3, "mem"), Err(Error::Schema { line: 1, .. })));
    }
}
