//! Frames of discernment, focal sets and budgets.
//!
//! A [`Frame`] is the ordered class list. Subsets of the frame are encoded as
//! [`FocalSet`] bit masks (bit `i` set means class `i` is a member), which caps
//! frames at 64 classes. A [`Budget`] is the ordered family of focal sets a
//! mass or belief function is defined on.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest frame a bit-mask [`FocalSet`] can address.
pub const MAX_CLASSES: usize = 64;

/// Largest frame whose full powerset we are willing to enumerate.
pub const MAX_POWERSET_CLASSES: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

impl Frame {
    /// Builds a frame whose class indices follow the input order.
    pub fn new<S: AsRef<str>>(labels: &[S]) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::EmptyFrame);
        }
        if labels.len() > MAX_CLASSES {
            return Err(Error::TooManyClasses(labels.len()));
        }
        let mut index = HashMap::with_capacity(labels.len());
        for (i, label) in labels.iter().enumerate() {
            let label = label.as_ref();
            if index.insert(label.to_string(), i).is_some() {
                return Err(Error::DuplicateLabel(label.to_string()));
            }
        }
        Ok(Self {
            labels: labels.iter().map(|l| l.as_ref().to_string()).collect(),
            index,
        })
    }

    /// Frame with labels `"0"`, `"1"`, ... `n-1`.
    pub fn numbered(n: usize) -> Result<Self> {
        let labels: Vec<String> = (0..n).map(|i| i.to_string()).collect();
        Self::new(&labels)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, index: usize) -> Option<&str> {
        self.labels.get(index).map(String::as_str)
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.index
            .get(label)
            .copied()
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    /// Encodes a list of member labels as a focal set.
    pub fn encode_set<S: AsRef<str>>(&self, members: &[S]) -> Result<FocalSet> {
        if members.is_empty() {
            return Err(Error::EmptySet);
        }
        let mut bits = 0u64;
        for m in members {
            bits |= 1u64 << self.index_of(m.as_ref())?;
        }
        Ok(FocalSet(bits))
    }

    /// Labels of the members of `set`, in frame order.
    pub fn decode_set(&self, set: FocalSet) -> Vec<&str> {
        set.members().map(|i| self.labels[i].as_str()).collect()
    }

    pub fn universe(&self) -> FocalSet {
        FocalSet::universe(self.len())
    }
}

/// Subset of a frame as a bit mask over class positions. Serialised as the
/// ascending list of member indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "Vec<usize>", try_from = "Vec<usize>")]
pub struct FocalSet(u64);

impl From<FocalSet> for Vec<usize> {
    fn from(s: FocalSet) -> Self {
        s.indices()
    }
}

impl TryFrom<Vec<usize>> for FocalSet {
    type Error = Error;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        if let Some(&c) = v.iter().find(|&&c| c >= MAX_CLASSES) {
            return Err(Error::OutOfRange { index: c, n: MAX_CLASSES });
        }
        Ok(FocalSet::from_indices(&v))
    }
}

impl FocalSet {
    pub const EMPTY: FocalSet = FocalSet(0);

    pub fn from_bits(bits: u64) -> Self {
        FocalSet(bits)
    }

    pub fn singleton(class: usize) -> Self {
        debug_assert!(class < MAX_CLASSES);
        FocalSet(1u64 << class)
    }

    pub fn universe(n: usize) -> Self {
        if n >= 64 {
            FocalSet(u64::MAX)
        } else {
            FocalSet((1u64 << n) - 1)
        }
    }

    pub fn from_indices(indices: &[usize]) -> Self {
        FocalSet(indices.iter().fold(0u64, |acc, &i| acc | (1u64 << i)))
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn cardinality(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, class: usize) -> bool {
        class < 64 && self.0 & (1u64 << class) != 0
    }

    pub fn is_subset_of(self, other: FocalSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn intersects(self, other: FocalSet) -> bool {
        self.0 & other.0 != 0
    }

    pub fn union(self, other: FocalSet) -> FocalSet {
        FocalSet(self.0 | other.0)
    }

    pub fn intersection(self, other: FocalSet) -> FocalSet {
        FocalSet(self.0 & other.0)
    }

    /// Complement relative to a frame of `n` classes.
    pub fn complement(self, n: usize) -> FocalSet {
        FocalSet(!self.0 & FocalSet::universe(n).0)
    }

    /// Member class indices in ascending order.
    pub fn members(self) -> impl Iterator<Item = usize> {
        let mut rest = self.0;
        std::iter::from_fn(move || {
            if rest == 0 {
                None
            } else {
                let i = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(i)
            }
        })
    }

    pub fn indices(self) -> Vec<usize> {
        self.members().collect()
    }

    /// Key used for every deterministic ordering of sets: cardinality, then bits.
    pub fn order_key(self) -> (usize, u64) {
        (self.cardinality(), self.0)
    }
}

impl fmt::Display for FocalSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.members().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

/// All non-empty subsets of an `n`-class frame with at most `max_cardinality`
/// members, ordered by (cardinality, bits).
pub fn enumerate_subsets(n: usize, max_cardinality: usize) -> Result<Vec<FocalSet>> {
    if n == 0 {
        return Err(Error::EmptyFrame);
    }
    if n > MAX_CLASSES {
        return Err(Error::TooManyClasses(n));
    }
    let max_cardinality = max_cardinality.min(n);
    let count: f64 = (1..=max_cardinality).map(|k| binomial(n, k)).sum();
    if count > ((1u64 << MAX_POWERSET_CLASSES) - 1) as f64 {
        return Err(Error::PowersetTooLarge { n, max_cardinality });
    }
    let mut out = Vec::with_capacity(count as usize);
    for k in 1..=max_cardinality {
        out.extend(combinations(n, k));
    }
    Ok(out)
}

/// All `k`-subsets of `n` classes in ascending bit order.
pub fn combinations(n: usize, k: usize) -> Vec<FocalSet> {
    if k == 0 || k > n {
        return Vec::new();
    }
    // Gosper's hack walks same-popcount masks in increasing numeric order.
    let mut out = Vec::new();
    let limit: u128 = 1u128 << n;
    let mut x: u128 = (1u128 << k) - 1;
    while x < limit {
        out.push(FocalSet(x as u64));
        let c = x & x.wrapping_neg();
        let r = x + c;
        x = (((r ^ x) >> 2) / c) | r;
    }
    out
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Ordered family of distinct, non-empty focal sets over an `n`-class frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Budget {
    n: usize,
    sets: Vec<FocalSet>,
    contains_all_singletons: bool,
}

impl Budget {
    pub fn new(n: usize, sets: Vec<FocalSet>) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyFrame);
        }
        if n > MAX_CLASSES {
            return Err(Error::TooManyClasses(n));
        }
        let universe = FocalSet::universe(n);
        let mut seen = std::collections::HashSet::with_capacity(sets.len());
        for s in &sets {
            if s.is_empty() {
                return Err(Error::EmptySet);
            }
            if !s.is_subset_of(universe) {
                let index = s.members().max().unwrap_or(0);
                return Err(Error::OutOfRange { index, n });
            }
            if !seen.insert(*s) {
                return Err(Error::InvalidArgument(format!("duplicate focal set {s}")));
            }
        }
        let contains_all_singletons = (0..n).all(|c| seen.contains(&FocalSet::singleton(c)));
        Ok(Self {
            n,
            sets,
            contains_all_singletons,
        })
    }

    pub fn singletons(n: usize) -> Result<Self> {
        Self::new(n, (0..n).map(FocalSet::singleton).collect())
    }

    /// The full powerset minus the empty set, in (cardinality, bits) order.
    pub fn powerset(n: usize) -> Result<Self> {
        Self::new(n, enumerate_subsets(n, n)?)
    }

    /// Every set with at most `k` members.
    pub fn up_to_cardinality(n: usize, k: usize) -> Result<Self> {
        Self::new(n, enumerate_subsets(n, k)?)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn sets(&self) -> &[FocalSet] {
        &self.sets
    }

    pub fn get(&self, i: usize) -> Option<FocalSet> {
        self.sets.get(i).copied()
    }

    pub fn contains_all_singletons(&self) -> bool {
        self.contains_all_singletons
    }

    pub fn position(&self, set: FocalSet) -> Option<usize> {
        self.sets.iter().position(|&s| s == set)
    }

    /// True when every non-empty subset of the frame is present.
    pub fn is_full_powerset(&self) -> bool {
        self.n < 64 && self.sets.len() as u64 == (1u64 << self.n) - 1
    }

    /// Returns a budget with `set` appended, or a clone when it is already present.
    pub fn with_set(&self, set: FocalSet) -> Result<Self> {
        if self.position(set).is_some() {
            return Ok(self.clone());
        }
        let mut sets = self.sets.clone();
        sets.push(set);
        Self::new(self.n, sets)
    }

    pub fn universe(&self) -> FocalSet {
        FocalSet::universe(self.n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn make_frame_examples() {
        let f = Frame::new(&["a", "b", "c"]).unwrap();
        assert_eq!(f.len(), 3);
        assert_eq!(f.index_of("c").unwrap(), 2);
        assert_eq!(
            Frame::new(&["a", "a"]),
            Err(Error::DuplicateLabel("a".into()))
        );
        let many: Vec<String> = (0..65).map(|i| format!("c{i}")).collect();
        assert_eq!(Frame::new(&many), Err(Error::TooManyClasses(65)));
        let max: Vec<String> = (0..64).map(|i| format!("c{i}")).collect();
        assert!(Frame::new(&max).is_ok());
    }

    #[test]
    fn encode_set_examples() {
        let f = Frame::new(&["a", "b", "c"]).unwrap();
        assert_eq!(f.encode_set(&["a", "c"]).unwrap().bits(), 0b101);
        assert_eq!(
            f.encode_set(&["d"]),
            Err(Error::UnknownLabel("d".into()))
        );
        let empty: [&str; 0] = [];
        assert_eq!(f.encode_set(&empty), Err(Error::EmptySet));
        assert_eq!(f.decode_set(FocalSet::from_bits(0b101)), vec!["a", "c"]);
    }

    #[test]
    fn enumerate_counts_and_guard() {
        assert_eq!(enumerate_subsets(3, 3).unwrap().len(), 7);
        assert_eq!(enumerate_subsets(3, 2).unwrap().len(), 6);
        assert!(matches!(
            enumerate_subsets(25, 25),
            Err(Error::PowersetTooLarge { .. })
        ));
        // small cardinality caps stay legal on large frames
        assert_eq!(enumerate_subsets(40, 2).unwrap().len(), 40 + 780);
    }

    #[test]
    fn enumerate_is_strictly_ordered() {
        let sets = enumerate_subsets(6, 6).unwrap();
        for w in sets.windows(2) {
            assert!(w[0].order_key() < w[1].order_key());
        }
    }

    #[test]
    fn budget_rejects_duplicates_and_out_of_frame() {
        let s = FocalSet::from_indices(&[0, 1]);
        assert!(Budget::new(3, vec![s, s]).is_err());
        assert!(Budget::new(2, vec![FocalSet::from_indices(&[2])]).is_err());
        let b = Budget::new(3, vec![FocalSet::singleton(0), s]).unwrap();
        assert!(!b.contains_all_singletons());
        assert!(Budget::powerset(3).unwrap().is_full_powerset());
    }

    #[test]
    fn complement_and_display() {
        let s = FocalSet::from_indices(&[0, 2]);
        assert_eq!(s.complement(4), FocalSet::from_indices(&[1, 3]));
        assert_eq!(s.to_string(), "{0,2}");
    }
}
