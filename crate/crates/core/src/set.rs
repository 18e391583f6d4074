//! Ground sets and element subsets.
//!
//! Elements are dense indices `0..n`. `ElementSet` is a membership mask over
//! a fixed ground set; it is the subset representation used by objectives,
//! constraints and the greedy loop.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A ground set of `n` elements indexed `0..n`, with optional display labels.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundSet {
    n: usize,
    labels: Option<Vec<String>>,
}

impl GroundSet {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("ground set must have at least one element".into()));
        }
        Ok(GroundSet { n, labels: None })
    }

    pub fn with_labels(n: usize, labels: Vec<String>) -> Result<Self> {
        if labels.len() != n {
            return Err(Error::Config(format!(
                "expected {} labels, got {}",
                n,
                labels.len()
            )));
        }
        let mut g = GroundSet::new(n)?;
        g.labels = Some(labels);
        Ok(g)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false // invariant: n >= 1
    }

    /// Display label for element `v`; falls back to `v{index}`.
    pub fn label(&self, v: usize) -> String {
        match &self.labels {
            Some(l) => l[v].clone(),
            None => format!("v{v}"),
        }
    }
}

/// A subset of a ground set of fixed size, stored as a membership mask.
///
/// Iteration order is ascending element index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ElementSet {
    member: Vec<bool>,
    count: usize,
}

impl ElementSet {
    /// The empty subset of a ground set with `n` elements.
    pub fn empty(n: usize) -> Self {
        ElementSet {
            member: vec![false; n],
            count: 0,
        }
    }

    /// Build a subset from element indices, rejecting out-of-range entries.
    pub fn from_indices(n: usize, indices: &[usize]) -> Result<Self> {
        let mut s = ElementSet::empty(n);
        for &v in indices {
            if v >= n {
                return Err(Error::Input(format!(
                    "element index {v} out of range for ground set of size {n}"
                )));
            }
            s.insert(v);
        }
        Ok(s)
    }

    /// Ground-set size this subset is defined over.
    pub fn universe(&self) -> usize {
        self.member.len()
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn contains(&self, v: usize) -> bool {
        self.member.get(v).copied().unwrap_or(false)
    }

    /// Insert `v`; inserting a member again is a no-op.
    pub fn insert(&mut self, v: usize) {
        assert!(v < self.member.len(), "element {v} out of range");
        if !self.member[v] {
            self.member[v] = true;
            self.count += 1;
        }
    }

    pub fn remove(&mut self, v: usize) {
        if self.member.get(v).copied().unwrap_or(false) {
            self.member[v] = false;
            self.count -= 1;
        }
    }

    /// Members in ascending index order.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.member
            .iter()
            .enumerate()
            .filter_map(|(i, &m)| m.then_some(i))
    }

    /// Members as a sorted vector.
    pub fn to_sorted_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }

    pub fn is_subset_of(&self, other: &ElementSet) -> bool {
        self.iter().all(|v| other.contains(v))
    }
}
