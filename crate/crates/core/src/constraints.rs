//! Feasibility systems consumed by the greedy core.
//!
//! The [`ConstraintSystem`] trait is the generic interface for
//! kappa-extensible independence systems: the empty set is feasible, the
//! family is downward closed, and `kappa` is declared metadata (matroids
//! report 1). The greedy loop only needs `addable` and `is_maximal`;
//! `kappa` parameterizes the reported approximation bound.

use crate::error::{Error, Result};
use crate::set::ElementSet;

pub trait ConstraintSystem: Sync {
    /// Ground-set size.
    fn n(&self) -> usize;

    fn is_feasible(&self, x: &ElementSet) -> bool;

    /// Elements `v` not in `X` with `X + v` feasible, ascending order.
    fn addable(&self, x: &ElementSet) -> Vec<usize> {
        (0..self.n())
            .filter(|&v| {
                if x.contains(v) {
                    return false;
                }
                let mut xv = x.clone();
                xv.insert(v);
                self.is_feasible(&xv)
            })
            .collect()
    }

    fn is_maximal(&self, x: &ElementSet) -> bool {
        self.addable(x).is_empty()
    }

    /// Maximum feasible set size.
    fn rank(&self) -> usize;

    /// Declared extensibility parameter (1 for matroids). Not verified.
    fn kappa(&self) -> usize;
}

/// `addable` with the feasibility precondition checked.
pub fn addable_checked(c: &dyn ConstraintSystem, x: &ElementSet) -> Result<Vec<usize>> {
    if !c.is_feasible(x) {
        return Err(Error::Input("addable queried on an infeasible set".into()));
    }
    Ok(c.addable(x))
}

/// `is_maximal` with the feasibility precondition checked.
pub fn is_maximal_checked(c: &dyn ConstraintSystem, x: &ElementSet) -> Result<bool> {
    if !c.is_feasible(x) {
        return Err(Error::Input("maximality queried on an infeasible set".into()));
    }
    Ok(c.is_maximal(x))
}

/// `X` feasible iff `|X| <= K`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CardinalityConstraint {
    n: usize,
    k: usize,
}

impl CardinalityConstraint {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Config("cardinality bound must be at least 1".into()));
        }
        if n == 0 {
            return Err(Error::Config("ground set must be nonempty".into()));
        }
        Ok(CardinalityConstraint { n, k })
    }

    pub fn k(&self) -> usize {
        self.k
    }
}

impl ConstraintSystem for CardinalityConstraint {
    fn n(&self) -> usize {
        self.n
    }

    fn is_feasible(&self, x: &ElementSet) -> bool {
        x.len() <= self.k
    }

    fn addable(&self, x: &ElementSet) -> Vec<usize> {
        if x.len() >= self.k {
            return Vec::new();
        }
        (0..self.n).filter(|&v| !x.contains(v)).collect()
    }

    fn rank(&self) -> usize {
        self.k.min(self.n)
    }

    fn kappa(&self) -> usize {
        1
    }
}

/// Elements are partitioned into blocks; at most `cap_b` may be chosen from
/// block `b`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionMatroid {
    block_of: Vec<usize>,
    caps: Vec<usize>,
    block_sizes: Vec<usize>,
}

impl PartitionMatroid {
    /// `block_of[v]` assigns element `v` to a block; `caps[b]` is that
    /// block's capacity.
    pub fn new(block_of: Vec<usize>, caps: Vec<usize>) -> Result<Self> {
        if block_of.is_empty() {
            return Err(Error::Config("ground set must be nonempty".into()));
        }
        if caps.is_empty() {
            return Err(Error::Config("partition matroid needs at least one block".into()));
        }
        let mut block_sizes = vec![0usize; caps.len()];
        for &b in &block_of {
            if b >= caps.len() {
                return Err(Error::Config(format!(
                    "block index {b} out of range for {} blocks",
                    caps.len()
                )));
            }
            block_sizes[b] += 1;
        }
        Ok(PartitionMatroid {
            block_of,
            caps,
            block_sizes,
        })
    }

    pub fn blocks(&self) -> usize {
        self.caps.len()
    }

    pub fn block_of(&self, v: usize) -> usize {
        self.block_of[v]
    }

    pub fn caps(&self) -> &[usize] {
        &self.caps
    }

    fn block_counts(&self, x: &ElementSet) -> Vec<usize> {
        let mut counts = vec![0usize; self.caps.len()];
        for v in x.iter() {
            counts[self.block_of[v]] += 1;
        }
        counts
    }
}

impl ConstraintSystem for PartitionMatroid {
    fn n(&self) -> usize {
        self.block_of.len()
    }

    fn is_feasible(&self, x: &ElementSet) -> bool {
        self.block_counts(x)
            .iter()
            .zip(&self.caps)
            .all(|(c, cap)| c <= cap)
    }

    fn addable(&self, x: &ElementSet) -> Vec<usize> {
        let counts = self.block_counts(x);
        (0..self.n())
            .filter(|&v| !x.contains(v) && counts[self.block_of[v]] < self.caps[self.block_of[v]])
            .collect()
    }

    fn rank(&self) -> usize {
        self.caps
            .iter()
            .zip(&self.block_sizes)
            .map(|(&cap, &size)| cap.min(size))
            .sum()
    }

    fn kappa(&self) -> usize {
        1
    }
}
