//! Brute-force ground truth at desk scale.
//!
//! This module trades exponential cost for exactness: it expands the full
//! decision tree of the smoothed greedy algorithms to obtain exact output
//! distributions, exact expectations and gradients of expected quantities,
//! and the exact constrained optimum. Everything here exists to check the
//! sampling-based implementation against independently computed values, so
//! the enumeration caps are deliberately conservative and refusals are
//! explicit errors rather than silent truncation.

use crate::constraints::{CardinalityConstraint, ConstraintSystem};
use crate::error::{Error, Result};
use crate::grad::QuantityKind;
use crate::greedy::{grad_log_prob, GreedyStep, GreedyTrace};
use crate::objectives::SubmodularObjective;
use crate::regularizers::Regularizer;
use crate::set::ElementSet;

/// Refusal thresholds for exhaustive enumeration.
#[derive(Clone, Copy, Debug)]
pub struct EnumerationCaps {
    pub max_n: usize,
    pub max_rank: usize,
}

impl Default for EnumerationCaps {
    fn default() -> Self {
        EnumerationCaps { max_n: 7, max_rank: 4 }
    }
}

/// Ground-set cap for `brute_force_opt`.
const OPT_CAP_N: usize = 20;

/// One reachable output sequence with its total path probability.
#[derive(Clone, Debug)]
pub struct DistEntry {
    pub trace: GreedyTrace,
    pub prob: f64,
}

/// Exhaustive output distribution over sequences.
#[derive(Clone, Debug)]
pub struct OutputDistribution {
    pub entries: Vec<DistEntry>,
}

impl OutputDistribution {
    pub fn total_mass(&self) -> f64 {
        self.entries.iter().map(|e| e.prob).sum()
    }

    /// Probability of a sequence (exact order).
    pub fn sequence_prob(&self, seq: &[usize]) -> f64 {
        self.entries
            .iter()
            .filter(|e| e.trace.sequence == seq)
            .map(|e| e.prob)
            .sum()
    }

    /// Probability of an output set (sequence masses summed).
    pub fn set_prob(&self, sorted_set: &[usize]) -> f64 {
        self.entries
            .iter()
            .filter(|e| e.trace.sorted_set() == sorted_set)
            .map(|e| e.prob)
            .sum()
    }
}

fn check_caps(obj: &dyn SubmodularObjective, c: &dyn ConstraintSystem, caps: EnumerationCaps) -> Result<()> {
    let n = obj.ground().len();
    if n > caps.max_n {
        return Err(Error::CapExceeded(format!(
            "enumeration refused: n = {n} exceeds cap {}",
            caps.max_n
        )));
    }
    if c.rank() > caps.max_rank {
        return Err(Error::CapExceeded(format!(
            "enumeration refused: rank = {} exceeds cap {}",
            c.rank(),
            caps.max_rank
        )));
    }
    Ok(())
}

struct Enumerator<'a> {
    obj: &'a dyn SubmodularObjective,
    reg: Regularizer,
    theta: &'a [f64],
    rank: usize,
    entries: Vec<DistEntry>,
}

impl Enumerator<'_> {
    fn emit(&mut self, steps: &[GreedyStep], prob: f64) {
        let sequence: Vec<usize> = steps.iter().map(|s| s.chosen_element()).collect();
        let log_prob: f64 = steps.iter().map(|s| s.solution.log_p[s.chosen]).sum();
        let delta = steps
            .iter()
            .map(|s| self.reg.delta_bound(s.candidates.len()))
            .fold(0.0, f64::max);
        self.entries.push(DistEntry {
            trace: GreedyTrace {
                sequence,
                steps: steps.to_vec(),
                log_prob,
                delta,
                delta_rank_bound: delta * self.rank as f64,
                seed: 0,
                trial: 0,
                regularizer: self.reg,
                ground_size: self.obj.ground().len(),
            },
            prob,
        });
    }

    /// Expand one candidate set: solve, then branch on every positive-
    /// probability choice.
    fn branch(
        &mut self,
        current: &ElementSet,
        candidates: Vec<usize>,
        steps: &mut Vec<GreedyStep>,
        prob: f64,
        next: &mut dyn FnMut(&mut Self, &ElementSet, &mut Vec<GreedyStep>, f64) -> Result<()>,
    ) -> Result<()> {
        let gains: Vec<f64> = candidates
            .iter()
            .map(|&u| self.obj.marginal_gain(u, current, self.theta))
            .collect::<Result<_>>()?;
        let solution = self.reg.solve_simplex(&gains)?;
        for (idx, &p_choice) in solution.p.clone().iter().enumerate() {
            if p_choice <= 0.0 {
                continue;
            }
            let element = candidates[idx];
            let mut grown = current.clone();
            grown.insert(element);
            steps.push(GreedyStep {
                candidates: candidates.clone(),
                gains: gains.clone(),
                solution: solution.clone(),
                chosen: idx,
            });
            next(self, &grown, steps, prob * p_choice)?;
            steps.pop();
        }
        Ok(())
    }
}

/// Exact output distribution of the smoothed greedy algorithm.
pub fn enumerate_output_distribution(
    obj: &dyn SubmodularObjective,
    c: &dyn ConstraintSystem,
    reg: Regularizer,
    theta: &[f64],
) -> Result<OutputDistribution> {
    enumerate_with_caps(obj, c, reg, theta, EnumerationCaps::default())
}

pub fn enumerate_with_caps(
    obj: &dyn SubmodularObjective,
    c: &dyn ConstraintSystem,
    reg: Regularizer,
    theta: &[f64],
    caps: EnumerationCaps,
) -> Result<OutputDistribution> {
    check_caps(obj, c, caps)?;
    let mut e = Enumerator {
        obj,
        reg,
        theta,
        rank: c.rank(),
        entries: Vec::new(),
    };
    fn recurse(
        e: &mut Enumerator,
        c: &dyn ConstraintSystem,
        current: &ElementSet,
        steps: &mut Vec<GreedyStep>,
        prob: f64,
    ) -> Result<()> {
        let candidates = c.addable(current);
        if candidates.is_empty() {
            e.emit(steps, prob);
            return Ok(());
        }
        e.branch(current, candidates, steps, prob, &mut |e, grown, steps, p| {
            recurse(e, c, grown, steps, p)
        })
    }
    let root = ElementSet::empty(obj.ground().len());
    let mut steps = Vec::new();
    recurse(&mut e, c, &root, &mut steps, 1.0)?;
    Ok(OutputDistribution { entries: e.entries })
}

/// Exact output distribution of the stochastic variant: every candidate-
/// subset draw is enumerated with weight `1 / C(|V \ S|, n_k)`.
pub fn enumerate_stochastic_output_distribution(
    obj: &dyn SubmodularObjective,
    c: &CardinalityConstraint,
    reg: Regularizer,
    theta: &[f64],
    subsample_size: usize,
) -> Result<OutputDistribution> {
    check_caps(obj, c, EnumerationCaps::default())?;
    if subsample_size == 0 {
        return Err(Error::Config("subsample size must be at least 1".into()));
    }
    let n = obj.ground().len();
    let k = c.k().min(n);
    let mut e = Enumerator {
        obj,
        reg,
        theta,
        rank: c.rank(),
        entries: Vec::new(),
    };
    fn recurse(
        e: &mut Enumerator,
        k: usize,
        subsample: usize,
        current: &ElementSet,
        steps: &mut Vec<GreedyStep>,
        prob: f64,
    ) -> Result<()> {
        if steps.len() == k {
            e.emit(steps, prob);
            return Ok(());
        }
        let n = current.universe();
        let pool: Vec<usize> = (0..n).filter(|&v| !current.contains(v)).collect();
        let m = subsample.min(pool.len());
        let subsets = combinations(&pool, m);
        let weight = 1.0 / subsets.len() as f64;
        for candidates in subsets {
            e.branch(current, candidates, steps, prob * weight, &mut |e, grown, steps, p| {
                recurse(e, k, subsample, grown, steps, p)
            })?;
        }
        Ok(())
    }
    let root = ElementSet::empty(n);
    let mut steps = Vec::new();
    recurse(&mut e, k, subsample_size, &root, &mut steps, 1.0)?;
    Ok(OutputDistribution { entries: e.entries })
}

/// All `m`-element subsets of `pool`, each ascending, in lexicographic order.
fn combinations(pool: &[usize], m: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut scratch = Vec::with_capacity(m);
    fn rec(pool: &[usize], m: usize, start: usize, scratch: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if scratch.len() == m {
            out.push(scratch.clone());
            return;
        }
        let needed = m - scratch.len();
        for i in start..=pool.len().saturating_sub(needed) {
            scratch.push(pool[i]);
            rec(pool, m, i + 1, scratch, out);
            scratch.pop();
        }
    }
    rec(pool, m, 0, &mut scratch, &mut out);
    out
}

/// `E[Q(S)] = sum_S p(S) Q(S)` over an enumerated distribution.
pub fn exact_expectation(
    q: &QuantityKind,
    dist: &OutputDistribution,
    obj: &dyn SubmodularObjective,
) -> Result<Vec<f64>> {
    let dim = q.output_dim(obj.ground().len());
    let mut acc = vec![0.0; dim];
    for entry in &dist.entries {
        let qv = q.eval(&entry.trace.sorted_set(), obj)?;
        for (a, v) in acc.iter_mut().zip(&qv) {
            *a += entry.prob * v;
        }
    }
    Ok(acc)
}

/// Exact `grad_theta E[Q(S)]` as the mixture
/// `sum_S p(S, theta) Q(S) grad_theta ln p(S, theta)`, computed over an
/// already-enumerated distribution.
pub fn exact_gradient_from_distribution(
    q: &QuantityKind,
    dist: &OutputDistribution,
    obj: &dyn SubmodularObjective,
    theta: &[f64],
) -> Result<Vec<Vec<f64>>> {
    let m = q.output_dim(obj.ground().len());
    let dim = obj.param_dim();
    let mut acc = vec![vec![0.0; dim]; m];
    for entry in &dist.entries {
        let glp = grad_log_prob(&entry.trace, obj, theta)?;
        let qv = q.eval(&entry.trace.sorted_set(), obj)?;
        for (row, &qi) in acc.iter_mut().zip(&qv) {
            let w = entry.prob * qi;
            if w == 0.0 {
                continue;
            }
            for (r, &g) in row.iter_mut().zip(&glp) {
                *r += w * g;
            }
        }
    }
    Ok(acc)
}

/// Exact `grad_theta E[Q(S)]` for the smoothed greedy output distribution.
pub fn exact_gradient(
    q: &QuantityKind,
    obj: &dyn SubmodularObjective,
    c: &dyn ConstraintSystem,
    reg: Regularizer,
    theta: &[f64],
) -> Result<Vec<Vec<f64>>> {
    let dist = enumerate_output_distribution(obj, c, reg, theta)?;
    exact_gradient_from_distribution(q, &dist, obj, theta)
}

/// Exact constrained maximizer by subset enumeration within the rank.
/// Value ties break to the lexicographically smallest sorted set.
pub fn brute_force_opt(
    obj: &dyn SubmodularObjective,
    c: &dyn ConstraintSystem,
    theta: &[f64],
) -> Result<(Vec<usize>, f64)> {
    let n = obj.ground().len();
    if n > OPT_CAP_N {
        return Err(Error::CapExceeded(format!(
            "brute-force optimum refused: n = {n} exceeds cap {OPT_CAP_N}"
        )));
    }
    let all: Vec<usize> = (0..n).collect();
    let mut best_set: Vec<usize> = Vec::new();
    let mut best_value = obj.eval(&ElementSet::empty(n), theta)?;
    for size in 1..=c.rank().min(n) {
        for subset in combinations(&all, size) {
            let x = ElementSet::from_indices(n, &subset)?;
            if !c.is_feasible(&x) {
                continue;
            }
            let value = obj.eval(&x, theta)?;
            if value > best_value || (value == best_value && subset < best_set) {
                best_value = value;
                best_set = subset;
            }
        }
    }
    Ok((best_set, best_value))
}

/// Central finite differences of a scalar function of `theta`.
pub fn finite_difference<F>(f: F, theta: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let mut grad = vec![0.0; theta.len()];
    for d in 0..theta.len() {
        let mut tp = theta.to_vec();
        let mut tm = theta.to_vec();
        tp[d] += h;
        tm[d] -= h;
        let (fp, fm) = (f(&tp)?, f(&tm)?);
        if !fp.is_finite() || !fm.is_finite() {
            return Err(Error::Numeric("non-finite value in finite-difference probe".into()));
        }
        grad[d] = (fp - fm) / (2.0 * h);
    }
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::greedy::smoothed_greedy;
    use crate::objectives::three_item_demo;
    use crate::rng::RngStream;
    use std::collections::HashMap;

    fn entropy(eps: f64) -> Regularizer {
        Regularizer::Entropy { epsilon: eps }
    }

    #[test]
    fn three_by_two_has_six_sequences() {
        let (obj, theta) = three_item_demo();
        let c = CardinalityConstraint::new(3, 2).unwrap();
        let dist = enumerate_output_distribution(&obj, &c, entropy(0.2), &theta).unwrap();
        assert_eq!(dist.entries.len(), 6);
        assert!((dist.total_mass() - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn low_temperature_mass_concentrates_on_greedy_path() {
        let (obj, theta) = three_item_demo();
        let c = CardinalityConstraint::new(3, 2).unwrap();
        let dist = enumerate_output_distribution(&obj, &c, entropy(1e-6), &theta).unwrap();
        assert!(dist.sequence_prob(&[0, 1]) >= 0.999);
    }

    #[test]
    fn expectation_of_constant_and_indicator() {
        let (obj, theta) = three_item_demo();
        let c = CardinalityConstraint::new(3, 2).unwrap();
        let dist = enumerate_output_distribution(&obj, &c, entropy(0.2), &theta).unwrap();
        let ec = exact_expectation(&QuantityKind::Constant(3.5), &dist, &obj).unwrap();
        assert!((ec[0] - 3.5).abs() <= 1e-12);
        // fixed output size: inclusion probabilities sum to K
        let ei = exact_expectation(&QuantityKind::IndicatorVector, &dist, &obj).unwrap();
        let total: f64 = ei.iter().sum();
        assert!((total - 2.0).abs() <= 1e-10);
    }

    #[test]
    fn low_temperature_expected_value_near_best_pair() {
        let (obj, theta) = three_item_demo();
        let c = CardinalityConstraint::new(3, 2).unwrap();
        let dist = enumerate_output_distribution(&obj, &c, entropy(1e-6), &theta).unwrap();
        let q = QuantityKind::ObjectiveValue { theta_prime: theta.clone() };
        let ef = exact_expectation(&q, &dist, &obj).unwrap()[0];
        assert!((ef - 1.24).abs() < 1e-3);
    }

    #[test]
    fn constant_quantity_has_zero_gradient() {
        let (obj, theta) = three_item_demo();
        let c = CardinalityConstraint::new(3, 2).unwrap();
        for reg in [entropy(0.2), Regularizer::Quadratic { epsilon: 0.4 }] {
            let grad = exact_gradient(&QuantityKind::Constant(1.0), &obj, &c, reg, &theta).unwrap();
            for &g in &grad[0] {
                assert!(g.abs() <= 1e-10, "score identity violated: {g}");
            }
        }
    }

    #[test]
    fn exact_gradient_matches_fd_of_exact_expectation() {
        let (obj, theta) = three_item_demo();
        let c = CardinalityConstraint::new(3, 2).unwrap();
        let reg = entropy(0.2);
        let q = QuantityKind::ObjectiveValue { theta_prime: theta.clone() };
        let grad = exact_gradient(&q, &obj, &c, reg, &theta).unwrap();
        let fd = finite_difference(
            |t| {
                let dist = enumerate_output_distribution(&obj, &c, reg, t)?;
                Ok(exact_expectation(&q, &dist, &obj)?[0])
            },
            &theta,
            1e-5,
        )
        .unwrap();
        for (d, (&g, &f)) in grad[0].iter().zip(&fd).enumerate() {
            let scale = g.abs().max(f.abs()).max(1e-4);
            assert!((g - f).abs() / scale <= 1e-5, "component {d}: {g} vs {f}");
        }
    }

    #[test]
    fn brute_force_opt_demo_and_full_set() {
        let (obj, theta) = three_item_demo();
        let c = CardinalityConstraint::new(3, 2).unwrap();
        let (set, value) = brute_force_opt(&obj, &c, &theta).unwrap();
        assert_eq!(set, vec![0, 1]);
        assert!((value - 1.24).abs() < 1e-12);
        // K >= n: the whole ground set wins by monotonicity
        let c = CardinalityConstraint::new(3, 5).unwrap();
        let (set, _) = brute_force_opt(&obj, &c, &theta).unwrap();
        assert_eq!(set, vec![0, 1, 2]);
    }

    #[test]
    fn deterministic_greedy_respects_classical_bound() {
        use crate::greedy::deterministic_greedy;
        use crate::objectives::BipartiteInfluence;
        use crate::set::GroundSet;
        use rand::Rng;
        let mut rng = crate::rng::derive_rng(808, &[0]);
        for _ in 0..50 {
            let n = 6;
            let t = rng.gen_range(1..=3);
            let obj = BipartiteInfluence::new(GroundSet::new(n).unwrap(), t).unwrap();
            let theta: Vec<f64> = (0..obj.param_dim()).map(|_| rng.gen_range(0.0..1.0)).collect();
            let k = rng.gen_range(1..=3);
            let c = CardinalityConstraint::new(n, k).unwrap();
            let seq = deterministic_greedy(&obj, &c, &theta).unwrap();
            let x = ElementSet::from_indices(n, &seq).unwrap();
            let value = obj.eval(&x, &theta).unwrap();
            let (_, opt) = brute_force_opt(&obj, &c, &theta).unwrap();
            assert!(value >= (1.0 - (-1.0f64).exp()) * opt - 1e-9);
        }
    }

    #[test]
    fn caps_are_enforced() {
        use crate::objectives::BipartiteInfluence;
        use crate::set::GroundSet;
        let obj = BipartiteInfluence::new(GroundSet::new(8).unwrap(), 1).unwrap();
        let theta = vec![0.5; 8];
        let c = CardinalityConstraint::new(8, 2).unwrap();
        let err = enumerate_output_distribution(&obj, &c, entropy(0.2), &theta).unwrap_err();
        assert!(matches!(err, Error::CapExceeded(_)));
        let obj = BipartiteInfluence::new(GroundSet::new(21).unwrap(), 1).unwrap();
        let c = CardinalityConstraint::new(21, 2).unwrap();
        let err = brute_force_opt(&obj, &c, &vec![0.5; 21]).unwrap_err();
        assert!(matches!(err, Error::CapExceeded(_)));
    }

    #[test]
    fn finite_difference_on_linear_and_quadratic_probes() {
        let a = [1.5, -2.0, 0.25];
        let fd = finite_difference(
            |t| Ok(t.iter().zip(&a).map(|(x, ai)| x * ai).sum()),
            &[0.3, 0.4, 0.5],
            1e-5,
        )
        .unwrap();
        for (f, ai) in fd.iter().zip(&a) {
            assert!((f - ai).abs() <= 1e-10);
        }
        let fd = finite_difference(
            |t| Ok(t.iter().map(|x| x * x).sum()),
            &[0.0, 0.0],
            1e-5,
        )
        .unwrap();
        assert!(fd.iter().all(|&g| g.abs() <= 1e-10));
        assert!(finite_difference(|_| Ok(f64::INFINITY), &[0.0], 1e-5).is_err());
    }

    #[test]
    fn sampler_frequencies_match_enumerated_probabilities() {
        use crate::objectives::BipartiteInfluence;
        use crate::set::GroundSet;
        let obj = BipartiteInfluence::new(GroundSet::new(4).unwrap(), 2).unwrap();
        let theta = vec![0.6, 0.1, 0.3, 0.5, 0.2, 0.7, 0.4, 0.4];
        let c = CardinalityConstraint::new(4, 2).unwrap();
        let reg = entropy(0.3);
        let dist = enumerate_output_distribution(&obj, &c, reg, &theta).unwrap();
        let n_runs = 100_000usize;
        let mut counts: HashMap<Vec<usize>, usize> = HashMap::new();
        for trial in 0..n_runs {
            let t = smoothed_greedy(&obj, &c, reg, &theta, RngStream::new(606, trial as u64))
                .unwrap();
            *counts.entry(t.sequence).or_default() += 1;
        }
        for entry in &dist.entries {
            let p = entry.prob;
            let observed = *counts.get(&entry.trace.sequence).unwrap_or(&0) as f64 / n_runs as f64;
            let se = (p * (1.0 - p) / n_runs as f64).sqrt();
            assert!(
                (observed - p).abs() <= 4.0 * se + 1e-9,
                "sequence {:?}: observed {observed}, exact {p}, se {se}",
                entry.trace.sequence
            );
        }
    }
}
