//! Smoothed greedy maximization and its stochastic (subsampled) variant.
//!
//! At step `k` the algorithm collects the addable candidates `U_k`, forms
//! their marginal-gain vector `g_k`, solves the regularized argmax over the
//! simplex to get a probability vector `p_k`, and samples the next element
//! from it. The run stops exactly when the current set is maximal. A
//! [`GreedyTrace`] records everything needed to recompute
//! `ln p(S, theta) = sum_k ln p_k(s_k, theta)` and its gradient: per-step
//! candidate sets, gains, simplex solutions and chosen indices.
//!
//! The stochastic variant draws `U_k` as a uniform random subset of the
//! remaining elements of size `min(ceil((n/K) ln(1/eps)), |V \ S|)` and is
//! restricted to cardinality constraints; it always runs exactly `K` steps.
//!
//! [`grad_log_prob`] assembles `grad_theta ln p(S, theta)` by the chain
//! rule: per step, the chosen row of the simplex Jacobian `d p / d g`
//! composed with `d g / d theta`, whose row for candidate `u` is
//! `grad f(S + u) - grad f(S)`. For stochastic traces the gradient is
//! conditional on the recorded candidate sets (subset sampling does not
//! depend on theta).

use rand::Rng;
use serde::Serialize;

use crate::constraints::{CardinalityConstraint, ConstraintSystem};
use crate::error::{Error, Result};
use crate::objectives::SubmodularObjective;
use crate::regularizers::{Regularizer, SimplexSolution};
use crate::rng::RngStream;
use crate::set::ElementSet;

/// One decision of a smoothed greedy run.
#[derive(Clone, Debug, Serialize)]
pub struct GreedyStep {
    /// Addable candidates at this step, ascending element index.
    pub candidates: Vec<usize>,
    /// Marginal gains aligned with `candidates`.
    pub gains: Vec<f64>,
    /// Regularized argmax over the candidates.
    pub solution: SimplexSolution,
    /// Index into `candidates` of the sampled element.
    pub chosen: usize,
}

impl GreedyStep {
    pub fn chosen_element(&self) -> usize {
        self.candidates[self.chosen]
    }
}

/// Full record of one sampled run.
#[derive(Clone, Debug, Serialize)]
pub struct GreedyTrace {
    /// Chosen elements in order.
    pub sequence: Vec<usize>,
    pub steps: Vec<GreedyStep>,
    /// `sum_k ln p_k(s_k)`.
    pub log_prob: f64,
    /// Run-level smoothing price: `max_k delta_bound(reg, n_k)`.
    pub delta: f64,
    /// `delta * rank`, the subtractive term in the approximation bounds.
    pub delta_rank_bound: f64,
    /// Seed bookkeeping for reproducibility.
    pub seed: u64,
    pub trial: u64,
    pub regularizer: Regularizer,
    /// Ground-set size the run was performed on.
    pub ground_size: usize,
}

impl GreedyTrace {
    /// The output as a sorted element set.
    pub fn sorted_set(&self) -> Vec<usize> {
        let mut s = self.sequence.clone();
        s.sort_unstable();
        s
    }

    pub fn to_element_set(&self) -> ElementSet {
        ElementSet::from_indices(self.ground_size, &self.sequence).expect("trace elements in range")
    }
}

/// Inverse-CDF sample from `p` with a single uniform draw in `(0, 1]`;
/// ties in the cumulative sums resolve to the first index.
fn sample_index(p: &[f64], rng: &mut impl Rng) -> usize {
    let u = 1.0 - rng.gen::<f64>(); // (0, 1]
    let mut cum = 0.0;
    let mut last_positive = 0;
    for (i, &pi) in p.iter().enumerate() {
        if pi <= 0.0 {
            continue;
        }
        cum += pi;
        last_positive = i;
        if cum >= u {
            return i;
        }
    }
    last_positive // guard against cumulative rounding below 1
}

fn record_step(
    candidates: Vec<usize>,
    reg: Regularizer,
    current: &mut ElementSet,
    cache: &mut dyn crate::objectives::GainCache,
    rng: &mut impl Rng,
) -> Result<GreedyStep> {
    debug_assert!(!candidates.is_empty());
    let gains: Vec<f64> = candidates.iter().map(|&u| cache.gain(u)).collect();
    let solution = reg.solve_simplex(&gains)?;
    let chosen = sample_index(&solution.p, rng);
    let element = candidates[chosen];
    cache.insert(element);
    current.insert(element);
    Ok(GreedyStep {
        candidates,
        gains,
        solution,
        chosen,
    })
}

fn finish_trace(
    steps: Vec<GreedyStep>,
    reg: Regularizer,
    rank: usize,
    stream: RngStream,
    ground_size: usize,
) -> GreedyTrace {
    let sequence: Vec<usize> = steps.iter().map(|s| s.chosen_element()).collect();
    let log_prob: f64 = steps.iter().map(|s| s.solution.log_p[s.chosen]).sum();
    let delta = steps
        .iter()
        .map(|s| reg.delta_bound(s.candidates.len()))
        .fold(0.0, f64::max);
    GreedyTrace {
        sequence,
        steps,
        log_prob,
        delta,
        delta_rank_bound: delta * rank as f64,
        seed: stream.master,
        trial: stream.trial,
        regularizer: reg,
        ground_size,
    }
}

/// One run of the smoothed greedy algorithm.
pub fn smoothed_greedy(
    obj: &dyn SubmodularObjective,
    constraint: &dyn ConstraintSystem,
    reg: Regularizer,
    theta: &[f64],
    stream: RngStream,
) -> Result<GreedyTrace> {
    let n = obj.ground().len();
    if constraint.n() != n {
        return Err(Error::Config(format!(
            "constraint is over {} elements, objective over {n}",
            constraint.n()
        )));
    }
    if theta.len() != obj.param_dim() {
        return Err(Error::Config(format!(
            "parameter vector has dimension {}, objective expects {}",
            theta.len(),
            obj.param_dim()
        )));
    }
    let mut rng = stream.rng();
    let mut current = ElementSet::empty(n);
    let mut cache = obj.gain_cache(theta)?;
    let mut steps = Vec::new();
    loop {
        let candidates = constraint.addable(&current);
        if candidates.is_empty() {
            break;
        }
        steps.push(record_step(candidates, reg, &mut current, cache.as_mut(), &mut rng)?);
    }
    Ok(finish_trace(steps, reg, constraint.rank(), stream, n))
}

/// Candidate-subset size for the stochastic variant:
/// `ceil((n / K) * ln(1 / eps))`, with a tiny guard against floating-point
/// noise at integer boundaries.
pub fn subsample_size(n: usize, k: usize, subsample_eps: f64) -> usize {
    let raw = (n as f64 / k as f64) * (1.0 / subsample_eps).ln();
    ((raw - 1e-9).ceil().max(1.0)) as usize
}

/// One run of the stochastic smoothed greedy algorithm (cardinality only).
///
/// Runs exactly `K` steps; the per-step candidate set is a uniform random
/// subset of the remaining elements, drawn by a partial Fisher-Yates
/// shuffle from the same substream, interleaved before the element draw.
pub fn stochastic_smoothed_greedy(
    obj: &dyn SubmodularObjective,
    constraint: &CardinalityConstraint,
    reg: Regularizer,
    theta: &[f64],
    subsample_eps: f64,
    stream: RngStream,
) -> Result<GreedyTrace> {
    let n = obj.ground().len();
    if constraint.n() != n {
        return Err(Error::Config(format!(
            "constraint is over {} elements, objective over {n}",
            constraint.n()
        )));
    }
    if !(0.0..1.0).contains(&subsample_eps) || subsample_eps <= 0.0 {
        return Err(Error::Config(format!(
            "subsample parameter must lie in (0, 1), got {subsample_eps}"
        )));
    }
    let k = constraint.k();
    if k > n {
        return Err(Error::Config(format!(
            "stochastic variant needs n >= K, got n = {n}, K = {k}"
        )));
    }
    if theta.len() != obj.param_dim() {
        return Err(Error::Config(format!(
            "parameter vector has dimension {}, objective expects {}",
            theta.len(),
            obj.param_dim()
        )));
    }
    let target = subsample_size(n, k, subsample_eps);
    let mut rng = stream.rng();
    let mut current = ElementSet::empty(n);
    let mut cache = obj.gain_cache(theta)?;
    let mut steps = Vec::new();
    for _ in 0..k {
        let mut pool: Vec<usize> = (0..n).filter(|&v| !current.contains(v)).collect();
        let m = target.min(pool.len());
        // partial Fisher-Yates: the first m slots become the sample
        for i in 0..m {
            let j = rng.gen_range(i..pool.len());
            pool.swap(i, j);
        }
        let mut candidates: Vec<usize> = pool[..m].to_vec();
        candidates.sort_unstable();
        steps.push(record_step(candidates, reg, &mut current, cache.as_mut(), &mut rng)?);
    }
    Ok(finish_trace(steps, reg, constraint.rank(), stream, n))
}

/// Plain greedy (argmax per step, first index on ties). The zero-temperature
/// surrogate used when making deterministic decisions.
pub fn deterministic_greedy(
    obj: &dyn SubmodularObjective,
    constraint: &dyn ConstraintSystem,
    theta: &[f64],
) -> Result<Vec<usize>> {
    let n = obj.ground().len();
    let mut current = ElementSet::empty(n);
    let mut cache = obj.gain_cache(theta)?;
    let mut sequence = Vec::new();
    loop {
        let candidates = constraint.addable(&current);
        if candidates.is_empty() {
            break;
        }
        let mut best = candidates[0];
        let mut best_gain = f64::NEG_INFINITY;
        for &u in &candidates {
            let g = cache.gain(u);
            if g > best_gain {
                best_gain = g;
                best = u;
            }
        }
        cache.insert(best);
        current.insert(best);
        sequence.push(best);
    }
    Ok(sequence)
}

/// `grad_theta ln p(S, theta)` for a recorded trace.
///
/// The trace must have been produced at this `theta`. For stochastic traces
/// the result is conditional on the recorded candidate sets.
pub fn grad_log_prob(
    trace: &GreedyTrace,
    obj: &dyn SubmodularObjective,
    theta: &[f64],
) -> Result<Vec<f64>> {
    let dim = obj.param_dim();
    let mut total = vec![0.0; dim];
    let mut prefix = ElementSet::empty(obj.ground().len());
    for step in &trace.steps {
        let p_chosen = step.solution.p[step.chosen];
        if p_chosen < 1e-300 {
            return Err(Error::Numeric(
                "chosen-step probability too small to differentiate".into(),
            ));
        }
        let jac = trace.regularizer.jacobian(&step.solution);
        let row = &jac[step.chosen];
        let grad_base = obj.grad_theta(&prefix, theta)?;
        let mut weight_sum = 0.0;
        for (j, &u) in step.candidates.iter().enumerate() {
            let w = row[j] / p_chosen;
            if w == 0.0 {
                continue;
            }
            weight_sum += w;
            let mut with_u = prefix.clone();
            with_u.insert(u);
            let grad_u = obj.grad_theta(&with_u, theta)?;
            for (acc, g) in total.iter_mut().zip(&grad_u) {
                *acc += w * g;
            }
        }
        if weight_sum != 0.0 {
            for (acc, g) in total.iter_mut().zip(&grad_base) {
                *acc -= weight_sum * g;
            }
        }
        prefix.insert(step.chosen_element());
    }
    Ok(total)
}

/// Recompute `ln p` of a trace's decision path at an arbitrary `theta`,
/// holding every candidate set and chosen element fixed.
pub fn replay_log_prob(
    trace: &GreedyTrace,
    obj: &dyn SubmodularObjective,
    theta: &[f64],
) -> Result<f64> {
    let mut cache = obj.gain_cache(theta)?;
    let mut log_prob = 0.0;
    for step in &trace.steps {
        let gains: Vec<f64> = step.candidates.iter().map(|&u| cache.gain(u)).collect();
        let solution = trace.regularizer.solve_simplex(&gains)?;
        log_prob += solution.log_p[step.chosen];
        cache.insert(step.chosen_element());
    }
    Ok(log_prob)
}
