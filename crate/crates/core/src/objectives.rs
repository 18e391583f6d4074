//! Parameterized, normalized, monotone submodular set functions.
//!
//! Every objective implements `f(X, theta)` together with exact marginal
//! gains and the exact gradient of `f(X, .)` with respect to the parameter
//! vector. Three families are provided:
//!
//! * [`BipartiteInfluence`]: expected number of influenced targets,
//!   `f(X, theta) = sum_t (1 - prod_{v in X} (1 - theta[v,t]))` with
//!   `theta in [0,1]^{V x T}` stored row-major by `(item, target)`.
//! * [`WeightedCoverage`]: `f(X, w) = sum of w_i over universe items covered
//!   by X`, with the nonnegative weights acting as the parameter vector.
//! * [`DeepSubmodularFunction`]: a one-hidden-layer network
//!   `f(X, theta) = sum_h a_h * phi(sum_{v in X} W[h,v])` with nonnegative
//!   weights and the shifted logistic `phi(x) = sigmoid(x) - 1/2`, which is
//!   concave and increasing on `x >= 0` with `phi(0) = 0` so that
//!   `f(empty) = 0` holds exactly.
//!
//! Objectives are immutable and all queries are pure; per-run incremental
//! state lives in a [`GainCache`] owned by a single greedy run.

use crate::error::{Error, Result};
use crate::set::{ElementSet, GroundSet};

/// Evaluation contract for `f(X, theta)`.
pub trait SubmodularObjective: Sync {
    fn ground(&self) -> &GroundSet;

    /// Dimension of the parameter vector.
    fn param_dim(&self) -> usize;

    /// `f(X, theta)`. `f(empty, theta) = 0` exactly for every objective.
    fn eval(&self, x: &ElementSet, theta: &[f64]) -> Result<f64>;

    /// `f(X + v, theta) - f(X, theta)`; zero when `v` is already in `X`.
    fn marginal_gain(&self, v: usize, x: &ElementSet, theta: &[f64]) -> Result<f64> {
        if v >= self.ground().len() {
            return Err(Error::Input(format!(
                "element index {v} out of range for ground set of size {}",
                self.ground().len()
            )));
        }
        if x.contains(v) {
            return Ok(0.0);
        }
        let mut xv = x.clone();
        xv.insert(v);
        Ok(self.eval(&xv, theta)? - self.eval(x, theta)?)
    }

    /// Exact gradient of `f(X, .)` at `theta` (length `param_dim`).
    fn grad_theta(&self, x: &ElementSet, theta: &[f64]) -> Result<Vec<f64>>;

    /// Fresh incremental marginal-gain evaluator for one greedy run at a
    /// fixed `theta`. Gains must match the `eval` difference identity.
    fn gain_cache<'a>(&'a self, theta: &'a [f64]) -> Result<Box<dyn GainCache + 'a>>;

    /// Full validation of a user-supplied parameter vector (dimension,
    /// finiteness, admissible range). Used at ingestion boundaries.
    fn validate_theta(&self, theta: &[f64]) -> Result<()>;

    /// Display labels for the parameter components, in storage order.
    fn param_labels(&self) -> Vec<String> {
        (0..self.param_dim()).map(|d| format!("theta[{d}]")).collect()
    }
}

/// Incremental marginal gains along one growing solution.
///
/// `gain(v)` is `f(X + v) - f(X)` for the current set `X`; `insert(v)`
/// advances the state. A cache is owned by a single run and never shared.
pub trait GainCache {
    fn gain(&self, v: usize) -> f64;
    fn insert(&mut self, v: usize);
}

fn check_dims(obj: &dyn SubmodularObjective, x: &ElementSet, theta: &[f64]) -> Result<()> {
    if theta.len() != obj.param_dim() {
        return Err(Error::Config(format!(
            "parameter vector has dimension {}, objective expects {}",
            theta.len(),
            obj.param_dim()
        )));
    }
    if x.universe() != obj.ground().len() {
        return Err(Error::Input(format!(
            "subset defined over {} elements, objective has {}",
            x.universe(),
            obj.ground().len()
        )));
    }
    Ok(())
}

fn check_finite(theta: &[f64]) -> Result<()> {
    if theta.iter().any(|t| !t.is_finite()) {
        return Err(Error::Input("parameter vector contains non-finite entries".into()));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Bipartite influence
// ---------------------------------------------------------------------------

/// Expected number of influenced targets over a bipartite item/target graph.
#[derive(Clone, Debug)]
pub struct BipartiteInfluence {
    ground: GroundSet,
    targets: usize,
}

impl BipartiteInfluence {
    pub fn new(ground: GroundSet, targets: usize) -> Result<Self> {
        if targets == 0 {
            return Err(Error::Config("influence objective needs at least one target".into()));
        }
        Ok(BipartiteInfluence { ground, targets })
    }

    pub fn targets(&self) -> usize {
        self.targets
    }

    /// Row-major flat index of the `(item, target)` link probability.
    pub fn link_index(&self, item: usize, target: usize) -> usize {
        item * self.targets + target
    }

    fn theta_at<'a>(&self, theta: &'a [f64], v: usize) -> &'a [f64] {
        &theta[v * self.targets..(v + 1) * self.targets]
    }
}

impl SubmodularObjective for BipartiteInfluence {
    fn ground(&self) -> &GroundSet {
        &self.ground
    }

    fn param_dim(&self) -> usize {
        self.ground.len() * self.targets
    }

    fn eval(&self, x: &ElementSet, theta: &[f64]) -> Result<f64> {
        check_dims(self, x, theta)?;
        if x.is_empty() {
            return Ok(0.0);
        }
        let mut total = 0.0;
        for t in 0..self.targets {
            let mut miss = 1.0;
            for v in x.iter() {
                miss *= 1.0 - theta[self.link_index(v, t)];
            }
            total += 1.0 - miss;
        }
        Ok(total)
    }

    fn grad_theta(&self, x: &ElementSet, theta: &[f64]) -> Result<Vec<f64>> {
        check_dims(self, x, theta)?;
        let mut grad = vec![0.0; self.param_dim()];
        // d f / d theta[v,t] = prod_{u in X, u != v} (1 - theta[u,t]) for v in X.
        for t in 0..self.targets {
            for v in x.iter() {
                let mut others = 1.0;
                for u in x.iter() {
                    if u != v {
                        others *= 1.0 - theta[self.link_index(u, t)];
                    }
                }
                grad[self.link_index(v, t)] = others;
            }
        }
        Ok(grad)
    }

    fn gain_cache<'a>(&'a self, theta: &'a [f64]) -> Result<Box<dyn GainCache + 'a>> {
        check_dims(self, &ElementSet::empty(self.ground.len()), theta)?;
        Ok(Box::new(InfluenceGainCache {
            obj: self,
            theta,
            survival: vec![1.0; self.targets],
        }))
    }

    fn validate_theta(&self, theta: &[f64]) -> Result<()> {
        check_dims(self, &ElementSet::empty(self.ground.len()), theta)?;
        check_finite(theta)?;
        if theta.iter().any(|&t| !(0.0..=1.0).contains(&t)) {
            return Err(Error::Input(
                "influence link probabilities must lie in [0, 1]".into(),
            ));
        }
        Ok(())
    }

    fn param_labels(&self) -> Vec<String> {
        let mut labels = Vec::with_capacity(self.param_dim());
        for v in 0..self.ground.len() {
            for t in 0..self.targets {
                labels.push(format!("theta[{},t{}]", self.ground.label(v), t));
            }
        }
        labels
    }
}

/// Per-target survival products `prod_{v in X} (1 - theta[v,t])`.
struct InfluenceGainCache<'a> {
    obj: &'a BipartiteInfluence,
    theta: &'a [f64],
    survival: Vec<f64>,
}

impl GainCache for InfluenceGainCache<'_> {
    fn gain(&self, v: usize) -> f64 {
        let row = self.obj.theta_at(self.theta, v);
        self.survival.iter().zip(row).map(|(s, t)| s * t).sum()
    }

    fn insert(&mut self, v: usize) {
        let row = self.obj.theta_at(self.theta, v);
        for (s, t) in self.survival.iter_mut().zip(row) {
            *s *= 1.0 - t;
        }
    }
}

// ---------------------------------------------------------------------------
// Weighted coverage
// ---------------------------------------------------------------------------

/// Weighted set coverage: each element covers a fixed subset of a universe
/// and the universe item weights are the parameter vector.
#[derive(Clone, Debug)]
pub struct WeightedCoverage {
    ground: GroundSet,
    universe: usize,
    cover_sets: Vec<Vec<usize>>,
    weights: Vec<f64>,
}

impl WeightedCoverage {
    pub fn new(
        ground: GroundSet,
        universe: usize,
        cover_sets: Vec<Vec<usize>>,
        weights: Vec<f64>,
    ) -> Result<Self> {
        if cover_sets.len() != ground.len() {
            return Err(Error::Config(format!(
                "expected {} cover sets, got {}",
                ground.len(),
                cover_sets.len()
            )));
        }
        if weights.len() != universe {
            return Err(Error::Config(format!(
                "expected {} universe weights, got {}",
                universe,
                weights.len()
            )));
        }
        if weights.iter().any(|&w| !w.is_finite() || w < 0.0) {
            return Err(Error::Input("universe weights must be finite and nonnegative".into()));
        }
        for (v, cs) in cover_sets.iter().enumerate() {
            if cs.iter().any(|&i| i >= universe) {
                return Err(Error::Input(format!(
                    "cover set of element {v} references an item outside the universe"
                )));
            }
        }
        Ok(WeightedCoverage {
            ground,
            universe,
            cover_sets,
            weights,
        })
    }

    pub fn universe_size(&self) -> usize {
        self.universe
    }

    /// The stored canonical weights (the default parameter vector).
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn cover_set(&self, v: usize) -> &[usize] {
        &self.cover_sets[v]
    }

    fn covered(&self, x: &ElementSet) -> Vec<bool> {
        let mut covered = vec![false; self.universe];
        for v in x.iter() {
            for &i in &self.cover_sets[v] {
                covered[i] = true;
            }
        }
        covered
    }
}

impl SubmodularObjective for WeightedCoverage {
    fn ground(&self) -> &GroundSet {
        &self.ground
    }

    fn param_dim(&self) -> usize {
        self.universe
    }

    fn eval(&self, x: &ElementSet, theta: &[f64]) -> Result<f64> {
        check_dims(self, x, theta)?;
        let covered = self.covered(x);
        Ok(covered
            .iter()
            .zip(theta)
            .filter_map(|(&c, &w)| c.then_some(w))
            .sum())
    }

    fn grad_theta(&self, x: &ElementSet, theta: &[f64]) -> Result<Vec<f64>> {
        check_dims(self, x, theta)?;
        // f is linear in the weights: gradient is the coverage indicator.
        Ok(self
            .covered(x)
            .into_iter()
            .map(|c| if c { 1.0 } else { 0.0 })
            .collect())
    }

    fn gain_cache<'a>(&'a self, theta: &'a [f64]) -> Result<Box<dyn GainCache + 'a>> {
        check_dims(self, &ElementSet::empty(self.ground.len()), theta)?;
        Ok(Box::new(CoverageGainCache {
            obj: self,
            theta,
            covered: vec![false; self.universe],
        }))
    }

    fn validate_theta(&self, theta: &[f64]) -> Result<()> {
        check_dims(self, &ElementSet::empty(self.ground.len()), theta)?;
        check_finite(theta)?;
        if theta.iter().any(|&w| w < 0.0) {
            return Err(Error::Input("coverage weights must be nonnegative".into()));
        }
        Ok(())
    }

    fn param_labels(&self) -> Vec<String> {
        (0..self.universe).map(|i| format!("w[{i}]")).collect()
    }
}

struct CoverageGainCache<'a> {
    obj: &'a WeightedCoverage,
    theta: &'a [f64],
    covered: Vec<bool>,
}

impl GainCache for CoverageGainCache<'_> {
    fn gain(&self, v: usize) -> f64 {
        self.obj.cover_sets[v]
            .iter()
            .filter(|&&i| !self.covered[i])
            .map(|&i| self.theta[i])
            .sum()
    }

    fn insert(&mut self, v: usize) {
        for &i in &self.obj.cover_sets[v] {
            self.covered[i] = true;
        }
    }
}

// ---------------------------------------------------------------------------
// Deep submodular function
// ---------------------------------------------------------------------------

/// Shifted logistic: concave and increasing on `x >= 0`, `phi(0) = 0`.
pub fn phi(x: f64) -> f64 {
    sigmoid(x) - 0.5
}

pub fn phi_prime(x: f64) -> f64 {
    let s = sigmoid(x);
    s * (1.0 - s)
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// One-hidden-layer deep submodular function. The parameter vector is the
/// concatenation `[W row-major (hidden x n), a (hidden)]`, all entries
/// required nonnegative.
#[derive(Clone, Debug)]
pub struct DeepSubmodularFunction {
    ground: GroundSet,
    hidden: usize,
}

impl DeepSubmodularFunction {
    pub fn new(ground: GroundSet, hidden: usize) -> Result<Self> {
        if hidden == 0 {
            return Err(Error::Config("hidden width must be at least 1".into()));
        }
        Ok(DeepSubmodularFunction { ground, hidden })
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    fn w_index(&self, h: usize, v: usize) -> usize {
        h * self.ground.len() + v
    }

    fn a_index(&self, h: usize) -> usize {
        self.hidden * self.ground.len() + h
    }

    /// Hidden-unit masses `m_h = sum_{v in X} W[h, v]`.
    fn masses(&self, x: &ElementSet, theta: &[f64]) -> Vec<f64> {
        let mut m = vec![0.0; self.hidden];
        for v in x.iter() {
            for (h, mh) in m.iter_mut().enumerate() {
                *mh += theta[self.w_index(h, v)];
            }
        }
        m
    }
}

impl SubmodularObjective for DeepSubmodularFunction {
    fn ground(&self) -> &GroundSet {
        &self.ground
    }

    fn param_dim(&self) -> usize {
        self.hidden * self.ground.len() + self.hidden
    }

    fn eval(&self, x: &ElementSet, theta: &[f64]) -> Result<f64> {
        check_dims(self, x, theta)?;
        if x.is_empty() {
            return Ok(0.0);
        }
        let m = self.masses(x, theta);
        Ok(m
            .iter()
            .enumerate()
            .map(|(h, &mh)| theta[self.a_index(h)] * phi(mh))
            .sum())
    }

    fn grad_theta(&self, x: &ElementSet, theta: &[f64]) -> Result<Vec<f64>> {
        check_dims(self, x, theta)?;
        let mut grad = vec![0.0; self.param_dim()];
        let m = self.masses(x, theta);
        for h in 0..self.hidden {
            let slope = theta[self.a_index(h)] * phi_prime(m[h]);
            for v in x.iter() {
                grad[self.w_index(h, v)] = slope;
            }
            grad[self.a_index(h)] = phi(m[h]);
        }
        Ok(grad)
    }

    fn gain_cache<'a>(&'a self, theta: &'a [f64]) -> Result<Box<dyn GainCache + 'a>> {
        check_dims(self, &ElementSet::empty(self.ground.len()), theta)?;
        Ok(Box::new(DsfGainCache {
            obj: self,
            theta,
            masses: vec![0.0; self.hidden],
        }))
    }

    fn validate_theta(&self, theta: &[f64]) -> Result<()> {
        check_dims(self, &ElementSet::empty(self.ground.len()), theta)?;
        check_finite(theta)?;
        if theta.iter().any(|&w| w < 0.0) {
            return Err(Error::Input("deep submodular weights must be nonnegative".into()));
        }
        Ok(())
    }

    fn param_labels(&self) -> Vec<String> {
        let n = self.ground.len();
        let mut labels = Vec::with_capacity(self.param_dim());
        for h in 0..self.hidden {
            for v in 0..n {
                labels.push(format!("W[{h},{v}]"));
            }
        }
        for h in 0..self.hidden {
            labels.push(format!("a[{h}]"));
        }
        labels
    }
}

struct DsfGainCache<'a> {
    obj: &'a DeepSubmodularFunction,
    theta: &'a [f64],
    masses: Vec<f64>,
}

impl GainCache for DsfGainCache<'_> {
    fn gain(&self, v: usize) -> f64 {
        self.masses
            .iter()
            .enumerate()
            .map(|(h, &mh)| {
                let w = self.theta[self.obj.w_index(h, v)];
                self.theta[self.obj.a_index(h)] * (phi(mh + w) - phi(mh))
            })
            .sum()
    }

    fn insert(&mut self, v: usize) {
        for (h, mh) in self.masses.iter_mut().enumerate() {
            *mh += self.theta[self.obj.w_index(h, v)];
        }
    }
}

// ---------------------------------------------------------------------------
// Fixtures
// ---------------------------------------------------------------------------

/// The worked three-item / three-target influence example: items v1..v3,
/// targets t1..t3, link probabilities
/// `theta = [[0.4, 0.4, 0], [0, 0.4, 0.2], [0, 0, 0.2]]` (row-major).
pub fn three_item_demo() -> (BipartiteInfluence, Vec<f64>) {
    let ground = GroundSet::with_labels(3, vec!["v1".into(), "v2".into(), "v3".into()]).unwrap();
    let obj = BipartiteInfluence::new(ground, 3).unwrap();
    let theta = vec![0.4, 0.4, 0.0, 0.0, 0.4, 0.2, 0.0, 0.0, 0.2];
    (obj, theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_rng;
    use rand::Rng;

    fn set(n: usize, ix: &[usize]) -> ElementSet {
        ElementSet::from_indices(n, ix).unwrap()
    }

    #[test]
    fn demo_pairwise_values() {
        let (obj, theta) = three_item_demo();
        let f12 = obj.eval(&set(3, &[0, 1]), &theta).unwrap();
        let f13 = obj.eval(&set(3, &[0, 2]), &theta).unwrap();
        let f23 = obj.eval(&set(3, &[1, 2]), &theta).unwrap();
        assert!((f12 - 1.24).abs() < 1e-12);
        assert!((f13 - 1.00).abs() < 1e-12);
        assert!((f23 - 0.76).abs() < 1e-12);
    }

    #[test]
    fn normalization_is_exact() {
        let (obj, theta) = three_item_demo();
        assert_eq!(obj.eval(&set(3, &[]), &theta).unwrap(), 0.0);

        let g = GroundSet::new(4).unwrap();
        let cov = WeightedCoverage::new(g, 3, vec![vec![0], vec![1], vec![2], vec![0, 2]],
            vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(cov.eval(&set(4, &[]), cov.weights()).unwrap(), 0.0);

        let dsf = DeepSubmodularFunction::new(GroundSet::new(3).unwrap(), 2).unwrap();
        let th = vec![0.5; dsf.param_dim()];
        assert_eq!(dsf.eval(&set(3, &[]), &th).unwrap(), 0.0);
    }

    #[test]
    fn demo_marginal_gains() {
        let (obj, theta) = three_item_demo();
        // v1 at the empty set covers t1 and t2 with probability 0.4 each.
        let g1 = obj.marginal_gain(0, &set(3, &[]), &theta).unwrap();
        assert!((g1 - 0.8).abs() < 1e-12);
        // v2 on top of {v1}: t2 contributes 0.6 * 0.4, t3 contributes 0.2.
        let g2 = obj.marginal_gain(1, &set(3, &[0]), &theta).unwrap();
        assert!((g2 - 0.44).abs() < 1e-12);
        // members gain nothing
        assert_eq!(obj.marginal_gain(0, &set(3, &[0, 1]), &theta).unwrap(), 0.0);
    }

    #[test]
    fn demo_gradient_entries() {
        let (obj, theta) = three_item_demo();
        let grad = obj.grad_theta(&set(3, &[0, 1]), &theta).unwrap();
        // d f / d theta[v1, t2] = 1 - theta[v2, t2] = 0.6
        assert!((grad[obj.link_index(0, 1)] - 0.6).abs() < 1e-12);
        // absent rows have zero gradient
        for t in 0..3 {
            assert_eq!(grad[obj.link_index(2, t)], 0.0);
        }
    }

    #[test]
    fn eval_rejects_bad_dims() {
        let (obj, _) = three_item_demo();
        let err = obj.eval(&set(3, &[0]), &[0.5; 4]).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        let err = obj.eval(&set(5, &[0]), &[0.5; 9]).unwrap_err();
        assert!(matches!(err, Error::Input(_)));
    }

    #[test]
    fn influence_rejects_out_of_range_probs() {
        let (obj, mut theta) = three_item_demo();
        theta[4] = 1.5;
        assert!(obj.validate_theta(&theta).is_err());
    }

    /// Central finite differences of `eval(X, .)`.
    fn fd_grad(obj: &dyn SubmodularObjective, x: &ElementSet, theta: &[f64], h: f64) -> Vec<f64> {
        (0..theta.len())
            .map(|d| {
                let mut tp = theta.to_vec();
                let mut tm = theta.to_vec();
                tp[d] += h;
                tm[d] -= h;
                (obj.eval(x, &tp).unwrap() - obj.eval(x, &tm).unwrap()) / (2.0 * h)
            })
            .collect()
    }

    fn assert_grad_matches_fd(obj: &dyn SubmodularObjective, x: &ElementSet, theta: &[f64]) {
        let grad = obj.grad_theta(x, theta).unwrap();
        let fd = fd_grad(obj, x, theta, 1e-5);
        for (d, (&g, &f)) in grad.iter().zip(&fd).enumerate() {
            let scale = g.abs().max(f.abs()).max(1e-6);
            assert!(
                (g - f).abs() / scale <= 1e-6,
                "component {d}: analytic {g} vs fd {f}"
            );
        }
    }

    fn random_subset(rng: &mut impl Rng, n: usize) -> ElementSet {
        let mut s = ElementSet::empty(n);
        for v in 0..n {
            if rng.gen_bool(0.5) {
                s.insert(v);
            }
        }
        s
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = derive_rng(2024, &[1]);
        for probe in 0..50 {
            let n = rng.gen_range(2..=5);
            match probe % 3 {
                0 => {
                    let t = rng.gen_range(1..=3);
                    let obj = BipartiteInfluence::new(GroundSet::new(n).unwrap(), t).unwrap();
                    let theta: Vec<f64> =
                        (0..obj.param_dim()).map(|_| rng.gen_range(0.05..0.95)).collect();
                    let x = random_subset(&mut rng, n);
                    assert_grad_matches_fd(&obj, &x, &theta);
                }
                1 => {
                    let universe = rng.gen_range(2..=5);
                    let cover: Vec<Vec<usize>> = (0..n)
                        .map(|_| (0..universe).filter(|_| rng.gen_bool(0.5)).collect())
                        .collect();
                    let obj = WeightedCoverage::new(
                        GroundSet::new(n).unwrap(),
                        universe,
                        cover,
                        vec![1.0; universe],
                    )
                    .unwrap();
                    let theta: Vec<f64> =
                        (0..universe).map(|_| rng.gen_range(0.1..2.0)).collect();
                    let x = random_subset(&mut rng, n);
                    assert_grad_matches_fd(&obj, &x, &theta);
                }
                _ => {
                    let hidden = rng.gen_range(1..=3);
                    let obj =
                        DeepSubmodularFunction::new(GroundSet::new(n).unwrap(), hidden).unwrap();
                    let theta: Vec<f64> =
                        (0..obj.param_dim()).map(|_| rng.gen_range(0.05..1.0)).collect();
                    let x = random_subset(&mut rng, n);
                    assert_grad_matches_fd(&obj, &x, &theta);
                }
            }
        }
    }

    fn random_objective(
        rng: &mut impl Rng,
        kind: usize,
        n: usize,
    ) -> (Box<dyn SubmodularObjective>, Vec<f64>) {
        match kind {
            0 => {
                let t = rng.gen_range(1..=3);
                let obj = BipartiteInfluence::new(GroundSet::new(n).unwrap(), t).unwrap();
                let theta = (0..obj.param_dim()).map(|_| rng.gen_range(0.0..1.0)).collect();
                (Box::new(obj), theta)
            }
            1 => {
                let universe = rng.gen_range(2..=6);
                let cover: Vec<Vec<usize>> = (0..n)
                    .map(|_| (0..universe).filter(|_| rng.gen_bool(0.4)).collect())
                    .collect();
                let obj = WeightedCoverage::new(
                    GroundSet::new(n).unwrap(),
                    universe,
                    cover,
                    vec![1.0; universe],
                )
                .unwrap();
                let theta = (0..universe).map(|_| rng.gen_range(0.0..2.0)).collect();
                (Box::new(obj), theta)
            }
            _ => {
                let hidden = rng.gen_range(1..=4);
                let obj = DeepSubmodularFunction::new(GroundSet::new(n).unwrap(), hidden).unwrap();
                let theta = (0..obj.param_dim()).map(|_| rng.gen_range(0.0..1.0)).collect();
                (Box::new(obj), theta)
            }
        }
    }

    #[test]
    fn monotone_and_submodular_on_random_draws() {
        let mut rng = derive_rng(2024, &[2]);
        for kind in 0..3 {
            for _ in 0..200 {
                let n = rng.gen_range(2..=8);
                let (obj, theta) = random_objective(&mut rng, kind, n);
                // X subset of Y, v outside Y
                let y = random_subset(&mut rng, n);
                let mut x = y.clone();
                for v in y.iter().collect::<Vec<_>>() {
                    if rng.gen_bool(0.5) {
                        x.remove(v);
                    }
                }
                let v = rng.gen_range(0..n);
                let gain_y = obj.marginal_gain(v, &y, &theta).unwrap();
                assert!(gain_y >= -1e-12, "monotonicity violated: {gain_y}");
                if !y.contains(v) {
                    let gain_x = obj.marginal_gain(v, &x, &theta).unwrap();
                    assert!(
                        gain_x >= gain_y - 1e-12,
                        "submodularity violated: {gain_x} < {gain_y}"
                    );
                }
            }
        }
    }

    #[test]
    fn gain_caches_match_eval_differences() {
        let mut rng = derive_rng(2024, &[3]);
        for kind in 0..3 {
            for _ in 0..30 {
                let n = rng.gen_range(2..=7);
                let (obj, theta) = random_objective(&mut rng, kind, n);
                let mut cache = obj.gain_cache(&theta).unwrap();
                let mut x = ElementSet::empty(n);
                for _ in 0..n.min(4) {
                    let v = rng.gen_range(0..n);
                    if x.contains(v) {
                        continue;
                    }
                    let expected = obj.marginal_gain(v, &x, &theta).unwrap();
                    let got = cache.gain(v);
                    assert!(
                        (got - expected).abs() <= 1e-12,
                        "cached gain {got} vs eval difference {expected}"
                    );
                    cache.insert(v);
                    x.insert(v);
                }
            }
        }
    }

    #[test]
    fn dsf_activation_properties() {
        assert_eq!(phi(0.0), 0.0);
        // increasing and concave on x >= 0
        let mut prev = phi(0.0);
        let mut prev_slope = f64::INFINITY;
        for i in 1..50 {
            let x = i as f64 * 0.1;
            let y = phi(x);
            assert!(y > prev);
            let slope = (y - prev) / 0.1;
            assert!(slope <= prev_slope + 1e-12);
            prev = y;
            prev_slope = slope;
        }
    }
}
