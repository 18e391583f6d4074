//! Strictly convex regularizers for the perturbed argmax over the simplex.
//!
//! Each step of the smoothed greedy algorithm replaces `argmax` over the
//! candidate gains `g` by the unique maximizer of `<g, p> - Omega(p)` over
//! the probability simplex. Two regularizers are supported:
//!
//! * entropy `Omega(p) = eps * sum p_i ln p_i`: the solution is the softmax
//!   `p_i proportional to exp(g_i / eps)`, solved with max-subtraction and
//!   log-probabilities taken from the log-sum-exp identity;
//! * quadratic `Omega(p) = eps * ||p||^2`: equivalent to the Euclidean
//!   projection of `g / (2 eps)` onto the simplex, solved by sort and
//!   threshold.
//!
//! The Jacobian `d p / d g` comes from the softmax closed form
//! `eps^{-1} (diag(p) - p p^T)` for entropy, and from the bordered KKT
//! system restricted to the active face for the quadratic case. The
//! regularizer also reports the smoothing price `delta`, an upper bound on
//! `Omega(p) - Omega(q)` over the simplex, which enters the approximation
//! guarantees as `delta * K`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Strict-complementarity tolerance: an entry with both `p` and `lambda`
/// below this is flagged degenerate and kept in the differentiable face.
const DEGENERACY_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Regularizer {
    Entropy { epsilon: f64 },
    Quadratic { epsilon: f64 },
}

/// Solution of the regularized argmax on one candidate set.
#[derive(Clone, Debug, Serialize)]
pub struct SimplexSolution {
    /// The probability vector, `p >= 0`, `sum p = 1`.
    pub p: Vec<f64>,
    /// `ln p`, computed without taking logs of computed probabilities where
    /// a stable identity exists (`-inf` on zero entries).
    pub log_p: Vec<f64>,
    /// Multipliers on the nonnegativity constraints (`lambda_i p_i = 0`).
    pub lambda: Vec<f64>,
    /// Multiplier on the normalization constraint.
    pub mu: f64,
    /// Entries pinned at zero (the active face complement).
    pub zero_mask: Vec<bool>,
    /// Strict complementarity failed somewhere (`p_i = lambda_i = 0`).
    pub degenerate: bool,
}

impl Regularizer {
    pub fn epsilon(&self) -> f64 {
        match *self {
            Regularizer::Entropy { epsilon } | Regularizer::Quadratic { epsilon } => epsilon,
        }
    }

    fn validate(&self) -> Result<()> {
        let eps = self.epsilon();
        if !(eps.is_finite() && eps > 0.0) {
            return Err(Error::Config(format!("regularizer strength must be positive, got {eps}")));
        }
        Ok(())
    }

    /// `Omega(p)`.
    pub fn omega(&self, p: &[f64]) -> f64 {
        match *self {
            Regularizer::Entropy { epsilon } => {
                epsilon
                    * p.iter()
                        .map(|&pi| if pi > 0.0 { pi * pi.ln() } else { 0.0 })
                        .sum::<f64>()
            }
            Regularizer::Quadratic { epsilon } => {
                epsilon * p.iter().map(|&pi| pi * pi).sum::<f64>()
            }
        }
    }

    /// Upper bound on `Omega(p) - Omega(q)` over the simplex on `n_k`
    /// candidates: `eps ln n_k` (entropy), `eps (1 - 1/n_k)` (quadratic).
    pub fn delta_bound(&self, n_k: usize) -> f64 {
        match *self {
            Regularizer::Entropy { epsilon } => epsilon * (n_k as f64).ln(),
            Regularizer::Quadratic { epsilon } => epsilon * (1.0 - 1.0 / n_k as f64),
        }
    }

    /// Unique maximizer of `<g, p> - Omega(p)` over the simplex.
    pub fn solve_simplex(&self, g: &[f64]) -> Result<SimplexSolution> {
        self.validate()?;
        if g.is_empty() {
            return Err(Error::Input("regularized argmax on an empty candidate set".into()));
        }
        if g.iter().any(|x| !x.is_finite()) {
            return Err(Error::Input("gain vector contains non-finite entries".into()));
        }
        match *self {
            Regularizer::Entropy { epsilon } => Ok(solve_entropy(g, epsilon)),
            Regularizer::Quadratic { epsilon } => Ok(solve_quadratic(g, epsilon)),
        }
    }

    /// Jacobian `d p / d g` at a solution, rows indexed like `p`.
    ///
    /// Zero-probability candidates get zero rows and columns. Degenerate
    /// entries (flagged on the solution) are kept in the face.
    pub fn jacobian(&self, sol: &SimplexSolution) -> Vec<Vec<f64>> {
        match *self {
            Regularizer::Entropy { epsilon } => {
                let n = sol.p.len();
                let mut jac = vec![vec![0.0; n]; n];
                for i in 0..n {
                    for j in 0..n {
                        let d = if i == j { sol.p[i] } else { 0.0 };
                        jac[i][j] = (d - sol.p[i] * sol.p[j]) / epsilon;
                    }
                }
                jac
            }
            Regularizer::Quadratic { epsilon } => {
                let hess: Vec<f64> = vec![2.0 * epsilon; sol.p.len()];
                kkt_face_jacobian(&hess, &pinned_set(sol))
            }
        }
    }

    /// Diagonal of the regularizer Hessian at `p` (both regularizers have
    /// diagonal Hessians).
    pub fn hessian_diag(&self, p: &[f64]) -> Vec<f64> {
        match *self {
            Regularizer::Entropy { epsilon } => p.iter().map(|&pi| epsilon / pi).collect(),
            Regularizer::Quadratic { epsilon } => vec![2.0 * epsilon; p.len()],
        }
    }
}

/// Indices pinned at zero: `p_i = 0` with `lambda_i` clearly positive.
/// Degenerate entries stay in the face.
fn pinned_set(sol: &SimplexSolution) -> Vec<usize> {
    sol.zero_mask
        .iter()
        .zip(&sol.lambda)
        .enumerate()
        .filter_map(|(i, (&z, &l))| (z && l > DEGENERACY_TOL).then_some(i))
        .collect()
}

fn solve_entropy(g: &[f64], epsilon: f64) -> SimplexSolution {
    let n = g.len();
    let max = g.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let z: Vec<f64> = g.iter().map(|&gi| (gi - max) / epsilon).collect();
    let sum_exp: f64 = z.iter().map(|&zi| zi.exp()).sum();
    let lse = sum_exp.ln();
    let log_p: Vec<f64> = z.iter().map(|&zi| zi - lse).collect();
    let p: Vec<f64> = log_p.iter().map(|&lp| lp.exp()).collect();
    let zero_mask: Vec<bool> = p.iter().map(|&pi| pi == 0.0).collect();
    SimplexSolution {
        mu: max + epsilon * (lse - 1.0),
        lambda: vec![0.0; n],
        log_p,
        p,
        zero_mask,
        degenerate: false,
    }
}

/// Euclidean projection of `g / (2 eps)` onto the simplex by sorting and
/// thresholding, with the KKT multipliers recovered from stationarity.
fn solve_quadratic(g: &[f64], epsilon: f64) -> SimplexSolution {
    let n = g.len();
    let y: Vec<f64> = g.iter().map(|&gi| gi / (2.0 * epsilon)).collect();
    let mut sorted = y.clone();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (j, &yj) in sorted.iter().enumerate() {
        cumsum += yj;
        let candidate = (cumsum - 1.0) / (j + 1) as f64;
        if j + 1 == n || sorted[j + 1] <= candidate {
            tau = candidate;
            break;
        }
    }
    let p: Vec<f64> = y.iter().map(|&yi| (yi - tau).max(0.0)).collect();
    let mu = 2.0 * epsilon * tau;
    let lambda: Vec<f64> = p
        .iter()
        .zip(g)
        .map(|(&pi, &gi)| if pi > 0.0 { 0.0 } else { mu - gi })
        .collect();
    let zero_mask: Vec<bool> = p.iter().map(|&pi| pi == 0.0).collect();
    let degenerate = zero_mask
        .iter()
        .zip(&lambda)
        .any(|(&z, &l)| z && l.abs() <= DEGENERACY_TOL);
    let log_p = p.iter().map(|&pi| pi.ln()).collect();
    SimplexSolution {
        p,
        log_p,
        lambda,
        mu,
        zero_mask,
        degenerate,
    }
}

/// Differentiate the KKT system of the regularized argmax with respect to
/// the gains, restricted to the active face.
///
/// With free variables `p`, pinned multipliers `lambda_U` and the
/// normalization multiplier `mu`, the bordered system is
///
/// ```text
/// [ H      -I_U   1 ] [dp/dg     ]   [ I ]
/// [ -I_U^T  0     0 ] [dlam/dg   ] = [ 0 ]
/// [ 1^T     0     0 ] [dmu/dg    ]   [ 0 ]
/// ```
///
/// where `H` is the (diagonal) regularizer Hessian. The top block of the
/// solution is `dp/dg`; rows and columns of pinned entries come out zero.
fn kkt_face_jacobian(hessian_diag: &[f64], pinned: &[usize]) -> Vec<Vec<f64>> {
    let n = hessian_diag.len();
    let u = pinned.len();
    let m = n + u + 1;
    let mut a = vec![vec![0.0; m]; m];
    for i in 0..n {
        a[i][i] = hessian_diag[i];
        a[i][n + u] = 1.0;
        a[n + u][i] = 1.0;
    }
    for (slot, &i) in pinned.iter().enumerate() {
        a[i][n + slot] = -1.0;
        a[n + slot][i] = -1.0;
    }
    let mut rhs = vec![vec![0.0; n]; m];
    for (j, row) in rhs.iter_mut().enumerate().take(n) {
        row[j] = 1.0;
    }
    let x = solve_dense(a, rhs).expect("bordered KKT system is nonsingular on the face");
    x.into_iter().take(n).collect()
}

/// Gaussian elimination with partial pivoting; `b` holds one RHS per column.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<Vec<f64>>) -> Result<Vec<Vec<f64>>> {
    let m = a.len();
    let nrhs = b[0].len();
    for col in 0..m {
        let pivot = (col..m)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        if a[pivot][col].abs() < 1e-14 {
            return Err(Error::Numeric("singular linear system".into()));
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in 0..m {
            if row == col {
                continue;
            }
            let factor = a[row][col] / a[col][col];
            if factor == 0.0 {
                continue;
            }
            for j in col..m {
                a[row][j] -= factor * a[col][j];
            }
            for j in 0..nrhs {
                b[row][j] -= factor * b[col][j];
            }
        }
    }
    for row in 0..m {
        let d = a[row][row];
        for j in 0..nrhs {
            b[row][j] /= d;
        }
    }
    Ok(b)
}
