//! Differentiable (smoothed) greedy maximization of parameterized monotone
//! submodular functions.
//!
//! The greedy algorithm picks, at every step, the feasible element with the
//! largest marginal gain. Smoothing replaces that argmax by the maximizer
//! of `<gains, p> - Omega(p)` over the probability simplex for a strictly
//! convex regularizer `Omega` and samples the next element from `p`. The
//! randomized algorithm keeps approximation guarantees of the form
//! `(1 - 1/e) * OPT - delta * K` (cardinality) and `OPT / 2 - delta * K`
//! (matroids and other 1-extensible systems), where `delta` bounds the
//! regularizer's spread over the simplex, and its output distribution is
//! differentiable in the objective parameters.
//!
//! On top of the samplers the crate provides unbiased score-function
//! estimation of `grad_theta E[Q(S)]` for any output-dependent quantity
//! (with running-mean baseline correction), exhaustive desk-scale oracles
//! to verify everything against, sensitivity analysis of per-element
//! inclusion probabilities, decision-focused training of a predictive
//! model, and learning of a submodular model from limited value queries.

pub mod constraints;
pub mod error;
pub mod grad;
pub mod greedy;
pub mod objectives;
pub mod oracle;
pub mod regularizers;
pub mod rng;
pub mod set;

pub use error::{Error, Result};
