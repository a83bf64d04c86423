//! Dirichlet-multinomial marginal likelihood, the tree structure prior and Catalan
//! numbers. Everything is in natural-log space.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use libm::{lgamma, log};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::tree::DecisionTree;

/// Per-terminal Dirichlet prior on class probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletPrior {
    alpha: Vec<f64>,
}

impl DirichletPrior {
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        if alpha.is_empty() || alpha.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
            return Err(Error::InvalidConfig(format!(
                "Dirichlet alpha must be positive, got {alpha:?}"
            )));
        }
        Ok(Self { alpha })
    }

    /// `alpha_j = value` for all `classes`.
    pub fn symmetric(classes: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; classes])
    }

    pub fn uniform(classes: usize) -> Self {
        Self {
            alpha: vec![1.0; classes],
        }
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn total(&self) -> f64 {
        self.alpha.iter().sum()
    }
}

/// Log marginal likelihood of one terminal's class counts with the class
/// probabilities integrated out:
///
/// `lnΓ(Σα) − Σ lnΓ(α_j) + Σ lnΓ(m_j + α_j) − lnΓ(n + Σα)`.
pub fn log_terminal_likelihood(counts: &[u32], prior: &DirichletPrior) -> f64 {
    debug_assert_eq!(counts.len(), prior.alpha.len());
    let total_alpha = prior.total();
    let n: u64 = counts.iter().map(|&c| u64::from(c)).sum();
    let mut acc = lgamma(total_alpha) - lgamma(n as f64 + total_alpha);
    for (&m, &a) in counts.iter().zip(&prior.alpha) {
        acc += lgamma(f64::from(m) + a) - lgamma(a);
    }
    acc
}

/// Sum of [`log_terminal_likelihood`] over the terminals of `tree`.
pub fn log_marginal_likelihood(tree: &DecisionTree, prior: &DirichletPrior) -> f64 {
    tree.terminals()
        .into_iter()
        .map(|id| log_terminal_likelihood(tree.terminal_counts(id).expect("terminal"), prior))
        .sum()
}

/// Posterior mean class probabilities of a terminal: `(m_j + α_j) / (n + Σα)`.
pub fn terminal_class_posterior(counts: &[u32], prior: &DirichletPrior) -> Vec<f64> {
    let mut out = Vec::with_capacity(counts.len());
    terminal_class_posterior_into(counts, prior, &mut out);
    out
}

pub(crate) fn terminal_class_posterior_into(
    counts: &[u32],
    prior: &DirichletPrior,
    out: &mut Vec<f64>,
) {
    let n: f64 = counts.iter().map(|&c| f64::from(c)).sum();
    let denom = n + prior.total();
    out.clear();
    out.extend(
        counts
            .iter()
            .zip(&prior.alpha)
            .map(|(&m, &a)| (f64::from(m) + a) / denom),
    );
}

/// `ln S_k` where `S_k = C(2k, k) / (k + 1)` is the k-th Catalan number.
pub fn log_catalan(k: usize) -> Result<f64> {
    if k < 1 {
        return Err(Error::InvalidConfig(format!(
            "Catalan index must be >= 1, got {k}"
        )));
    }
    let k = k as f64;
    Ok(lgamma(2.0 * k + 1.0) - 2.0 * lgamma(k + 1.0) - log(k + 1.0))
}

/// Log prior of a tree:
///
/// `Σ_splits [−ln N(var) − ln m] − ln S_k − ln K`
///
/// where `N(var)` is the number of candidate rules of the split variable, `S_k` the
/// Catalan number for `k` terminals and `K` the maximal number of terminals (taken
/// as `n − 1` when `max_terminals` is `None`). Trees with the same `k` and the same
/// split variables are equally likely a priori.
pub fn log_tree_prior(tree: &DecisionTree, ds: &Dataset, max_terminals: Option<usize>) -> f64 {
    let m = ds.m() as f64;
    let mut acc = 0.0;
    for id in tree.splits() {
        if let crate::tree::NodeKind::Split { var, .. } = tree.node(id).expect("split").kind() {
            acc -= log(ds.feature(*var).rule_count() as f64) + log(m);
        }
    }
    let k = tree.n_terminals();
    let cap = max_terminals.unwrap_or(ds.n().saturating_sub(1)).max(1);
    acc - log_catalan(k).expect("k >= 1") - log(cap as f64)
}
