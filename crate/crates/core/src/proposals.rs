//! Reversible-jump move kernel.
//!
//! A [`Proposer`] draws birth, death, change-split and change-rule proposals against
//! a scratch copy of the current tree and attaches the log ratio
//! `ln[q(θ|θ') p(θ') / q(θ'|θ) p(θ)]` used by the Metropolis-Hastings test. With
//! constant move probabilities `b` and `d`:
//!
//! * birth (`k → k+1`): `ln(d/b) + ln k − ln D'_Q + ln S_k − ln S_{k+1}`
//! * death (`k → k−1`): `ln(b/d) + ln D_Q − ln(k−1) + ln S_k − ln S_{k−1}`
//!
//! where `D_Q` counts splits with two terminal children (`D'_Q` in the proposed
//! tree) and `S_k` is the Catalan number. The two are exact inverses. Change moves
//! use symmetric kernels and carry a zero log ratio.

use alloc::format;
use alloc::vec::Vec;

use libm::{log, pow};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::likelihood::log_catalan;
use crate::tree::{DecisionTree, NodeId, NodeKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MoveKind {
    Birth,
    Death,
    ChangeSplit,
    ChangeRule,
}

impl MoveKind {
    pub const ALL: [MoveKind; 4] = [
        MoveKind::Birth,
        MoveKind::Death,
        MoveKind::ChangeSplit,
        MoveKind::ChangeRule,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MoveKind::Birth => "birth",
            MoveKind::Death => "death",
            MoveKind::ChangeSplit => "change_split",
            MoveKind::ChangeRule => "change_rule",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_change(self) -> bool {
        matches!(self, MoveKind::ChangeSplit | MoveKind::ChangeRule)
    }
}

impl core::fmt::Display for MoveKind {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How new split rules are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleProposalMode {
    /// Uniform over the feature's observed values (the rule prior). Change-rule
    /// redraws from the same set.
    DiscreteObserved,
    /// Uniform on `(root_min, root_max)` for birth and change-split, Gaussian step
    /// around the current rule for change-rule.
    ContinuousRootRange,
}

/// Standard deviation of the change-rule Gaussian step, per feature.
#[derive(Debug, Clone, PartialEq)]
pub enum StepSize {
    /// `σ_j = fraction × (root_max_j − root_min_j)`.
    RangeFraction(f64),
    PerFeature(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MoveConfig {
    pub p_birth: f64,
    pub p_death: f64,
    pub p_change_split: f64,
    pub p_change_rule: f64,
    /// Minimal number of training rows allowed in a terminal.
    pub p_min: usize,
    pub step: StepSize,
    pub rule_mode: RuleProposalMode,
    /// Maximal number of terminals `K`; `None` means `n − 1`.
    pub max_terminals: Option<usize>,
}

impl MoveConfig {
    /// Birth/death/change-split/change-rule = 0.1/0.1/0.1/0.7, `σ_j` at a tenth of the
    /// feature range.
    pub fn default_mix(p_min: usize, rule_mode: RuleProposalMode) -> Self {
        Self {
            p_birth: 0.1,
            p_death: 0.1,
            p_change_split: 0.1,
            p_change_rule: 0.7,
            p_min,
            step: StepSize::RangeFraction(0.1),
            rule_mode,
            max_terminals: None,
        }
    }

    pub fn with_probabilities(mut self, probs: [f64; 4]) -> Self {
        [
            self.p_birth,
            self.p_death,
            self.p_change_split,
            self.p_change_rule,
        ] = probs;
        self
    }

    pub fn probabilities(&self) -> [f64; 4] {
        [
            self.p_birth,
            self.p_death,
            self.p_change_split,
            self.p_change_rule,
        ]
    }

    pub fn probability(&self, kind: MoveKind) -> f64 {
        self.probabilities()[kind.index()]
    }

    pub fn validate(&self) -> Result<()> {
        let probs = self.probabilities();
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::InvalidConfig(format!(
                "move probabilities must be >= 0, got {probs:?}"
            )));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidConfig(format!(
                "move probabilities sum to {sum}, not 1"
            )));
        }
        if self.p_min < 1 {
            return Err(Error::InvalidConfig("p_min must be >= 1".into()));
        }
        match &self.step {
            StepSize::RangeFraction(f) if !(f.is_finite() && *f > 0.0) => {
                return Err(Error::InvalidConfig(format!(
                    "sigma fraction must be positive, got {f}"
                )));
            }
            StepSize::PerFeature(s) if s.iter().any(|v| !(v.is_finite() && *v > 0.0)) => {
                return Err(Error::InvalidConfig(
                    "per-feature sigma must be positive".into(),
                ));
            }
            _ => {}
        }
        if self.max_terminals == Some(0) {
            return Err(Error::InvalidConfig("max_terminals must be >= 1".into()));
        }
        Ok(())
    }

    /// Resolved `σ_j` for `ds`. A constant feature under a range fraction gets the
    /// fraction itself as an absolute step.
    pub fn sigma_for(&self, ds: &Dataset) -> Result<Vec<f64>> {
        match &self.step {
            StepSize::RangeFraction(f) => Ok(ds
                .meta()
                .iter()
                .map(|meta| {
                    let range = meta.root_range();
                    if range > 0.0 {
                        f * range
                    } else {
                        *f
                    }
                })
                .collect()),
            StepSize::PerFeature(s) if s.len() == ds.m() => Ok(s.clone()),
            StepSize::PerFeature(s) => Err(Error::InvalidConfig(format!(
                "{} sigma values for {} features",
                s.len(),
                ds.m()
            ))),
        }
    }

    pub fn max_terminals_for(&self, ds: &Dataset) -> usize {
        self.max_terminals
            .unwrap_or(ds.n().saturating_sub(1))
            .max(1)
    }
}

/// Depth-dependent split prior `p_split(d) = γ (1 + d)^(−δ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChipmanPrior {
    pub gamma: f64,
    pub delta: f64,
    pub enabled: bool,
}

impl Default for ChipmanPrior {
    fn default() -> Self {
        Self::disabled()
    }
}

impl ChipmanPrior {
    pub fn disabled() -> Self {
        Self {
            gamma: 0.95,
            delta: 1.0,
            enabled: false,
        }
    }

    pub fn new(gamma: f64, delta: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma <= 1.0) || !(delta >= 0.0 && delta.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "Chipman prior needs gamma in (0, 1] and delta >= 0, got ({gamma}, {delta})"
            )));
        }
        Ok(Self {
            gamma,
            delta,
            enabled: true,
        })
    }

    /// Probability that a terminal at `depth` is split.
    pub fn split_probability(&self, depth: usize) -> f64 {
        chipman_split_probability(depth, self)
    }

    /// Log prior ratio for splitting a terminal at `depth` into two terminals at
    /// `depth + 1`: `ln p(d) + 2 ln(1 − p(d+1)) − ln(1 − p(d))`. Zero when disabled.
    pub fn birth_log_ratio(&self, depth: usize) -> f64 {
        if !self.enabled {
            return 0.0;
        }
        let p = self.split_probability(depth);
        let p_child = self.split_probability(depth + 1);
        log(p) + 2.0 * log1m(p_child) - log1m(p)
    }
}

// ln(1 − p), kept finite at p = 1.
fn log1m(p: f64) -> f64 {
    log((1.0 - p).max(1e-300))
}

pub fn chipman_split_probability(depth: usize, prior: &ChipmanPrior) -> f64 {
    let p = prior.gamma * pow(1.0 + depth as f64, -prior.delta);
    p.clamp(f64::MIN_POSITIVE, 1.0)
}

/// Ratio of the observed range of feature `var` at `node` to its range over the
/// full training set. `0` for a node holding no rows.
pub fn splitting_prior_ps(
    tree: &DecisionTree,
    ds: &Dataset,
    node: NodeId,
    var: usize,
) -> Result<f64> {
    let meta = ds.meta().get(var).ok_or(Error::DimensionMismatch {
        expected: ds.m(),
        got: var + 1,
    })?;
    let root_range = meta.root_range();
    if root_range <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "feature {var} has zero range"
        )));
    }
    tree.node(node).ok_or(Error::NoSuchNode(node))?;
    Ok(match tree.partition_bounds(ds, node) {
        Some(b) => ((b.max[var] - b.min[var]) / root_range).clamp(0.0, 1.0),
        None => 0.0,
    })
}

/// Why a move cannot be constructed from the current tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum MoveUnavailable {
    #[error("tree already has the maximal number of terminals")]
    MaxTerminals,
    #[error("tree has no splitting node")]
    NoSplits,
    #[error("only one feature; change-split has no alternative variable")]
    SingleFeature,
}

/// A candidate tree together with the move that produced it.
#[derive(Debug, Clone)]
pub struct MoveProposal {
    pub kind: MoveKind,
    /// Terminal split by a birth, split pruned by a death, or split modified by a change.
    pub node: NodeId,
    pub var: Option<usize>,
    pub rule: Option<f64>,
    pub log_r: f64,
    pub tree: DecisionTree,
}

/// Nominal categorical draw of a move kind.
pub fn sample_move_kind<R: Rng + ?Sized>(cfg: &MoveConfig, rng: &mut R) -> MoveKind {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for kind in MoveKind::ALL {
        acc += cfg.probability(kind);
        if u < acc {
            return kind;
        }
    }
    // u landed in the rounding gap above the cumulative sum: last kind with mass.
    MoveKind::ALL
        .into_iter()
        .rev()
        .find(|&k| cfg.probability(k) > 0.0)
        .unwrap_or(MoveKind::Birth)
}

/// Draws a move kind, redrawing deaths while the tree has a single terminal.
pub fn draw_move_kind<R: Rng + ?Sized>(
    cfg: &MoveConfig,
    n_terminals: usize,
    rng: &mut R,
) -> MoveKind {
    if n_terminals <= 1 && cfg.p_death >= 1.0 {
        return MoveKind::Birth;
    }
    loop {
        let kind = sample_move_kind(cfg, rng);
        if !(kind == MoveKind::Death && n_terminals <= 1) {
            return kind;
        }
    }
}

/// Proposal machinery bound to one training set.
#[derive(Debug, Clone)]
pub struct Proposer<'a> {
    ds: &'a Dataset,
    cfg: MoveConfig,
    chipman: ChipmanPrior,
    sigma: Vec<f64>,
    max_terminals: usize,
    log_b_over_d: f64,
}

impl<'a> Proposer<'a> {
    pub fn new(ds: &'a Dataset, cfg: &MoveConfig, chipman: &ChipmanPrior) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            ds,
            sigma: cfg.sigma_for(ds)?,
            max_terminals: cfg.max_terminals_for(ds),
            log_b_over_d: log(cfg.p_birth) - log(cfg.p_death),
            cfg: cfg.clone(),
            chipman: *chipman,
        })
    }

    pub fn config(&self) -> &MoveConfig {
        &self.cfg
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn max_terminals(&self) -> usize {
        self.max_terminals
    }

    pub fn chipman(&self) -> &ChipmanPrior {
        &self.chipman
    }

    pub fn propose<R: Rng + ?Sized>(
        &self,
        kind: MoveKind,
        tree: &DecisionTree,
        rng: &mut R,
    ) -> Result<MoveProposal, MoveUnavailable> {
        match kind {
            MoveKind::Birth => self.propose_birth(tree, rng),
            MoveKind::Death => self.propose_death(tree, rng),
            MoveKind::ChangeSplit => self.propose_change_split(tree, rng),
            MoveKind::ChangeRule => self.propose_change_rule(tree, rng),
        }
    }

    /// Birth ratio for a `k`-terminal tree whose proposed successor has
    /// `prunable_after` prunable splits.
    pub fn birth_log_ratio(&self, k: usize, prunable_after: usize) -> f64 {
        -self.log_b_over_d + log(k as f64) - log(prunable_after as f64)
            + log_catalan(k).expect("k >= 1")
            - log_catalan(k + 1).expect("k >= 1")
    }

    /// Death ratio for a `k`-terminal tree (`k >= 2`) with `prunable` prunable splits.
    pub fn death_log_ratio(&self, k: usize, prunable: usize) -> f64 {
        self.log_b_over_d + log(prunable as f64) - log((k - 1) as f64)
            + log_catalan(k).expect("k >= 1")
            - log_catalan(k - 1).expect("k >= 2")
    }

    fn draw_rule<R: Rng + ?Sized>(&self, var: usize, rng: &mut R) -> f64 {
        let meta = self.ds.feature(var);
        match self.cfg.rule_mode {
            RuleProposalMode::DiscreteObserved => {
                meta.observed_values[rng.random_range(0..meta.observed_values.len())]
            }
            RuleProposalMode::ContinuousRootRange => {
                let u: f64 = rng.random();
                meta.root_min + u * meta.root_range()
            }
        }
    }

    pub fn propose_birth<R: Rng + ?Sized>(
        &self,
        tree: &DecisionTree,
        rng: &mut R,
    ) -> Result<MoveProposal, MoveUnavailable> {
        let k = tree.n_terminals();
        if k >= self.max_terminals {
            return Err(MoveUnavailable::MaxTerminals);
        }
        let terminals = tree.terminals();
        let node = terminals[rng.random_range(0..terminals.len())];
        let var = rng.random_range(0..self.ds.m());
        let rule = self.draw_rule(var, rng);
        let mut proposed = tree.clone();
        proposed
            .split_terminal(self.ds, node, var, rule)
            .expect("terminal chosen from the tree");
        let log_r = self.birth_log_ratio(k, proposed.prunable_count())
            + self.chipman.birth_log_ratio(tree.depth(node));
        Ok(MoveProposal {
            kind: MoveKind::Birth,
            node,
            var: Some(var),
            rule: Some(rule),
            log_r,
            tree: proposed,
        })
    }

    pub fn propose_death<R: Rng + ?Sized>(
        &self,
        tree: &DecisionTree,
        rng: &mut R,
    ) -> Result<MoveProposal, MoveUnavailable> {
        let k = tree.n_terminals();
        if k < 2 {
            return Err(MoveUnavailable::NoSplits);
        }
        let prunable = tree.prunable();
        let node = prunable[rng.random_range(0..prunable.len())];
        let mut proposed = tree.clone();
        proposed
            .prune_split(node)
            .expect("prunable node chosen from the tree");
        let log_r = self.death_log_ratio(k, prunable.len())
            - self.chipman.birth_log_ratio(tree.depth(node));
        Ok(MoveProposal {
            kind: MoveKind::Death,
            node,
            var: None,
            rule: None,
            log_r,
            tree: proposed,
        })
    }

    /// Ratio used when a change move collapses into a death (sweeping strategy).
    pub fn collapse_log_ratio(&self, tree: &DecisionTree, collapsed_depth: usize) -> f64 {
        self.death_log_ratio(tree.n_terminals(), tree.prunable_count())
            - self.chipman.birth_log_ratio(collapsed_depth)
    }

    fn pick_split<R: Rng + ?Sized>(
        &self,
        tree: &DecisionTree,
        rng: &mut R,
    ) -> Result<(NodeId, usize, f64), MoveUnavailable> {
        let splits = tree.splits();
        if splits.is_empty() {
            return Err(MoveUnavailable::NoSplits);
        }
        let node = splits[rng.random_range(0..splits.len())];
        match tree.node(node).expect("live split").kind() {
            NodeKind::Split { var, rule, .. } => Ok((node, *var, *rule)),
            NodeKind::Terminal { .. } => unreachable!("splits() returns splitting nodes"),
        }
    }

    pub fn propose_change_split<R: Rng + ?Sized>(
        &self,
        tree: &DecisionTree,
        rng: &mut R,
    ) -> Result<MoveProposal, MoveUnavailable> {
        if tree.n_terminals() >= 2 && self.ds.m() < 2 {
            return Err(MoveUnavailable::SingleFeature);
        }
        let (node, current, _) = self.pick_split(tree, rng)?;
        // Uniform over the m − 1 other features.
        let mut var = rng.random_range(0..self.ds.m() - 1);
        if var >= current {
            var += 1;
        }
        let rule = self.draw_rule(var, rng);
        let mut proposed = tree.clone();
        proposed
            .set_split(self.ds, node, var, rule)
            .expect("split chosen from the tree");
        Ok(MoveProposal {
            kind: MoveKind::ChangeSplit,
            node,
            var: Some(var),
            rule: Some(rule),
            log_r: 0.0,
            tree: proposed,
        })
    }

    pub fn propose_change_rule<R: Rng + ?Sized>(
        &self,
        tree: &DecisionTree,
        rng: &mut R,
    ) -> Result<MoveProposal, MoveUnavailable> {
        let (node, var, current) = self.pick_split(tree, rng)?;
        let rule = match self.cfg.rule_mode {
            RuleProposalMode::DiscreteObserved => self.draw_rule(var, rng),
            RuleProposalMode::ContinuousRootRange => {
                let z: f64 = StandardNormal.sample(rng);
                current + self.sigma[var] * z
            }
        };
        let mut proposed = tree.clone();
        proposed
            .set_split(self.ds, node, var, rule)
            .expect("split chosen from the tree");
        Ok(MoveProposal {
            kind: MoveKind::ChangeRule,
            node,
            var: Some(var),
            rule: Some(rule),
            log_r: 0.0,
            tree: proposed,
        })
    }
}
