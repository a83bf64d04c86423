//! The reversible-jump chain.
//!
//! Each iteration draws a move, builds the candidate tree and applies the strategy's
//! `p_min` handling before the Metropolis-Hastings test:
//!
//! * [`Strategy::Standard`]: a candidate with any terminal below `p_min` is
//!   unavailable.
//! * [`Strategy::Sweeping`]: count the starved terminals of the candidate. None: the
//!   move proceeds. Exactly one: the starved terminal and its parent split are
//!   removed; a birth is then redrawn, while a change move proceeds as the resulting
//!   death-like transition with the death ratio. Two or more: redrawn.
//!
//! What happens to an unavailable or redrawn move is set by [`UnavailablePolicy`].
//! With `Resample` a fresh move kind and proposal are drawn until one reaches the MH
//! test (capped at `max_redraws`, after which the iteration counts as a rejection).
//! With `Reject` the iteration ends as a rejection, which keeps the chain an exact
//! MH sampler of the posterior restricted to admissible trees; resampling instead
//! reweights each tree by the probability that a move drawn from it is available.

use alloc::vec::Vec;

use libm::log;
use rand::Rng;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::likelihood::{log_marginal_likelihood, DirichletPrior};
use crate::proposals::{
    draw_move_kind, sample_move_kind, ChipmanPrior, MoveConfig, MoveKind, MoveProposal, Proposer,
    RuleProposalMode,
};
use crate::rng;
use crate::tree::{DecisionTree, FrozenTree};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    Standard,
    Sweeping,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Standard => "standard",
            Strategy::Sweeping => "sweeping",
        }
    }

    /// Short table label: BDT1 for standard, BDT2 for sweeping.
    pub fn label(self) -> &'static str {
        match self {
            Strategy::Standard => "BDT1",
            Strategy::Sweeping => "BDT2",
        }
    }

    pub fn default_rule_mode(self) -> RuleProposalMode {
        match self {
            Strategy::Standard => RuleProposalMode::DiscreteObserved,
            Strategy::Sweeping => RuleProposalMode::ContinuousRootRange,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnavailablePolicy {
    Resample,
    Reject,
}

impl UnavailablePolicy {
    pub fn as_str(self) -> &'static str {
        match self {
            UnavailablePolicy::Resample => "resample",
            UnavailablePolicy::Reject => "reject",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    BurnIn,
    Post,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::BurnIn => "burn_in",
            Phase::Post => "post",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    pub moves: MoveConfig,
    pub strategy: Strategy,
    pub burn_in: usize,
    pub post_burn_in: usize,
    /// Keep every `thin`-th post-burn-in state.
    pub thin: usize,
    pub seed: u64,
    /// A single value is applied to every class.
    pub dirichlet: DirichletPrior,
    pub chipman: ChipmanPrior,
    pub unavailable: UnavailablePolicy,
    pub max_redraws: usize,
}

impl SamplerConfig {
    /// Defaults: moves 0.1/0.1/0.1/0.7, 50 000 burn-in, 10 000 post-burn-in,
    /// thinning 7, uniform Dirichlet prior, rule mode chosen by the strategy.
    pub fn new(strategy: Strategy, p_min: usize) -> Self {
        Self {
            moves: MoveConfig::default_mix(p_min, strategy.default_rule_mode()),
            strategy,
            burn_in: 50_000,
            post_burn_in: 10_000,
            thin: 7,
            seed: 1,
            dirichlet: DirichletPrior::uniform(1),
            chipman: ChipmanPrior::disabled(),
            unavailable: UnavailablePolicy::Resample,
            max_redraws: 1000,
        }
    }

    pub fn with_schedule(mut self, burn_in: usize, post_burn_in: usize, thin: usize) -> Self {
        self.burn_in = burn_in;
        self.post_burn_in = post_burn_in;
        self.thin = thin;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self, ds: &Dataset) -> Result<()> {
        self.moves.validate()?;
        if self.thin < 1 || self.post_burn_in < 1 {
            return Err(Error::InvalidConfig(
                "post_burn_in and thin must be >= 1".into(),
            ));
        }
        if self.moves.p_min >= ds.n() {
            return Err(Error::InvalidConfig(alloc::format!(
                "p_min = {} must be below the number of training rows {}",
                self.moves.p_min,
                ds.n()
            )));
        }
        if self.moves.p_birth <= 0.0 {
            return Err(Error::InvalidConfig(
                "zero-probability move set: birth probability is 0".into(),
            ));
        }
        if self.max_redraws < 1 {
            return Err(Error::InvalidConfig("max_redraws must be >= 1".into()));
        }
        self.prior_for(ds).map(|_| ())
    }

    pub fn prior_for(&self, ds: &Dataset) -> Result<DirichletPrior> {
        match self.dirichlet.alpha() {
            [a] => DirichletPrior::symmetric(ds.n_classes(), *a),
            alpha if alpha.len() == ds.n_classes() => Ok(self.dirichlet.clone()),
            alpha => Err(Error::InvalidConfig(alloc::format!(
                "{} Dirichlet parameters for {} classes",
                alpha.len(),
                ds.n_classes()
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub iteration: usize,
    pub phase: Phase,
    /// Log marginal likelihood of the chain state after this iteration.
    pub log_lik: f64,
    /// Terminals in the chain state after this iteration.
    pub k: usize,
    /// Kind of the move that reached the MH test (or the last one drawn).
    pub kind: MoveKind,
    pub accepted: bool,
    /// Moves discarded and redrawn before this one.
    pub redraws: u32,
    /// A change move collapsed into a death by sweeping.
    pub swept: bool,
    /// Rejected without an MH test because the move was unavailable (reject policy).
    pub unavailable: bool,
    /// Redraw cap hit; counted as a rejection.
    pub forced: bool,
}

impl TraceRecord {
    pub fn special(&self) -> &'static str {
        match (self.forced, self.unavailable, self.swept, self.redraws > 0) {
            (true, ..) => "forced",
            (_, true, ..) => "unavailable",
            (_, _, true, true) => "swept+resampled",
            (_, _, true, false) => "swept",
            (_, _, false, true) => "resampled",
            _ => "none",
        }
    }

    /// Move kind as realized: a swept change is a death-like transition.
    pub fn realized_kind(&self) -> MoveKind {
        if self.swept {
            MoveKind::Death
        } else {
            self.kind
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainSample {
    pub tree: FrozenTree,
    pub log_lik: f64,
    pub iteration: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcceptanceRates {
    pub burn_in: f64,
    pub post: f64,
}

#[derive(Debug, Clone)]
pub struct ChainOutput {
    pub samples: Vec<ChainSample>,
    pub trace: Vec<TraceRecord>,
    pub acceptance: AcceptanceRates,
}

impl ChainOutput {
    /// Mean number of splitting nodes over the retained samples.
    pub fn mean_splits(&self) -> f64 {
        mean(self.samples.iter().map(|s| s.tree.n_splits() as f64))
    }

    /// Mean number of nodes (splits plus terminals) over the retained samples.
    pub fn mean_total_nodes(&self) -> f64 {
        mean(self.samples.iter().map(|s| s.tree.nodes().len() as f64))
    }

    /// Realized frequencies of completed birth, death and change moves over the
    /// iterations that reached an MH test.
    pub fn realized_move_frequencies(&self) -> [f64; 3] {
        let mut counts = [0usize; 3];
        for r in self.trace.iter().filter(|r| !r.forced && !r.unavailable) {
            let slot = match r.realized_kind() {
                MoveKind::Birth => 0,
                MoveKind::Death => 1,
                MoveKind::ChangeSplit | MoveKind::ChangeRule => 2,
            };
            counts[slot] += 1;
        }
        let total = counts.iter().sum::<usize>().max(1) as f64;
        counts.map(|c| c as f64 / total)
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// View of the chain handed to a [`run_chain_with`] observer after every iteration.
#[derive(Debug, Clone, Copy)]
pub struct ChainState<'a> {
    pub iteration: usize,
    pub phase: Phase,
    pub tree: &'a DecisionTree,
    pub log_lik: f64,
    pub prior: &'a DirichletPrior,
}

pub fn initial_tree(ds: &Dataset) -> DecisionTree {
    DecisionTree::single_terminal(ds)
}

/// Outcome of the standard strategy's `p_min` check.
#[derive(Debug, Clone)]
pub enum StandardOutcome {
    Eligible(MoveProposal),
    Unavailable,
}

pub fn handle_standard(proposal: MoveProposal, p_min: usize) -> StandardOutcome {
    if proposal.tree.min_partition_count() < p_min {
        StandardOutcome::Unavailable
    } else {
        StandardOutcome::Eligible(proposal)
    }
}

/// Outcome of the sweeping strategy's three-case handling.
#[derive(Debug, Clone)]
pub enum SweepOutcome {
    /// No starved terminal; the proposal is unchanged.
    Eligible(MoveProposal),
    /// A change move starved exactly one terminal, which was removed together with
    /// its parent split. The proposal now holds the reduced tree and the death ratio.
    Swept(MoveProposal),
    Resample,
}

pub fn handle_sweeping(
    proposer: &Proposer<'_>,
    current: &DecisionTree,
    mut proposal: MoveProposal,
    ds: &Dataset,
) -> SweepOutcome {
    let p_min = proposer.config().p_min;
    let starved = proposal.tree.starved_terminals(p_min);
    match starved.len() {
        0 => SweepOutcome::Eligible(proposal),
        1 if proposal.kind.is_change() => {
            let terminal = starved[0];
            let parent = proposal
                .tree
                .node(terminal)
                .and_then(|n| n.parent())
                .expect("starved terminal has a parent");
            let depth = proposal.tree.depth(parent);
            proposal
                .tree
                .collapse_terminal(ds, terminal)
                .expect("starved terminal is collapsible");
            if proposal.tree.min_partition_count() < p_min {
                return SweepOutcome::Resample;
            }
            proposal.log_r = proposer.collapse_log_ratio(current, depth);
            SweepOutcome::Swept(proposal)
        }
        _ => SweepOutcome::Resample,
    }
}

enum Attempt {
    Candidate { proposal: MoveProposal, swept: bool },
    Unavailable,
}

pub fn run_chain(ds: &Dataset, cfg: &SamplerConfig) -> Result<ChainOutput> {
    run_chain_with(ds, cfg, |_| {})
}

/// [`run_chain`] with a callback invoked after every iteration.
pub fn run_chain_with<F>(ds: &Dataset, cfg: &SamplerConfig, mut observer: F) -> Result<ChainOutput>
where
    F: FnMut(&ChainState<'_>),
{
    cfg.validate(ds)?;
    let prior = cfg.prior_for(ds)?;
    let proposer = Proposer::new(ds, &cfg.moves, &cfg.chipman)?;
    let mut rng = rng::seeded(cfg.seed);
    let mut tree = initial_tree(ds);
    let mut log_lik = log_marginal_likelihood(&tree, &prior);

    let total = cfg.burn_in + cfg.post_burn_in;
    let mut trace = Vec::with_capacity(total);
    let mut samples = Vec::with_capacity(cfg.post_burn_in / cfg.thin);
    let mut accepted_in = [0usize; 2];

    for iteration in 0..total {
        let phase = if iteration < cfg.burn_in {
            Phase::BurnIn
        } else {
            Phase::Post
        };
        let mut record = TraceRecord {
            iteration,
            phase,
            log_lik,
            k: tree.n_terminals(),
            kind: MoveKind::Birth,
            accepted: false,
            redraws: 0,
            swept: false,
            unavailable: false,
            forced: false,
        };
        loop {
            let kind = match cfg.unavailable {
                UnavailablePolicy::Resample => {
                    draw_move_kind(&cfg.moves, tree.n_terminals(), &mut rng)
                }
                UnavailablePolicy::Reject => sample_move_kind(&cfg.moves, &mut rng),
            };
            record.kind = kind;
            match attempt(&proposer, cfg.strategy, &tree, kind, ds, &mut rng) {
                Attempt::Candidate { proposal, swept } => {
                    record.swept = swept;
                    let candidate_ll = log_marginal_likelihood(&proposal.tree, &prior);
                    let log_alpha = candidate_ll - log_lik + proposal.log_r;
                    let u: f64 = rng.random();
                    if log_alpha >= 0.0 || log(u) < log_alpha {
                        tree = proposal.tree;
                        log_lik = candidate_ll;
                        record.accepted = true;
                    }
                    break;
                }
                Attempt::Unavailable => match cfg.unavailable {
                    UnavailablePolicy::Reject => {
                        record.unavailable = true;
                        break;
                    }
                    UnavailablePolicy::Resample => {
                        record.redraws += 1;
                        if record.redraws as usize >= cfg.max_redraws {
                            record.forced = true;
                            break;
                        }
                    }
                },
            }
        }
        record.log_lik = log_lik;
        record.k = tree.n_terminals();
        if record.accepted {
            accepted_in[(phase == Phase::Post) as usize] += 1;
        }
        trace.push(record);

        if phase == Phase::Post && (iteration - cfg.burn_in + 1).is_multiple_of(cfg.thin) {
            samples.push(ChainSample {
                tree: tree.freeze(),
                log_lik,
                iteration,
            });
        }
        observer(&ChainState {
            iteration,
            phase,
            tree: &tree,
            log_lik,
            prior: &prior,
        });
    }

    let rate = |accepted: usize, n: usize| {
        if n == 0 {
            0.0
        } else {
            accepted as f64 / n as f64
        }
    };
    Ok(ChainOutput {
        samples,
        trace,
        acceptance: AcceptanceRates {
            burn_in: rate(accepted_in[0], cfg.burn_in),
            post: rate(accepted_in[1], cfg.post_burn_in),
        },
    })
}

fn attempt<R: Rng + ?Sized>(
    proposer: &Proposer<'_>,
    strategy: Strategy,
    tree: &DecisionTree,
    kind: MoveKind,
    ds: &Dataset,
    rng: &mut R,
) -> Attempt {
    let Ok(proposal) = proposer.propose(kind, tree, rng) else {
        return Attempt::Unavailable;
    };
    match strategy {
        Strategy::Standard => match handle_standard(proposal, proposer.config().p_min) {
            StandardOutcome::Eligible(proposal) => Attempt::Candidate {
                proposal,
                swept: false,
            },
            StandardOutcome::Unavailable => Attempt::Unavailable,
        },
        Strategy::Sweeping => match handle_sweeping(proposer, tree, proposal, ds) {
            SweepOutcome::Eligible(proposal) => Attempt::Candidate {
                proposal,
                swept: false,
            },
            SweepOutcome::Swept(proposal) => Attempt::Candidate {
                proposal,
                swept: true,
            },
            SweepOutcome::Resample => Attempt::Unavailable,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::generate_xor3;
    use crate::proposals::MoveProposal;

    fn quick(strategy: Strategy) -> SamplerConfig {
        SamplerConfig::new(strategy, 5)
            .with_schedule(300, 200, 2)
            .with_seed(42)
    }

    #[test]
    fn minimal_schedule_keeps_one_sample() {
        let ds = generate_xor3(100, 1).unwrap();
        let out = run_chain(&ds, &quick(Strategy::Standard).with_schedule(0, 1, 1)).unwrap();
        assert_eq!(out.samples.len(), 1);
        assert_eq!(out.trace.len(), 1);
    }

    #[test]
    fn thinning_arithmetic() {
        let ds = generate_xor3(100, 1).unwrap();
        let out = run_chain(&ds, &quick(Strategy::Sweeping).with_schedule(10, 100, 7)).unwrap();
        assert_eq!(out.samples.len(), 100 / 7);
        assert_eq!(out.trace.len(), 110);
    }

    #[test]
    fn same_seed_same_trace() {
        let ds = generate_xor3(200, 3).unwrap();
        for strategy in [Strategy::Standard, Strategy::Sweeping] {
            let a = run_chain(&ds, &quick(strategy)).unwrap();
            let b = run_chain(&ds, &quick(strategy)).unwrap();
            assert_eq!(a.trace, b.trace);
            assert_eq!(a.samples, b.samples);
        }
    }

    #[test]
    fn initial_tree_matches_single_terminal_likelihood() {
        let ds = generate_xor3(1000, 1).unwrap();
        let tree = initial_tree(&ds);
        assert_eq!(tree.n_terminals(), 1);
        assert_eq!(tree.node(0).unwrap().n_points(), 1000);
        assert_eq!(tree.stats().prunable, 0);
        let prior = DirichletPrior::uniform(2);
        let direct = crate::likelihood::log_terminal_likelihood(&ds.class_totals(), &prior);
        assert_eq!(log_marginal_likelihood(&tree, &prior), direct);
    }

    #[test]
    fn rejects_bad_configs() {
        let ds = generate_xor3(20, 1).unwrap();
        let mut cfg = quick(Strategy::Standard);
        cfg.moves.p_min = 20;
        assert!(run_chain(&ds, &cfg).is_err());
        let mut cfg = quick(Strategy::Standard);
        cfg.moves = cfg.moves.with_probabilities([0.0, 0.3, 0.0, 0.7]);
        assert!(run_chain(&ds, &cfg).is_err());
        let mut cfg = quick(Strategy::Standard);
        cfg.thin = 0;
        assert!(run_chain(&ds, &cfg).is_err());
    }

    #[test]
    fn chain_log_lik_and_bookkeeping_stay_consistent() {
        let ds = generate_xor3(300, 9).unwrap();
        for strategy in [Strategy::Standard, Strategy::Sweeping] {
            let mut checked = 0;
            run_chain_with(&ds, &quick(strategy), |state| {
                if state.iteration % 10 == 0 {
                    let fresh = log_marginal_likelihood(state.tree, state.prior);
                    assert!((fresh - state.log_lik).abs() < 1e-9);
                    state.tree.check_consistency(&ds).unwrap();
                    assert!(state.tree.min_partition_count() >= 5);
                    checked += 1;
                }
            })
            .unwrap();
            assert_eq!(checked, 50);
        }
    }

    fn proposal_from(tree: DecisionTree, kind: MoveKind) -> MoveProposal {
        MoveProposal {
            kind,
            node: 0,
            var: None,
            rule: None,
            log_r: 0.0,
            tree,
        }
    }

    #[test]
    fn standard_marks_starved_births_unavailable() {
        let ds = generate_xor3(100, 2).unwrap();
        let mut tree = initial_tree(&ds);
        let smallest = ds.feature(0).observed_values[0];
        tree.split_terminal(&ds, 0, 0, smallest).unwrap();
        assert!(matches!(
            handle_standard(proposal_from(tree, MoveKind::Birth), 3),
            StandardOutcome::Unavailable
        ));
    }

    #[test]
    fn standard_never_blocks_deaths() {
        let ds = generate_xor3(100, 2).unwrap();
        let mut tree = initial_tree(&ds);
        tree.split_terminal(&ds, 0, 0, 0.0).unwrap();
        tree.prune_split(0).unwrap();
        assert!(matches!(
            handle_standard(proposal_from(tree, MoveKind::Death), 3),
            StandardOutcome::Eligible(_)
        ));
    }

    #[test]
    fn sweeping_cases() {
        let ds = generate_xor3(200, 4).unwrap();
        let cfg = MoveConfig::default_mix(5, RuleProposalMode::ContinuousRootRange);
        let proposer = Proposer::new(&ds, &cfg, &ChipmanPrior::disabled()).unwrap();
        let mut current = initial_tree(&ds);
        let (_, r) = current.split_terminal(&ds, 0, 0, 0.0).unwrap();
        current.split_terminal(&ds, r, 1, 0.0).unwrap();

        // Case 1: nothing starved, identical to standard handling.
        let ok = proposal_from(current.clone(), MoveKind::ChangeRule);
        assert!(matches!(
            handle_sweeping(&proposer, &current, ok, &ds),
            SweepOutcome::Eligible(_)
        ));

        // Birth starving one child is resampled.
        let mut birth = current.clone();
        let l = birth.terminals()[0];
        birth.split_terminal(&ds, l, 0, -10.0).unwrap();
        assert!(matches!(
            handle_sweeping(
                &proposer,
                &current,
                proposal_from(birth, MoveKind::Birth),
                &ds
            ),
            SweepOutcome::Resample
        ));

        // A change moving the root rule to the far right starves exactly one leaf.
        let mut changed = current.clone();
        changed.set_split(&ds, 0, 0, 10.0).unwrap();
        assert_eq!(changed.starved_terminals(5).len(), 2);
        assert!(matches!(
            handle_sweeping(
                &proposer,
                &current,
                proposal_from(changed, MoveKind::ChangeSplit),
                &ds
            ),
            SweepOutcome::Resample
        ));

        let mut changed = current.clone();
        changed.set_split(&ds, r, 1, 10.0).unwrap();
        assert_eq!(changed.starved_terminals(5).len(), 1);
        match handle_sweeping(
            &proposer,
            &current,
            proposal_from(changed, MoveKind::ChangeRule),
            &ds,
        ) {
            SweepOutcome::Swept(p) => {
                assert_eq!(p.tree.n_terminals(), 2);
                p.tree.check_consistency(&ds).unwrap();
                let expected = proposer.death_log_ratio(3, current.prunable_count());
                assert!((p.log_r - expected).abs() < 1e-12);
            }
            other => panic!("expected a sweep, got {other:?}"),
        }
    }
}
