//! Bayesian model averaging over binary decision trees.
//!
//! The posterior over trees is explored with a reversible-jump Metropolis-Hastings
//! chain (birth, death, change-split and change-rule moves). Two strategies for
//! handling proposals that leave a partition with fewer than `p_min` points are
//! provided: the standard one, which discards and redraws such moves, and the
//! sweeping one, which removes the starved terminal and lets the move proceed as a
//! death where possible.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, CSV ingestion and the
//! command-line front end live in the `bdt` companion crate.
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod averaging;
pub mod dataset;
pub mod diagnostics;
mod error;
pub mod likelihood;
pub mod proposals;
pub mod rng;
pub mod sampler;
pub mod tree;

pub use averaging::{cross_validate, entropy, predict, CvReport, FoldResult, PredictionResult};
pub use dataset::{generate_xor3, make_folds, Dataset, FeatureKind, FeatureMeta, FoldSplit};
pub use diagnostics::{emulate_moves, summarize_trace, EmulatorConfig, MoveFrequencies};
pub use error::{Error, Result};
pub use likelihood::DirichletPrior;
pub use proposals::{ChipmanPrior, MoveConfig, MoveKind, RuleProposalMode, StepSize};
pub use sampler::{
    run_chain, ChainOutput, ChainSample, SamplerConfig, Strategy, UnavailablePolicy,
};
pub use tree::{DecisionTree, FrozenTree, NodeId};
