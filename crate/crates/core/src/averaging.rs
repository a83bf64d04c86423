//! Bayesian model averaging over retained trees, accuracy and summed entropy, and
//! the cross-validation harness built on top of them.

use alloc::vec;
use alloc::vec::Vec;

use libm::{log, sqrt};

use crate::dataset::{make_stratified_folds, Dataset, FoldSplit};
use crate::error::{Error, Result};
use crate::likelihood::{terminal_class_posterior_into, DirichletPrior};
use crate::rng::derive_seed;
use crate::sampler::{run_chain, AcceptanceRates, ChainSample, SamplerConfig, Strategy};
use crate::tree::FrozenKind;

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionResult {
    /// Row-major `t × C` matrix of averaged class posteriors.
    pub posterior: Vec<f64>,
    pub n_classes: usize,
    /// 1-based predicted class per row; ties go to the lowest class id.
    pub predicted: Vec<u32>,
    pub accuracy: f64,
    pub entropy_sum: f64,
}

impl PredictionResult {
    pub fn n_rows(&self) -> usize {
        self.predicted.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.posterior[i * self.n_classes..(i + 1) * self.n_classes]
    }
}

/// Averages the terminal class posteriors reached by every test row over `samples`.
pub fn predict(
    samples: &[ChainSample],
    prior: &DirichletPrior,
    test: &Dataset,
) -> Result<PredictionResult> {
    if samples.is_empty() {
        return Err(Error::EmptyChain);
    }
    let c = test.n_classes();
    if prior.alpha().len() != c {
        return Err(Error::DimensionMismatch {
            expected: c,
            got: prior.alpha().len(),
        });
    }
    for s in samples {
        if s.tree.n_classes() != c {
            return Err(Error::DimensionMismatch {
                expected: c,
                got: s.tree.n_classes(),
            });
        }
        if let Some(var) = max_split_var(s) {
            if var >= test.m() {
                return Err(Error::DimensionMismatch {
                    expected: var + 1,
                    got: test.m(),
                });
            }
        }
    }

    let t = test.n();
    let mut posterior = vec![0.0; t * c];
    let mut scratch = Vec::with_capacity(c);
    for s in samples {
        for i in 0..t {
            terminal_class_posterior_into(s.tree.route(test.row(i)), prior, &mut scratch);
            for (acc, p) in posterior[i * c..(i + 1) * c].iter_mut().zip(&scratch) {
                *acc += p;
            }
        }
    }
    let scale = 1.0 / samples.len() as f64;
    posterior.iter_mut().for_each(|p| *p *= scale);

    let predicted: Vec<u32> = posterior.chunks(c).map(argmax_lowest).collect();
    let correct = predicted
        .iter()
        .zip(test.labels())
        .filter(|(p, y)| p == y)
        .count();
    let entropy_sum = entropy(&posterior)?;
    Ok(PredictionResult {
        posterior,
        n_classes: c,
        predicted,
        accuracy: if t == 0 {
            0.0
        } else {
            correct as f64 / t as f64
        },
        entropy_sum,
    })
}

fn max_split_var(sample: &ChainSample) -> Option<usize> {
    sample
        .tree
        .nodes()
        .iter()
        .filter_map(|n| match n.kind {
            FrozenKind::Split { var, .. } => Some(var),
            FrozenKind::Terminal { .. } => None,
        })
        .max()
}

fn argmax_lowest(row: &[f64]) -> u32 {
    let mut best = 0;
    for (j, &p) in row.iter().enumerate().skip(1) {
        if p > row[best] {
            best = j;
        }
    }
    best as u32 + 1
}

/// `−Σ P ln P` over every entry of a posterior matrix, with `0 · ln 0 = 0`.
pub fn entropy(posterior: &[f64]) -> Result<f64> {
    let mut acc = 0.0;
    for &p in posterior {
        if p.is_nan() || p < 0.0 {
            return Err(Error::InvalidProbabilities(alloc::format!(
                "negative or NaN entry {p}"
            )));
        }
        if p > 0.0 {
            acc -= p * log(p);
        }
    }
    Ok(acc)
}

/// Mean and twice the sample standard deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub two_sigma: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self {
                mean: 0.0,
                two_sigma: 0.0,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        if n == 1 {
            return Self {
                mean,
                two_sigma: 0.0,
            };
        }
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
        Self {
            mean,
            two_sigma: 2.0 * sqrt(var),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldResult {
    pub fold: usize,
    pub seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    pub accuracy: f64,
    pub entropy: f64,
    /// Mean splitting nodes per retained tree.
    pub splits: f64,
    /// Mean total nodes (splits plus terminals) per retained tree.
    pub total_nodes: f64,
    pub acceptance: AcceptanceRates,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvReport {
    pub strategy: Strategy,
    pub folds: Vec<FoldResult>,
    pub accuracy: Summary,
    /// Per-fold entropy.
    pub entropy: Summary,
    /// Entropy summed over every held-out row of every fold.
    pub entropy_total: f64,
    pub splits: Summary,
    pub total_nodes: Summary,
    /// The supplied folds left some training split without a class and were
    /// replaced by stratified folds.
    pub restratified: bool,
}

/// Returns `folds` unchanged when every training split contains every class,
/// otherwise stratified folds with the same count and seed (and `true`).
pub fn ensure_trainable(ds: &Dataset, folds: &FoldSplit) -> Result<(FoldSplit, bool)> {
    let ok = (0..folds.fold_count).all(|f| {
        let mut seen = vec![false; ds.n_classes()];
        for i in folds.train_indices(f) {
            seen[ds.label(i) as usize - 1] = true;
        }
        seen.iter().all(|&s| s)
    });
    if ok {
        return Ok((folds.clone(), false));
    }
    let stratified = make_stratified_folds(ds, folds.fold_count, folds.seed)?;
    Ok((stratified, true))
}

/// Trains one chain on every row outside `fold` and evaluates it on the fold.
/// The chain seed is derived from `cfg.seed` and the fold index.
pub fn run_fold(
    ds: &Dataset,
    folds: &FoldSplit,
    fold: usize,
    cfg: &SamplerConfig,
) -> Result<FoldResult> {
    if fold >= folds.fold_count || folds.assignment.len() != ds.n() {
        return Err(Error::InvalidConfig(alloc::format!(
            "fold {fold} does not belong to this split"
        )));
    }
    let train = ds.subset(&folds.train_indices(fold))?;
    let test = ds.subset(&folds.test_indices(fold))?;
    let mut fold_cfg = cfg.clone();
    fold_cfg.seed = derive_seed(cfg.seed, fold as u64);
    let out = run_chain(&train, &fold_cfg)?;
    let prior = fold_cfg.prior_for(&train)?;
    let pred = predict(&out.samples, &prior, &test)?;
    Ok(FoldResult {
        fold,
        seed: fold_cfg.seed,
        n_train: train.n(),
        n_test: test.n(),
        accuracy: pred.accuracy,
        entropy: pred.entropy_sum,
        splits: out.mean_splits(),
        total_nodes: out.mean_total_nodes(),
        acceptance: out.acceptance,
    })
}

/// Aggregates per-fold results into mean ± 2σ rows.
pub fn summarize_folds(
    strategy: Strategy,
    mut folds: Vec<FoldResult>,
    restratified: bool,
) -> CvReport {
    folds.sort_by_key(|f| f.fold);
    let col = |f: fn(&FoldResult) -> f64| folds.iter().map(f).collect::<Vec<_>>();
    CvReport {
        strategy,
        accuracy: Summary::of(&col(|f| f.accuracy)),
        entropy: Summary::of(&col(|f| f.entropy)),
        entropy_total: folds.iter().map(|f| f.entropy).sum(),
        splits: Summary::of(&col(|f| f.splits)),
        total_nodes: Summary::of(&col(|f| f.total_nodes)),
        restratified,
        folds,
    }
}

/// Sequential cross-validation: one chain per training split.
pub fn cross_validate(ds: &Dataset, folds: &FoldSplit, cfg: &SamplerConfig) -> Result<CvReport> {
    let (folds, restratified) = ensure_trainable(ds, folds)?;
    let results = (0..folds.fold_count)
        .map(|f| run_fold(ds, &folds, f, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize_folds(cfg.strategy, results, restratified))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_xor3, make_folds};
    use crate::tree::DecisionTree;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn sample_of(tree: &DecisionTree) -> ChainSample {
        ChainSample {
            tree: tree.freeze(),
            log_lik: 0.0,
            iteration: 0,
        }
    }

    fn four_point() -> Dataset {
        Dataset::new(
            vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]],
            vec![1, 1, 1, 2],
            2,
        )
        .unwrap()
    }

    #[test]
    fn single_terminal_posterior_matches_counts() {
        let ds = four_point();
        let s = sample_of(&DecisionTree::single_terminal(&ds));
        let r = predict(&[s], &DirichletPrior::uniform(2), &ds).unwrap();
        for i in 0..4 {
            assert!(close(r.row(i)[0], 4.0 / 6.0, 1e-15));
            assert!(close(r.row(i)[1], 2.0 / 6.0, 1e-15));
        }
        assert_eq!(r.predicted, vec![1, 1, 1, 1]);
        assert_eq!(r.accuracy, 0.75);
    }

    #[test]
    fn identical_samples_average_to_one() {
        let ds = generate_xor3(200, 5).unwrap();
        let mut tree = DecisionTree::single_terminal(&ds);
        let (l, r) = tree.split_terminal(&ds, 0, 0, 0.0).unwrap();
        tree.split_terminal(&ds, l, 1, 0.0).unwrap();
        tree.split_terminal(&ds, r, 1, 0.0).unwrap();
        let prior = DirichletPrior::uniform(2);
        let one = predict(&[sample_of(&tree)], &prior, &ds).unwrap();
        let many = predict(&vec![sample_of(&tree); 7], &prior, &ds).unwrap();
        for (a, b) in one.posterior.iter().zip(&many.posterior) {
            assert!(close(*a, *b, 1e-12));
        }
        assert_eq!(one.predicted, many.predicted);
        assert_eq!(one.accuracy, 1.0);
    }

    #[test]
    fn rows_sum_to_one_and_entropy_bounded() {
        let ds = generate_xor3(100, 2).unwrap();
        let mut a = DecisionTree::single_terminal(&ds);
        a.split_terminal(&ds, 0, 2, 0.1).unwrap();
        let b = DecisionTree::single_terminal(&ds);
        let r = predict(
            &[sample_of(&a), sample_of(&b)],
            &DirichletPrior::uniform(2),
            &ds,
        )
        .unwrap();
        for i in 0..r.n_rows() {
            assert!(close(r.row(i).iter().sum::<f64>(), 1.0, 1e-9));
        }
        assert!(r.entropy_sum >= 0.0 && r.entropy_sum <= 100.0 * 2f64.ln());
    }

    #[test]
    fn ties_go_to_lowest_class() {
        assert_eq!(argmax_lowest(&[0.5, 0.5]), 1);
        assert_eq!(argmax_lowest(&[0.2, 0.4, 0.4]), 2);
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(entropy(&[1.0, 0.0]).unwrap(), 0.0);
        assert!(close(
            entropy(&[0.5, 0.5, 0.5, 0.5]).unwrap(),
            2.0 * 2f64.ln(),
            1e-12
        ));
        assert!(entropy(&[1.1, -0.1]).is_err());
    }

    #[test]
    fn predict_errors() {
        let ds = four_point();
        let prior = DirichletPrior::uniform(2);
        assert_eq!(predict(&[], &prior, &ds), Err(Error::EmptyChain));
        let wide = generate_xor3(50, 1).unwrap();
        let mut tree = DecisionTree::single_terminal(&wide);
        tree.split_terminal(&wide, 0, 2, 0.0).unwrap();
        assert!(matches!(
            predict(&[sample_of(&tree)], &prior, &ds),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(predict(
            &[sample_of(&DecisionTree::single_terminal(&ds))],
            &DirichletPrior::uniform(3),
            &ds
        )
        .is_err());
    }

    #[test]
    fn summary_uses_sample_deviation() {
        let s = Summary::of(&[1.0, 2.0, 3.0]);
        assert_eq!(s.mean, 2.0);
        assert!(close(s.two_sigma, 2.0, 1e-12));
        assert_eq!(Summary::of(&[4.0]).two_sigma, 0.0);
    }

    #[test]
    fn cross_validate_bookkeeping() {
        let ds = generate_xor3(120, 3).unwrap();
        let folds = make_folds(&ds, 5, 9).unwrap();
        let cfg = SamplerConfig::new(Strategy::Sweeping, 5)
            .with_schedule(200, 50, 5)
            .with_seed(4);
        let report = cross_validate(&ds, &folds, &cfg).unwrap();
        assert_eq!(report.folds.len(), 5);
        assert!(!report.restratified);
        assert_eq!(report.folds.iter().map(|f| f.n_test).sum::<usize>(), 120);
        let seeds: Vec<u64> = report.folds.iter().map(|f| f.seed).collect();
        assert_eq!(seeds, (0..5).map(|f| derive_seed(4, f)).collect::<Vec<_>>());
        assert!(close(
            report.entropy_total,
            report.folds.iter().map(|f| f.entropy).sum(),
            1e-12
        ));
    }

    #[test]
    fn restratifies_when_a_training_split_misses_a_class() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let labels = vec![1, 1, 1, 1, 1, 1, 1, 1, 2, 2];
        let ds = Dataset::new(rows, labels, 2).unwrap();
        // Both class-2 rows in fold 0.
        let folds = FoldSplit {
            fold_count: 5,
            assignment: vec![1, 1, 2, 2, 3, 3, 4, 4, 0, 0],
            seed: 1,
        };
        let (fixed, changed) = ensure_trainable(&ds, &folds).unwrap();
        assert!(changed);
        assert_ne!(fixed.assignment[8], fixed.assignment[9]);
    }
}
