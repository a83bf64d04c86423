//! Feature matrix, class labels and fold assignment.
//!
//! Class labels are stored 1-based (`1..=C`). Categorical features are carried as
//! ordinal codes and split with the same threshold rule as continuous ones; the
//! original level names are kept in [`FeatureKind::Categorical`].

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq)]
pub enum FeatureKind {
    Continuous,
    /// Ordinal codes `0..levels.len()` map to these level names.
    Categorical {
        levels: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMeta {
    pub index: usize,
    pub name: String,
    pub kind: FeatureKind,
    /// Sorted distinct values seen in the data; these are the candidate split rules.
    pub observed_values: Vec<f64>,
    pub root_min: f64,
    pub root_max: f64,
}

impl FeatureMeta {
    /// Number of candidate splitting rules for this feature.
    pub fn rule_count(&self) -> usize {
        self.observed_values.len()
    }

    pub fn root_range(&self) -> f64 {
        self.root_max - self.root_min
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    values: Vec<f64>,
    labels: Vec<u32>,
    meta: Vec<FeatureMeta>,
    n_classes: usize,
    class_names: Vec<String>,
}

impl Dataset {
    /// Builds a dataset from row vectors and 1-based labels.
    ///
    /// Every class in `1..=n_classes` must occur, and at least one feature must take
    /// two distinct values.
    pub fn new(rows: Vec<Vec<f64>>, labels: Vec<u32>, n_classes: usize) -> Result<Self> {
        let n = rows.len();
        if n < 2 {
            return Err(Error::InvalidDataset(format!(
                "need at least 2 rows, got {n}"
            )));
        }
        if labels.len() != n {
            return Err(Error::InvalidDataset(format!(
                "{} labels for {n} rows",
                labels.len()
            )));
        }
        let m = rows[0].len();
        if m == 0 {
            return Err(Error::InvalidDataset("no feature columns".to_string()));
        }
        let mut values = Vec::with_capacity(n * m);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != m {
                return Err(Error::InvalidDataset(format!(
                    "row {i} has {} values, expected {m}",
                    row.len()
                )));
            }
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::InvalidDataset(format!(
                    "non-finite value at row {i}, feature {j}"
                )));
            }
            values.extend_from_slice(row);
        }
        if n_classes < 2 {
            return Err(Error::TooFewClasses);
        }
        let mut seen = vec![false; n_classes];
        for (i, &y) in labels.iter().enumerate() {
            if y == 0 || y as usize > n_classes {
                return Err(Error::InvalidDataset(format!(
                    "label {y} at row {i} outside 1..={n_classes}"
                )));
            }
            seen[y as usize - 1] = true;
        }
        if let Some(c) = seen.iter().position(|s| !s) {
            if seen.iter().filter(|s| **s).count() < 2 {
                return Err(Error::TooFewClasses);
            }
            return Err(Error::InvalidDataset(format!(
                "class {} never occurs",
                c + 1
            )));
        }
        let meta = build_meta(&values, n, m, None);
        if meta.iter().all(|f| f.observed_values.len() < 2) {
            return Err(Error::ConstantDataset);
        }
        Ok(Self {
            values,
            labels,
            meta,
            n_classes,
            class_names: (1..=n_classes).map(|c| c.to_string()).collect(),
        })
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.m() {
            return Err(Error::InvalidDataset(format!(
                "{} feature names for {} features",
                names.len(),
                self.m()
            )));
        }
        for (meta, name) in self.meta.iter_mut().zip(names) {
            meta.name = name;
        }
        Ok(self)
    }

    pub fn with_feature_kinds(mut self, kinds: Vec<FeatureKind>) -> Result<Self> {
        if kinds.len() != self.m() {
            return Err(Error::InvalidDataset(format!(
                "{} feature kinds for {} features",
                kinds.len(),
                self.m()
            )));
        }
        for (meta, kind) in self.meta.iter_mut().zip(kinds) {
            meta.kind = kind;
        }
        Ok(self)
    }

    pub fn with_class_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.n_classes {
            return Err(Error::InvalidDataset(format!(
                "{} class names for {} classes",
                names.len(),
                self.n_classes
            )));
        }
        self.class_names = names;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn m(&self) -> usize {
        self.meta.len()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let m = self.m();
        &self.values[i * m..(i + 1) * m]
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.m() + j]
    }

    /// 1-based class label of row `i`.
    pub fn label(&self, i: usize) -> u32 {
        self.labels[i]
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn meta(&self) -> &[FeatureMeta] {
        &self.meta
    }

    pub fn feature(&self, j: usize) -> &FeatureMeta {
        &self.meta[j]
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    /// Number of rows per class, indexed by `label - 1`.
    pub fn class_totals(&self) -> Vec<u32> {
        let mut totals = vec![0u32; self.n_classes];
        for &y in &self.labels {
            totals[y as usize - 1] += 1;
        }
        totals
    }

    pub fn has_all_classes(&self) -> bool {
        self.class_totals().iter().all(|&c| c > 0)
    }

    /// Rows `indices` as a new dataset with the same classes, names and feature kinds.
    ///
    /// Observed values and root ranges are recomputed from the selected rows, since
    /// they define the candidate rules for a chain trained on the subset. Unlike
    /// [`Dataset::new`], a subset is not required to contain every class.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidDataset("empty subset".to_string()));
        }
        let m = self.m();
        let mut values = Vec::with_capacity(indices.len() * m);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            if i >= self.n() {
                return Err(Error::InvalidDataset(format!("row {i} out of range")));
            }
            values.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        let meta = build_meta(&values, indices.len(), m, Some(&self.meta));
        Ok(Self {
            values,
            labels,
            meta,
            n_classes: self.n_classes,
            class_names: self.class_names.clone(),
        })
    }
}

fn build_meta(
    values: &[f64],
    n: usize,
    m: usize,
    template: Option<&[FeatureMeta]>,
) -> Vec<FeatureMeta> {
    (0..m)
        .map(|j| {
            let mut observed: Vec<f64> = (0..n).map(|i| values[i * m + j]).collect();
            observed.sort_by(f64::total_cmp);
            observed.dedup();
            let (name, kind) = match template {
                Some(t) => (t[j].name.clone(), t[j].kind.clone()),
                None => (format!("x{}", j + 1), FeatureKind::Continuous),
            };
            FeatureMeta {
                index: j,
                name,
                kind,
                root_min: observed[0],
                root_max: observed[observed.len() - 1],
                observed_values: observed,
            }
        })
        .collect()
}

/// XOR3 class rule: class 1 when `x1 * x2 > 0`, class 2 otherwise (including a zero product).
pub fn xor3_label(x1: f64, x2: f64) -> u32 {
    if x1 * x2 > 0.0 {
        1
    } else {
        2
    }
}

/// Synthetic XOR problem: `x1, x2 ~ U(-0.5, 0.5)`, noise feature `x3 ~ N(0, 0.2)`
/// (0.2 is the standard deviation).
pub fn generate_xor3(n: usize, seed: u64) -> Result<Dataset> {
    if n < 2 {
        return Err(Error::InvalidDataset(format!("XOR3 needs n >= 2, got {n}")));
    }
    let mut rng = rng::seeded(seed);
    let noise = Normal::new(0.0, 0.2).expect("valid normal");
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let x1: f64 = rng.random_range(-0.5..0.5);
        let x2: f64 = rng.random_range(-0.5..0.5);
        let x3: f64 = noise.sample(&mut rng);
        labels.push(xor3_label(x1, x2));
        rows.push(vec![x1, x2, x3]);
    }
    // Tiny samples can come out single-class; relabel one row so both classes exist.
    if labels.iter().all(|&y| y == labels[0]) {
        let flip = if labels[0] == 1 { 2 } else { 1 };
        let row = &mut rows[n - 1];
        row[1] = -row[1];
        labels[n - 1] = flip;
    }
    Dataset::new(rows, labels, 2)
}

/// Assignment of rows to cross-validation folds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldSplit {
    pub fold_count: usize,
    pub assignment: Vec<usize>,
    pub seed: u64,
}

impl FoldSplit {
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignment.len())
            .filter(|&i| self.assignment[i] == fold)
            .collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignment.len())
            .filter(|&i| self.assignment[i] != fold)
            .collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.fold_count];
        for &f in &self.assignment {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Random permutation dealt into `k` folds whose sizes differ by at most one.
pub fn make_folds(ds: &Dataset, k: usize, seed: u64) -> Result<FoldSplit> {
    check_fold_count(ds.n(), k)?;
    let mut order: Vec<usize> = (0..ds.n()).collect();
    order.shuffle(&mut rng::seeded(seed));
    let mut assignment = vec![0; ds.n()];
    for (pos, &i) in order.iter().enumerate() {
        assignment[i] = pos % k;
    }
    Ok(FoldSplit {
        fold_count: k,
        assignment,
        seed,
    })
}

/// Like [`make_folds`] but deals each class separately, so every fold receives
/// its share of every class. Fold sizes still differ by at most one.
pub fn make_stratified_folds(ds: &Dataset, k: usize, seed: u64) -> Result<FoldSplit> {
    check_fold_count(ds.n(), k)?;
    let mut rng = rng::seeded(seed);
    let mut assignment = vec![0; ds.n()];
    let mut pos = 0;
    for class in 1..=ds.n_classes() as u32 {
        let mut members: Vec<usize> = (0..ds.n()).filter(|&i| ds.label(i) == class).collect();
        members.shuffle(&mut rng);
        for i in members {
            assignment[i] = pos % k;
            pos += 1;
        }
    }
    Ok(FoldSplit {
        fold_count: k,
        assignment,
        seed,
    })
}

fn check_fold_count(n: usize, k: usize) -> Result<()> {
    if k < 2 || k > n {
        return Err(Error::InvalidConfig(format!(
            "fold count {k} outside 2..={n}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Dataset {
        Dataset::new(
            vec![
                vec![1.0, 5.0],
                vec![2.0, 5.0],
                vec![3.0, 5.0],
                vec![2.0, 5.0],
            ],
            vec![1, 2, 1, 2],
            2,
        )
        .unwrap()
    }

    #[test]
    fn meta_tracks_sorted_distinct_values() {
        let ds = tiny();
        let f = ds.feature(0);
        assert_eq!(f.observed_values, vec![1.0, 2.0, 3.0]);
        assert_eq!((f.root_min, f.root_max), (1.0, 3.0));
        assert_eq!(ds.feature(1).rule_count(), 1);
    }

    #[test]
    fn rejects_single_class() {
        let err = Dataset::new(vec![vec![1.0], vec![2.0]], vec![1, 1], 2).unwrap_err();
        assert_eq!(err, Error::TooFewClasses);
    }

    #[test]
    fn rejects_constant_features() {
        let err = Dataset::new(vec![vec![1.0], vec![1.0]], vec![1, 2], 2).unwrap_err();
        assert_eq!(err, Error::ConstantDataset);
    }

    #[test]
    fn rejects_out_of_range_labels() {
        assert!(Dataset::new(vec![vec![1.0], vec![2.0]], vec![1, 3], 2).is_err());
        assert!(Dataset::new(vec![vec![1.0], vec![2.0]], vec![0, 1], 2).is_err());
    }

    #[test]
    fn xor3_sign_rule() {
        assert_eq!(xor3_label(0.3, 0.2), 1);
        assert_eq!(xor3_label(0.3, -0.2), 2);
        assert_eq!(xor3_label(0.0, 0.2), 2);
    }

    #[test]
    fn xor3_shape_and_bounds() {
        let ds = generate_xor3(1000, 3).unwrap();
        assert_eq!((ds.n(), ds.m(), ds.n_classes()), (1000, 3, 2));
        assert_eq!(ds.feature(0).observed_values.len(), 1000);
        for i in 0..ds.n() {
            assert!(ds.value(i, 0).abs() <= 0.5 && ds.value(i, 1).abs() <= 0.5);
            assert_eq!(ds.label(i), xor3_label(ds.value(i, 0), ds.value(i, 1)));
        }
        assert!(generate_xor3(1, 3).is_err());
        assert_eq!(generate_xor3(2, 0).unwrap().class_totals(), vec![1, 1]);
    }

    #[test]
    fn xor3_class_balance() {
        let ds = generate_xor3(10_000, 11).unwrap();
        let frac = ds.class_totals()[0] as f64 / 10_000.0;
        assert!((0.47..=0.53).contains(&frac), "class-1 fraction {frac}");
    }

    #[test]
    fn folds_even_and_remainder() {
        let ds = generate_xor3(10, 1).unwrap();
        let folds = make_folds(&ds, 5, 9).unwrap();
        assert_eq!(folds.fold_sizes(), vec![2; 5]);

        let ds = generate_xor3(11, 1).unwrap();
        let folds = make_folds(&ds, 5, 9).unwrap();
        let mut sizes = folds.fold_sizes();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![2, 2, 2, 2, 3]);
        assert_eq!(folds, make_folds(&ds, 5, 9).unwrap());
        assert!(make_folds(&ds, 1, 9).is_err());
        assert!(make_folds(&ds, 12, 9).is_err());
    }

    #[test]
    fn stratified_folds_spread_classes() {
        let ds = generate_xor3(50, 4).unwrap();
        let folds = make_stratified_folds(&ds, 5, 1).unwrap();
        let sizes = folds.fold_sizes();
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        for f in 0..5 {
            let test = ds.subset(&folds.test_indices(f)).unwrap();
            assert!(test.has_all_classes());
        }
    }

    #[test]
    fn subset_recomputes_ranges() {
        let ds = tiny();
        let sub = ds.subset(&[0, 1]).unwrap();
        assert_eq!(sub.feature(0).observed_values, vec![1.0, 2.0]);
        assert_eq!(sub.n_classes(), 2);
        assert_eq!(sub.labels(), &[1, 2]);
    }
}
