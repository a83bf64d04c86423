//! Exhaustive posterior over every tree of a one-feature dataset, computed with
//! integer factorials and Catalan numbers and its own routing.

use std::collections::BTreeMap;

use bdt_core::tree::{FrozenKind, FrozenTree};

#[derive(Debug, Clone)]
pub enum Mini {
    Leaf,
    Split(f64, Box<Mini>, Box<Mini>),
}

impl Mini {
    pub fn key(&self) -> String {
        match self {
            Mini::Leaf => "T".to_string(),
            Mini::Split(rule, l, r) => format!("S0@{rule}({},{})", l.key(), r.key()),
        }
    }

    fn leaves(&self) -> usize {
        match self {
            Mini::Leaf => 1,
            Mini::Split(_, l, r) => l.leaves() + r.leaves(),
        }
    }

    /// Row sets of the terminals, left to right.
    fn partition(&self, rows: &[usize], x: &[f64], out: &mut Vec<Vec<usize>>) {
        match self {
            Mini::Leaf => out.push(rows.to_vec()),
            Mini::Split(rule, l, r) => {
                let (a, b): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| x[i] <= *rule);
                l.partition(&a, x, out);
                r.partition(&b, x, out);
            }
        }
    }

    /// Every tree obtained by splitting one leaf at one of `rules`.
    fn births(&self, rules: &[f64]) -> Vec<Mini> {
        match self {
            Mini::Leaf => rules
                .iter()
                .map(|&r| Mini::Split(r, Box::new(Mini::Leaf), Box::new(Mini::Leaf)))
                .collect(),
            Mini::Split(rule, l, r) => {
                let mut out: Vec<Mini> = l
                    .births(rules)
                    .into_iter()
                    .map(|nl| Mini::Split(*rule, Box::new(nl), r.clone()))
                    .collect();
                out.extend(
                    r.births(rules)
                        .into_iter()
                        .map(|nr| Mini::Split(*rule, l.clone(), Box::new(nr))),
                );
                out
            }
        }
    }

    /// Every tree obtained by changing the rule of one split to one of `rules`,
    /// grouped by split (preorder).
    fn rule_changes(&self, rules: &[f64]) -> Vec<Vec<Mini>> {
        match self {
            Mini::Leaf => Vec::new(),
            Mini::Split(rule, l, r) => {
                let mut out = vec![rules
                    .iter()
                    .map(|&nr| Mini::Split(nr, l.clone(), r.clone()))
                    .collect::<Vec<_>>()];
                for group in l.rule_changes(rules) {
                    out.push(
                        group
                            .into_iter()
                            .map(|nl| Mini::Split(*rule, Box::new(nl), r.clone()))
                            .collect(),
                    );
                }
                for group in r.rule_changes(rules) {
                    out.push(
                        group
                            .into_iter()
                            .map(|nr| Mini::Split(*rule, l.clone(), Box::new(nr)))
                            .collect(),
                    );
                }
                out
            }
        }
    }
}

pub fn frozen_key(tree: &FrozenTree) -> String {
    fn go(tree: &FrozenTree, id: usize, out: &mut String) {
        match &tree.nodes()[id].kind {
            FrozenKind::Terminal { .. } => out.push('T'),
            FrozenKind::Split {
                var,
                rule,
                left,
                right,
            } => {
                out.push_str(&format!("S{var}@{rule}("));
                go(tree, *left, out);
                out.push(',');
                go(tree, *right, out);
                out.push(')');
            }
        }
    }
    let mut s = String::new();
    go(tree, 0, &mut s);
    s
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

fn catalan(k: usize) -> f64 {
    // C(2k, k) / (k + 1) with exact integers
    let mut c: u128 = 1;
    for i in 0..k as u128 {
        c = c * (2 * k as u128 - i) / (i + 1);
    }
    (c / (k as u128 + 1)) as f64
}

pub struct Instance {
    pub x: Vec<f64>,
    pub labels: Vec<u32>,
    pub classes: usize,
    pub p_min: usize,
    pub max_terminals: usize,
    /// birth, death, change-split, change-rule
    pub moves: [f64; 4],
}

impl Instance {
    fn rules(&self) -> Vec<f64> {
        let mut r = self.x.clone();
        r.sort_by(f64::total_cmp);
        r.dedup();
        r
    }

    fn valid(&self, t: &Mini) -> bool {
        let mut parts = Vec::new();
        t.partition(&(0..self.x.len()).collect::<Vec<_>>(), &self.x, &mut parts);
        parts.iter().all(|p| p.len() >= self.p_min)
    }

    /// Every admissible tree with at most `max_terminals` terminals.
    pub fn trees(&self) -> Vec<Mini> {
        let rules = self.rules();
        let mut all: BTreeMap<String, Mini> = BTreeMap::new();
        let mut frontier = vec![Mini::Leaf];
        while let Some(t) = frontier.pop() {
            if all.contains_key(&t.key()) {
                continue;
            }
            if t.leaves() < self.max_terminals {
                frontier.extend(t.births(&rules));
            }
            all.insert(t.key(), t);
        }
        all.into_values().filter(|t| self.valid(t)).collect()
    }

    /// Unnormalized posterior: Dirichlet(1, ..., 1) marginal likelihood times the
    /// tree prior `(1 / (N m))^(k-1) / S_k / K` with one feature.
    pub fn weight(&self, t: &Mini) -> f64 {
        let mut parts = Vec::new();
        t.partition(&(0..self.x.len()).collect::<Vec<_>>(), &self.x, &mut parts);
        let mut lik = 1.0;
        for p in &parts {
            let mut counts = vec![0usize; self.classes];
            for &i in p {
                counts[self.labels[i] as usize - 1] += 1;
            }
            // Γ(C) Π m_j! / Γ(n + C)
            lik *= factorial(self.classes - 1)
                * counts.iter().map(|&m| factorial(m)).product::<f64>()
                / factorial(p.len() + self.classes - 1);
        }
        let k = parts.len();
        let n_rules = self.rules().len() as f64;
        lik * (1.0 / n_rules).powi(k as i32 - 1) / catalan(k) / self.max_terminals as f64
    }

    /// Probability that one nominal draw of a move kind and its proposal from `t`
    /// yields an admissible candidate.
    pub fn availability(&self, t: &Mini) -> f64 {
        let rules = self.rules();
        let n = rules.len() as f64;
        let k = t.leaves();
        let [pb, pd, _pcs, pcr] = self.moves;
        let mut a = 0.0;
        if k < self.max_terminals {
            // births enumerate leaves in order, `rules.len()` each
            let ok = t.births(&rules).iter().filter(|b| self.valid(b)).count() as f64;
            a += pb * ok / (k as f64 * n);
        }
        if k >= 2 {
            a += pd;
            let groups = t.rule_changes(&rules);
            let per_split: f64 = groups
                .iter()
                .map(|g| g.iter().filter(|c| self.valid(c)).count() as f64 / n)
                .sum();
            a += pcr * per_split / (k - 1) as f64;
        }
        a
    }

    pub fn distribution(&self, f: impl Fn(&Mini) -> f64) -> BTreeMap<String, f64> {
        let trees = self.trees();
        let total: f64 = trees.iter().map(&f).sum();
        trees.iter().map(|t| (t.key(), f(t) / total)).collect()
    }
}

pub fn total_variation(p: &BTreeMap<String, f64>, q: &BTreeMap<String, f64>) -> f64 {
    let mut keys: Vec<&String> = p.keys().chain(q.keys()).collect();
    keys.sort();
    keys.dedup();
    0.5 * keys
        .iter()
        .map(|k| (p.get(*k).unwrap_or(&0.0) - q.get(*k).unwrap_or(&0.0)).abs())
        .sum::<f64>()
}

pub fn empirical(keys: impl Iterator<Item = String>) -> BTreeMap<String, f64> {
    let mut counts: BTreeMap<String, f64> = BTreeMap::new();
    let mut n = 0.0;
    for k in keys {
        *counts.entry(k).or_default() += 1.0;
        n += 1.0;
    }
    counts.values_mut().for_each(|v| *v /= n);
    counts
}
