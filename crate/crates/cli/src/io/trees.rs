//! Line-delimited tree records.
//!
//! A chain file is a sequence of trees. Each tree starts with a header line
//!
//! ```text
//! tree <index> <iteration> <log_lik> <n_classes>
//! ```
//!
//! followed by one line per node in preorder:
//!
//! ```text
//! <id> S <parent|-> <var> <rule>
//! <id> T <parent|-> <count>,<count>,...
//! ```
//!
//! The left child of a split is the next record; the right child is the other
//! record naming it as parent. Floats use the shortest exact decimal form.

use std::fmt::Write as _;
use std::path::Path;

use bdt_core::tree::{FrozenKind, FrozenNode, FrozenTree};
use bdt_core::ChainSample;

use crate::error::{CliError, Result};

pub fn format_tree(tree: &FrozenTree, out: &mut String) {
    for (id, node) in tree.nodes().iter().enumerate() {
        let parent = node
            .parent
            .map_or_else(|| "-".to_string(), |p| p.to_string());
        match &node.kind {
            FrozenKind::Split { var, rule, .. } => {
                let _ = writeln!(out, "{id} S {parent} {var} {rule}");
            }
            FrozenKind::Terminal { counts } => {
                let counts: Vec<String> = counts.iter().map(u32::to_string).collect();
                let _ = writeln!(out, "{id} T {parent} {}", counts.join(","));
            }
        }
    }
}

pub fn format_samples(samples: &[ChainSample]) -> String {
    let mut out = String::new();
    for (index, s) in samples.iter().enumerate() {
        let _ = writeln!(
            out,
            "tree {index} {} {} {}",
            s.iteration,
            s.log_lik,
            s.tree.n_classes()
        );
        format_tree(&s.tree, &mut out);
    }
    out
}

pub fn write_samples(samples: &[ChainSample], path: &Path) -> Result<()> {
    std::fs::write(path, format_samples(samples)).map_err(|e| CliError::io(path, e))
}

struct Record {
    parent: Option<usize>,
    body: Body,
}

enum Body {
    Split { var: usize, rule: f64 },
    Terminal { counts: Vec<u32> },
}

fn parse_node(line: &str, expected_id: usize, n_classes: usize) -> Result<Record, String> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    let bad = || format!("malformed node record {line:?}");
    if fields.len() != 4 && fields.len() != 5 {
        return Err(bad());
    }
    let id: usize = fields[0].parse().map_err(|_| bad())?;
    if id != expected_id {
        return Err(format!("expected node {expected_id}, found {id}"));
    }
    let parent = match fields[2] {
        "-" => None,
        p => Some(p.parse().map_err(|_| bad())?),
    };
    let body = match (fields[1], fields.len()) {
        ("S", 5) => Body::Split {
            var: fields[3].parse().map_err(|_| bad())?,
            rule: fields[4].parse().map_err(|_| bad())?,
        },
        ("T", 4) => {
            let counts = fields[3]
                .split(',')
                .map(str::parse)
                .collect::<Result<Vec<u32>, _>>()
                .map_err(|_| bad())?;
            if counts.len() != n_classes {
                return Err(format!(
                    "terminal {id} has {} counts for {n_classes} classes",
                    counts.len()
                ));
            }
            Body::Terminal { counts }
        }
        _ => return Err(bad()),
    };
    Ok(Record { parent, body })
}

fn assemble(records: Vec<Record>, n_classes: usize) -> Result<FrozenTree, String> {
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); records.len()];
    for (id, r) in records.iter().enumerate() {
        if let Some(p) = r.parent {
            if p >= id {
                return Err(format!(
                    "node {id} names parent {p}, which does not precede it"
                ));
            }
            children[p].push(id);
        }
    }
    let nodes = records
        .into_iter()
        .enumerate()
        .map(|(id, r)| {
            let kind = match r.body {
                Body::Split { var, rule } => match children[id].as_slice() {
                    &[left, right] => FrozenKind::Split {
                        var,
                        rule,
                        left,
                        right,
                    },
                    other => return Err(format!("split {id} has {} children", other.len())),
                },
                Body::Terminal { counts } => {
                    if !children[id].is_empty() {
                        return Err(format!("terminal {id} has children"));
                    }
                    FrozenKind::Terminal { counts }
                }
            };
            Ok(FrozenNode {
                parent: r.parent,
                kind,
            })
        })
        .collect::<Result<Vec<_>, String>>()?;
    FrozenTree::from_nodes(nodes, n_classes).map_err(|e| e.to_string())
}

/// Parses node records (no header) of a single tree.
pub fn parse_tree(text: &str, n_classes: usize) -> Result<FrozenTree, String> {
    let records = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, line)| parse_node(line, i, n_classes))
        .collect::<Result<Vec<_>, _>>()?;
    assemble(records, n_classes)
}

pub fn parse_samples(text: &str) -> Result<Vec<ChainSample>, String> {
    let mut samples = Vec::new();
    let mut lines = text.lines().filter(|l| !l.trim().is_empty()).peekable();
    while let Some(header) = lines.next() {
        let fields: Vec<&str> = header.split_whitespace().collect();
        let bad = || format!("malformed tree header {header:?}");
        if fields.len() != 5 || fields[0] != "tree" {
            return Err(bad());
        }
        let iteration: usize = fields[2].parse().map_err(|_| bad())?;
        let log_lik: f64 = fields[3].parse().map_err(|_| bad())?;
        let n_classes: usize = fields[4].parse().map_err(|_| bad())?;
        let mut records = Vec::new();
        while let Some(line) = lines.next_if(|l| !l.starts_with("tree")) {
            records.push(parse_node(line, records.len(), n_classes)?);
        }
        samples.push(ChainSample {
            tree: assemble(records, n_classes)?,
            log_lik,
            iteration,
        });
    }
    Ok(samples)
}

pub fn read_samples(path: &Path) -> Result<Vec<ChainSample>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_samples(&text).map_err(|m| CliError::data(path, m))
}
