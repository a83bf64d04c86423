//! Dataset CSV ingestion and export.
//!
//! The first row is a header. One column holds the class label (the last by
//! default); every other column is a feature. A feature column whose cells all
//! parse as numbers is continuous, otherwise it is categorical and encoded by the
//! rank of each distinct string in sorted order. Labels that all parse as numbers
//! are numbered in ascending numeric order, other labels in order of first
//! appearance. Empty, `NA` and `?` cells are rejected.

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::Write;
use std::path::Path;

use bdt_core::{Dataset, FeatureKind};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum LabelColumn {
    #[default]
    Last,
    Name(String),
}

impl std::str::FromStr for LabelColumn {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(if s == "last" {
            LabelColumn::Last
        } else {
            LabelColumn::Name(s.to_string())
        })
    }
}

const MISSING: [&str; 3] = ["", "NA", "?"];

pub fn load_csv(path: &Path, label: &LabelColumn) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| CliError::data(path, format!("cannot open: {e}")))?;
    read_csv(file, label).map_err(|message| CliError::data(path, message))
}

pub fn read_csv<R: std::io::Read>(reader: R, label: &LabelColumn) -> Result<Dataset, String> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| e.to_string())?
        .iter()
        .map(str::to_string)
        .collect();
    if header.len() < 2 {
        return Err("need a label column and at least one feature column".into());
    }
    let label_idx = match label {
        LabelColumn::Last => header.len() - 1,
        LabelColumn::Name(name) => header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| format!("no column named {name:?}"))?,
    };

    let mut cells: Vec<Vec<String>> = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| e.to_string())?;
        if record.len() != header.len() {
            return Err(format!(
                "row {} has {} cells, header has {}",
                i + 1,
                record.len(),
                header.len()
            ));
        }
        if let Some(j) = record.iter().position(|c| MISSING.contains(&c)) {
            return Err(format!(
                "missing value in row {}, column {:?}",
                i + 1,
                header[j]
            ));
        }
        cells.push(record.iter().map(str::to_string).collect());
    }
    if cells.is_empty() {
        return Err("no data rows".into());
    }

    let feature_cols: Vec<usize> = (0..header.len()).filter(|&j| j != label_idx).collect();
    let mut columns = Vec::with_capacity(feature_cols.len());
    let mut kinds = Vec::with_capacity(feature_cols.len());
    for &j in &feature_cols {
        let (values, kind) = encode_feature(cells.iter().map(|row| row[j].as_str()));
        columns.push(values);
        kinds.push(kind);
    }
    let rows: Vec<Vec<f64>> = (0..cells.len())
        .map(|i| columns.iter().map(|c| c[i]).collect())
        .collect();

    let (labels, class_names) = encode_labels(cells.iter().map(|row| row[label_idx].as_str()));
    let n_classes = class_names.len();
    if n_classes < 2 {
        return Err(bdt_core::Error::TooFewClasses.to_string());
    }
    let names = feature_cols.iter().map(|&j| header[j].clone()).collect();
    Dataset::new(rows, labels, n_classes)
        .and_then(|ds| ds.with_feature_names(names))
        .and_then(|ds| ds.with_feature_kinds(kinds))
        .and_then(|ds| ds.with_class_names(class_names))
        .map_err(|e| e.to_string())
}

fn encode_feature<'a>(cells: impl Iterator<Item = &'a str> + Clone) -> (Vec<f64>, FeatureKind) {
    let numeric: Option<Vec<f64>> = cells
        .clone()
        .map(|c| c.parse::<f64>().ok().filter(|v| v.is_finite()))
        .collect();
    if let Some(values) = numeric {
        return (values, FeatureKind::Continuous);
    }
    let levels: Vec<String> = cells
        .clone()
        .map(str::to_string)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let code: HashMap<&str, usize> = levels
        .iter()
        .enumerate()
        .map(|(i, l)| (l.as_str(), i))
        .collect();
    let values = cells.map(|c| code[c] as f64).collect();
    (values, FeatureKind::Categorical { levels })
}

fn encode_labels<'a>(cells: impl Iterator<Item = &'a str> + Clone) -> (Vec<u32>, Vec<String>) {
    let mut names: Vec<String> = Vec::new();
    for c in cells.clone() {
        if !names.iter().any(|n| n == c) {
            names.push(c.to_string());
        }
    }
    let numeric: Option<Vec<f64>> = names.iter().map(|n| n.parse::<f64>().ok()).collect();
    if let Some(keys) = numeric {
        let mut order: Vec<usize> = (0..names.len()).collect();
        order.sort_by(|&a, &b| keys[a].total_cmp(&keys[b]));
        names = order.into_iter().map(|i| names[i].clone()).collect();
    }
    let id: HashMap<&str, u32> = names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i as u32 + 1))
        .collect();
    let labels = cells.map(|c| id[c]).collect();
    (labels, names)
}

/// Writes features under their names and the label as its 1-based class id in a
/// final `class` column. Values use the shortest exact decimal form.
pub fn write_csv(ds: &Dataset, path: &Path) -> Result<()> {
    let mut out = Vec::new();
    write_csv_to(ds, &mut out).map_err(|e| CliError::io(path, e))?;
    std::fs::write(path, out).map_err(|e| CliError::io(path, e))
}

pub fn write_csv_to<W: Write>(ds: &Dataset, out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = ds.meta().iter().map(|f| f.name.as_str()).collect();
    header.push("class");
    w.write_record(&header)?;
    for i in 0..ds.n() {
        let mut record: Vec<String> = ds.row(i).iter().map(|v| v.to_string()).collect();
        record.push(ds.label(i).to_string());
        w.write_record(&record)?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Dataset, String> {
        read_csv(text.as_bytes(), &LabelColumn::Last)
    }

    #[test]
    fn first_appearance_labels() {
        let ds = parse("x,y\n1,A\n2,B\n3,A\n4,B\n").unwrap();
        assert_eq!(ds.n_classes(), 2);
        assert_eq!(ds.labels(), &[1, 2, 1, 2]);
        assert_eq!(ds.class_names(), &["A".to_string(), "B".to_string()]);
    }

    #[test]
    fn numeric_labels_sorted() {
        let ds = parse("x,y\n1,2\n2,1\n3,2\n").unwrap();
        assert_eq!(ds.labels(), &[2, 1, 2]);
    }

    #[test]
    fn categorical_features_ranked() {
        let ds = parse("vote,party\ny,d\nn,r\nu,d\ny,r\n").unwrap();
        assert_eq!(
            ds.feature(0).kind,
            FeatureKind::Categorical {
                levels: vec!["n".into(), "u".into(), "y".into()]
            }
        );
        assert_eq!(
            (0..4).map(|i| ds.value(i, 0)).collect::<Vec<_>>(),
            vec![2.0, 0.0, 1.0, 2.0]
        );
    }

    #[test]
    fn named_label_column() {
        let ds = read_csv(
            "c,a,b\nP,1,5\nQ,2,6\n".as_bytes(),
            &LabelColumn::Name("c".into()),
        )
        .unwrap();
        assert_eq!(ds.m(), 2);
        assert_eq!(ds.feature(1).name, "b");
        assert!(read_csv("c,a\nP,1\n".as_bytes(), &LabelColumn::Name("z".into())).is_err());
    }

    #[test]
    fn rejects_bad_files() {
        assert!(parse("x,y\n1,A\n2,A\n")
            .unwrap_err()
            .contains("fewer than 2 classes"));
        assert!(parse("x,y\n1,A\n,B\n").unwrap_err().contains("missing"));
        assert!(parse("x,y\n1,A\nNA,B\n").unwrap_err().contains("missing"));
        assert!(parse("x,y\n1,A\n1,B\n").unwrap_err().contains("constant"));
        assert!(parse("x,y\n").is_err());
        assert!(parse("x,y\n1,A,3\n2,B\n").is_err());
    }

    #[test]
    fn round_trip() {
        let ds = bdt_core::generate_xor3(50, 3).unwrap();
        let mut buf = Vec::new();
        write_csv_to(&ds, &mut buf).unwrap();
        let back = read_csv(buf.as_slice(), &LabelColumn::Last).unwrap();
        assert_eq!(back.labels(), ds.labels());
        assert_eq!(back.n_classes(), ds.n_classes());
        for i in 0..ds.n() {
            assert_eq!(back.row(i), ds.row(i));
        }
    }
}
