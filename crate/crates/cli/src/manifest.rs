//! Flat `key=value` run manifests.
//!
//! Every command writes one next to its outputs. It records the tool version, the
//! command line (`arg.<i>` keys), the resolved configuration, and a SHA-256 digest
//! of every input and output file. `bdt replay` re-runs the recorded command line
//! and compares output digests.

use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Manifest {
    entries: Vec<(String, String)>,
}

impl Manifest {
    pub fn new(command: &str, args: &[String]) -> Self {
        let mut m = Self::default();
        m.set("tool", env!("CARGO_PKG_NAME"));
        m.set("version", env!("CARGO_PKG_VERSION"));
        m.set("command", command);
        for (i, a) in args.iter().enumerate() {
            m.set(&format!("arg.{i}"), a);
        }
        m
    }

    /// Sets `key`, replacing an earlier value.
    pub fn set(&mut self, key: &str, value: impl ToString) {
        let value = value.to_string().replace('\\', "\\\\").replace('\n', "\\n");
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(slot) => slot.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn args(&self) -> Vec<String> {
        (0..)
            .map_while(|i| self.get(&format!("arg.{i}")).map(unescape))
            .collect()
    }

    pub fn add_input(&mut self, name: &str, path: &Path) -> Result<()> {
        self.set(&format!("input.{name}.path"), path.display());
        self.set(&format!("input.{name}.sha256"), sha256_file(path)?);
        Ok(())
    }

    pub fn add_output(&mut self, name: &str, path: &Path) -> Result<()> {
        self.set(&format!("output.{name}.path"), path.display());
        self.set(&format!("output.{name}.sha256"), sha256_file(path)?);
        Ok(())
    }

    /// `(name, path, digest)` for every recorded output.
    pub fn outputs(&self) -> Vec<(String, PathBuf, String)> {
        self.entries
            .iter()
            .filter_map(|(k, v)| {
                let name = k.strip_prefix("output.")?.strip_suffix(".path")?;
                let digest = self.get(&format!("output.{name}.sha256"))?;
                Some((
                    name.to_string(),
                    PathBuf::from(unescape(v)),
                    digest.to_string(),
                ))
            })
            .collect()
    }

    pub fn render(&self) -> String {
        self.entries
            .iter()
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect()
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let mut m = Self::default();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected key=value", i + 1))?;
            m.entries.push((k.to_string(), v.to_string()));
        }
        Ok(m)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.render()).map_err(|e| CliError::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text).map_err(|m| CliError::data(path, m))
    }
}

fn unescape(v: &str) -> String {
    let mut out = String::with_capacity(v.len());
    let mut chars = v.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            match chars.next() {
                Some('n') => out.push('\n'),
                Some(other) => out.push(other),
                None => out.push('\\'),
            }
        } else {
            out.push(c);
        }
    }
    out
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}
