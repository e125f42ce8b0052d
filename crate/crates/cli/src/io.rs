//! File formats: provenance headers, feature/score CSVs and their
//! `.meta.json` sidecars.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn read_text(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

pub fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Configuration and input hashes recorded with every output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: RunConfig,
    /// Input role (`corpus`, `kb`, ...) to SHA-256 of the file contents.
    pub inputs: BTreeMap<String, String>,
}

impl Provenance {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        Provenance {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config: config.clone(),
            inputs: BTreeMap::new(),
        }
    }

    pub fn input(&mut self, role: &str, text: &str) {
        self.inputs.insert(role.to_string(), sha256_hex(text.as_bytes()));
    }
}

/// `<path>.meta.json`
pub fn meta_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub provenance: Provenance,
    pub rows: usize,
    pub schema_hash: String,
    pub columns: Vec<String>,
}

pub fn write_meta(path: &Path, meta: &Meta) -> anyhow::Result<()> {
    write_text(&meta_path(path), &(serde_json::to_string_pretty(meta)? + "\n"))
}

/// A table keyed by the first (`id`) column.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub ids: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn to_csv(&self) -> anyhow::Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(std::iter::once("id").chain(self.columns.iter().map(String::as_str)))?;
        for (id, row) in self.ids.iter().zip(&self.rows) {
            // `{}` on f64 prints the shortest string that reads back exactly
            w.write_record(std::iter::once(id.clone()).chain(row.iter().map(|v| format!("{v}"))))?;
        }
        Ok(String::from_utf8(w.into_inner()?)?)
    }

    pub fn from_csv(text: &str) -> anyhow::Result<Self> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let header = r.headers()?.clone();
        if header.get(0) != Some("id") {
            bail!("first CSV column must be `id`");
        }
        let columns: Vec<String> = header.iter().skip(1).map(String::from).collect();
        let (mut ids, mut rows) = (Vec::new(), Vec::new());
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            let values = rec
                .iter()
                .skip(1)
                .map(|v| v.parse::<f64>().with_context(|| format!("row {}: bad number `{v}`", i + 1)))
                .collect::<anyhow::Result<Vec<f64>>>()?;
            ids.push(rec[0].to_string());
            rows.push(values);
        }
        Ok(Table { columns, ids, rows })
    }

    pub fn read(path: &Path) -> anyhow::Result<(Self, String)> {
        let text = read_text(path)?;
        let t = Self::from_csv(&text).with_context(|| format!("parsing {}", path.display()))?;
        Ok((t, text))
    }
}
