// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright The Lakeprune Authors

//! `run.json`: what was run and what it produced, without timings, so a
//! replay can be compared byte for byte.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const RECORD_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputDigest {
    pub path: PathBuf,
    /// xxh3-128 of the file contents, hex.
    pub xxh3: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub record_version: u32,
    pub tool_version: String,
    pub command: String,
    /// Working directory that relative paths in `argv` resolve against.
    pub cwd: PathBuf,
    /// Arguments after the program name.
    pub argv: Vec<String>,
    pub seeds: BTreeMap<String, u64>,
    pub params: Value,
    #[serde(default)]
    pub counters: Value,
    pub outputs: Vec<OutputDigest>,
}

/// What a command reports back for its run record.
#[derive(Debug, Default)]
pub struct Outcome {
    pub seeds: BTreeMap<String, u64>,
    pub params: Value,
    pub counters: Value,
    pub outputs: Vec<PathBuf>,
}

pub fn digest_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(format!("{:032x}", xxhash_rust::xxh3::xxh3_128(&bytes)))
}

impl RunRecord {
    pub fn new(command: &str, argv: Vec<String>, outcome: Outcome) -> Result<Self> {
        let outputs = outcome
            .outputs
            .into_iter()
            .map(|path| Ok(OutputDigest { xxh3: digest_file(&path)?, path }))
            .collect::<Result<_>>()?;
        Ok(RunRecord {
            record_version: RECORD_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            cwd: std::env::current_dir().context("reading working directory")?,
            argv,
            seeds: outcome.seeds,
            params: outcome.params,
            counters: outcome.counters,
            outputs,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let record: RunRecord =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        anyhow::ensure!(
            record.record_version == RECORD_VERSION,
            "unsupported run record version {}",
            record.record_version
        );
        Ok(record)
    }
}
