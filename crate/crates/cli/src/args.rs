// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright The Lakeprune Authors

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lakeprune::clp::{ClpMode, ClpParams, Sampling};
use lakeprune::dynamic::Change;
use lakeprune::graph::Stage;
use lakeprune::mmp::MmpConfig;
use lakeprune::pipeline::PipelineConfig;

#[derive(Debug, Parser)]
#[command(name = "lakeprune", version, about = "Find contained datasets in a lake and plan which to delete")]
pub struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Where to write the run record.
    #[arg(long, global = true, default_value = "run.json")]
    pub run_json: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load a CSV file (or a directory of CSV files) as a dataset.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        lake: PathBuf,
        /// Dataset name (default: the input's file stem).
        #[arg(long)]
        name: Option<String>,
        #[arg(long, default_value_t = 10_000)]
        partition_rows: usize,
    },
    /// Generate a synthetic lake with a lineage answer key.
    Synth {
        #[arg(long)]
        lake: PathBuf,
        /// Generator spec (TOML); defaults apply when omitted.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Overrides the spec's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Write lineage records (JSONL) here.
        #[arg(long)]
        lineage: Option<PathBuf>,
    },
    /// Run schema grouping, min/max pruning and content pruning.
    Pipeline {
        #[arg(long)]
        lake: PathBuf,
        /// Final graph; earlier stages go next to it as `<stem>.<stage>.json`.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = StopAfter::Clp)]
        stop_after: StopAfter,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
    /// Compute exact containment for every schema-contained pair.
    Truth {
        #[arg(long)]
        lake: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score stage graphs against exact containment.
    Evaluate {
        /// Stage graph; repeat for several stages.
        #[arg(long, required = true)]
        graph: Vec<PathBuf>,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Content pruning over a grid of filter widths and sample sizes.
    ClpGrid {
        #[arg(long)]
        lake: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = [1, 4, 8])]
        s: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = [5, 10, 30])]
        t: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = ModeArg::ChildOnly)]
        clp_mode: ModeArg,
        /// Exact containment (JSONL) for scoring each cell.
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        mmp_skip_text: bool,
    },
    /// Choose datasets to delete and how to rebuild them.
    Optimize {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        cost: PathBuf,
        #[arg(long)]
        econ: PathBuf,
        #[arg(long)]
        transforms: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Use branch and bound for line components too.
        #[arg(long)]
        force_ilp: bool,
    },
    /// Project cost and row-scan savings of a plan.
    Savings {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        econ: PathBuf,
        #[arg(long)]
        cost: PathBuf,
        /// Months.
        #[arg(long, default_value_t = 12)]
        horizon: u32,
        #[arg(long, default_value_t = 1.0)]
        accesses_per_week: f64,
        /// Refuse a plan computed from a different graph.
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Apply one dataset change to a graph without rerunning the pipeline.
    #[command(subcommand)]
    Update(UpdateCommand),
    /// Time the exact planner on random graphs.
    BenchOpt {
        #[arg(long, value_delimiter = ',', required = true)]
        nodes: Vec<usize>,
        #[arg(long, value_delimiter = ',', required = true)]
        p: Vec<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Instances per (nodes, p) cell, seeded `seed..seed + trials`.
        #[arg(long, default_value_t = 1)]
        trials: u64,
        #[arg(long, default_value_t = 2.0)]
        exponent: f64,
        #[arg(long)]
        force_ilp: bool,
        /// Records without timings (JSONL).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-run the command recorded in a run file.
    Replay {
        record: PathBuf,
        /// Fail unless every output matches its recorded digest.
        #[arg(long)]
        check: bool,
    },
}

#[derive(Debug, Subcommand)]
pub enum UpdateCommand {
    /// Add a dataset (ingesting `--input` first if given).
    Add {
        #[command(flatten)]
        target: UpdateTarget,
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 10_000)]
        partition_rows: usize,
    },
    /// Replace a dataset's content from `--input` and re-decide its pairs.
    Mutate {
        #[command(flatten)]
        target: UpdateTarget,
        /// Declared kind of change, checked against the new content.
        #[arg(long, value_enum)]
        change: ChangeArg,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        partition_rows: usize,
    },
    /// Remove a dataset from the lake and the graph.
    Remove {
        #[command(flatten)]
        target: UpdateTarget,
    },
}

#[derive(Debug, Args)]
pub struct UpdateTarget {
    #[arg(long)]
    pub lake: PathBuf,
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub name: String,
    /// Updated graph (default: overwrite `--graph`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Debug, Clone, Args)]
pub struct PipelineArgs {
    #[arg(long, default_value_t = 4)]
    pub clp_s: usize,
    #[arg(long, default_value_t = 10)]
    pub clp_t: usize,
    #[arg(long, value_enum, default_value_t = ModeArg::ChildOnly)]
    pub clp_mode: ModeArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Leave text columns out of min/max pruning.
    #[arg(long)]
    pub mmp_skip_text: bool,
}

impl PipelineArgs {
    pub fn config(&self, stop_after: Stage) -> PipelineConfig {
        PipelineConfig {
            mmp: mmp_config(self.mmp_skip_text),
            clp: ClpParams {
                s: self.clp_s,
                t: self.clp_t,
                seed: self.seed,
                mode: self.clp_mode.into(),
                sampling: Sampling::Filtered,
            },
            stop_after,
        }
    }
}

pub fn mmp_config(skip_text: bool) -> MmpConfig {
    MmpConfig {
        text: !skip_text,
        ..MmpConfig::default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StopAfter {
    Sgb,
    Mmp,
    Clp,
}

impl From<StopAfter> for Stage {
    fn from(s: StopAfter) -> Stage {
        match s {
            StopAfter::Sgb => Stage::Sgb,
            StopAfter::Mmp => Stage::Mmp,
            StopAfter::Clp => Stage::Clp,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    ChildOnly,
    BothSides,
}

impl From<ModeArg> for ClpMode {
    fn from(m: ModeArg) -> ClpMode {
        match m {
            ModeArg::ChildOnly => ClpMode::ChildOnly,
            ModeArg::BothSides => ClpMode::BothSides,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ChangeArg {
    RowsAdded,
    ColumnsAdded,
    RowsRemoved,
    ColumnsRemoved,
}

impl From<ChangeArg> for Change {
    fn from(c: ChangeArg) -> Change {
        match c {
            ChangeArg::RowsAdded => Change::RowsAdded,
            ChangeArg::ColumnsAdded => Change::ColumnsAdded,
            ChangeArg::RowsRemoved => Change::RowsRemoved,
            ChangeArg::ColumnsRemoved => Change::ColumnsRemoved,
        }
    }
}
