// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright The Lakeprune Authors

//! `lakeprune` command-line driver.
//!
//! Exit status: 0 on success, 1 for invalid input or arguments, 2 for
//! internal or I/O failures.

mod args;
mod commands;
mod runlog;

use std::ffi::OsString;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;

use args::{Cli, Command};
use runlog::{digest_file, RunRecord};

/// A user error detected by the driver itself.
#[derive(Debug)]
pub struct Invalid(String);

impl std::fmt::Display for Invalid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

pub fn invalid(msg: impl Into<String>) -> anyhow::Error {
    Invalid(msg.into()).into()
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<Invalid>() {
            return 1;
        }
        if let Some(e) = cause.downcast_ref::<lakeprune::Error>() {
            return match e {
                lakeprune::Error::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => 1,
                e if e.is_validation() => 1,
                _ => 2,
            };
        }
        if let Some(e) = cause.downcast_ref::<std::io::Error>() {
            return if e.kind() == std::io::ErrorKind::NotFound { 1 } else { 2 };
        }
        if cause.is::<serde_json::Error>() {
            return 1;
        }
    }
    2
}

fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Ingest { .. } => "ingest",
        Command::Synth { .. } => "synth",
        Command::Pipeline { .. } => "pipeline",
        Command::Truth { .. } => "truth",
        Command::Evaluate { .. } => "evaluate",
        Command::ClpGrid { .. } => "clp-grid",
        Command::Optimize { .. } => "optimize",
        Command::Savings { .. } => "savings",
        Command::Update(_) => "update",
        Command::BenchOpt { .. } => "bench-opt",
        Command::Replay { .. } => "replay",
    }
}

fn dispatch(cli: Cli, argv: Vec<String>) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(invalid("--threads must be at least 1"));
        }
        // A replay runs inside a process whose pool already exists.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let name = command_name(&cli.command);
    let outcome = match cli.command {
        Command::Replay { record, check } => return replay(&record, check),
        Command::Ingest { input, lake, name, partition_rows } => {
            commands::ingest(&input, &lake, name, partition_rows)?
        }
        Command::Synth { lake, spec, seed, lineage } => {
            commands::synth(&lake, spec.as_deref(), seed, lineage.as_deref())?
        }
        Command::Pipeline { lake, out, stop_after, pipeline } => {
            commands::pipeline(&lake, &out, pipeline.config(stop_after.into()))?
        }
        Command::Truth { lake, out } => commands::truth(&lake, &out)?,
        Command::Evaluate { graph, truth, out } => commands::evaluate_cmd(&graph, &truth, out.as_deref())?,
        Command::ClpGrid { lake, s, t, seed, clp_mode, truth, out, mmp_skip_text } => {
            commands::clp_grid(&lake, &s, &t, seed, clp_mode, truth.as_deref(), out.as_deref(), mmp_skip_text)?
        }
        Command::Optimize { graph, cost, econ, transforms, out, force_ilp } => {
            commands::optimize_cmd(&graph, &cost, &econ, &transforms, &out, force_ilp)?
        }
        Command::Savings { plan, econ, cost, horizon, accesses_per_week, graph, out } => commands::savings(
            &plan,
            &econ,
            &cost,
            horizon,
            accesses_per_week,
            graph.as_deref(),
            out.as_deref(),
        )?,
        Command::Update(cmd) => commands::update(&cmd)?,
        Command::BenchOpt { nodes, p, seed, trials, exponent, force_ilp, out } => {
            commands::bench_opt(commands::BenchArgs {
                nodes: &nodes,
                p: &p,
                seed,
                trials,
                exponent,
                force_ilp,
                out: out.as_deref(),
            })?
        }
    };
    RunRecord::new(name, argv, outcome)?.write(&cli.run_json)
}

fn replay(path: &std::path::Path, check: bool) -> Result<()> {
    let record = RunRecord::read(path)?;
    std::env::set_current_dir(&record.cwd)
        .with_context(|| format!("entering {}", record.cwd.display()))?;
    let cli = Cli::try_parse_from(std::iter::once("lakeprune".to_string()).chain(record.argv.iter().cloned()))
        .map_err(|e| invalid(format!("recorded arguments no longer parse: {e}")))?;
    if matches!(cli.command, Command::Replay { .. }) {
        return Err(invalid("a run record cannot replay another replay"));
    }
    dispatch(cli, record.argv.clone())?;
    if check {
        for out in &record.outputs {
            let now = digest_file(&out.path)?;
            if now != out.xxh3 {
                return Err(invalid(format!("{} differs from the recorded run", out.path.display())));
            }
        }
        eprintln!("all {} outputs match", record.outputs.len());
    }
    Ok(())
}

/// The error chain, skipping causes already quoted by the message above them.
fn describe(err: &anyhow::Error) -> String {
    let mut text = String::new();
    for cause in err.chain() {
        let msg = cause.to_string();
        if !text.contains(&msg) {
            if !text.is_empty() {
                text.push_str(": ");
            }
            text.push_str(&msg);
        }
    }
    text
}

fn main() -> ExitCode {
    let raw: Vec<OsString> = std::env::args_os().collect();
    let cli = match Cli::try_parse_from(&raw) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let argv = raw.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    match dispatch(cli, argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}
