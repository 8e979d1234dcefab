// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright The Lakeprune Authors

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use lakeprune::clp::{content_prune, ClpParams, Sampling};
use lakeprune::dynamic::{Change, DynamicGraph};
use lakeprune::graph::{ContainmentGraph, Stage};
use lakeprune::lake::Lake;
use lakeprune::mmp::min_max_prune;
use lakeprune::optimizer::harness::{run_trial, HarnessParams};
use lakeprune::optimizer::{
    optimize, preprocess_edges, read_json_list, savings_report, CostModel, Instance, NodeEconomics,
    RetentionPlan, TransformAnnotation,
};
use lakeprune::pipeline::{run_pipeline, PipelineConfig};
use lakeprune::schema::{build_schema_graph, flatten_schema};
use lakeprune::synth::{generate, write_lineage, GenSpec};
use lakeprune::truth::{evaluate, ground_truth_content, ground_truth_schema, read_reports, write_reports};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::{mmp_config, ModeArg, UpdateCommand, UpdateTarget};
use crate::invalid;
use crate::runlog::Outcome;

fn print_json(value: &impl Serialize) -> Result<()> {
    print_line(&serde_json::to_string_pretty(value)?)
}

/// Writes to stdout, treating a closed pipe (e.g. `| head`) as success.
pub fn print_line(text: &str) -> Result<()> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn seeds(pairs: &[(&str, u64)]) -> BTreeMap<String, u64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn pipeline_params(cfg: &PipelineConfig) -> Value {
    json!({
        "stop_after": cfg.stop_after,
        "clp": cfg.clp,
        "mmp": cfg.mmp,
    })
}

pub fn ingest(input: &Path, lake: &Path, name: Option<String>, partition_rows: usize) -> Result<Outcome> {
    let name = match name {
        Some(n) => n,
        None => input
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .ok_or_else(|| invalid(format!("cannot derive a dataset name from {}", input.display())))?,
    };
    let lake = Lake::open(lake)?;
    let handle = lake.ingest(input, &name, partition_rows)?;
    print_json(&json!({
        "dataset": handle.name,
        "rows": handle.total_rows,
        "columns": handle.columns.len(),
        "partitions": handle.partitions.len(),
        "bytes": handle.total_bytes,
    }))?;
    Ok(Outcome {
        params: json!({ "name": name, "partition_rows": partition_rows }),
        ..Outcome::default()
    })
}

pub fn synth(lake: &Path, spec: Option<&Path>, seed: Option<u64>, lineage: Option<&Path>) -> Result<Outcome> {
    let mut gen = match spec {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            GenSpec::from_toml(&text)?
        }
        None => GenSpec::default(),
    };
    if let Some(s) = seed {
        gen.seed = s;
    }
    let lake = Lake::open(lake)?;
    let out = generate(&lake, &gen)?;
    let mut outputs = Vec::new();
    if let Some(path) = lineage {
        write_lineage(path, &out.lineage)?;
        outputs.push(path.to_path_buf());
    }
    print_json(&json!({
        "datasets": out.datasets.len(),
        "lineage_records": out.lineage.len(),
    }))?;
    Ok(Outcome {
        seeds: seeds(&[("synth", gen.seed)]),
        params: serde_json::to_value(&gen)?,
        outputs,
        ..Outcome::default()
    })
}

/// `dir/graph.json` -> `dir/graph.sgb.json`.
pub fn stage_path(out: &Path, stage: Stage) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let ext = out.extension().map(|e| e.to_string_lossy().into_owned()).unwrap_or_else(|| "json".into());
    out.with_file_name(format!("{stem}.{}.{ext}", stage.as_str().to_ascii_lowercase()))
}

pub fn pipeline(lake: &Path, out: &Path, cfg: PipelineConfig) -> Result<Outcome> {
    let lake = Lake::open(lake)?;
    let result = run_pipeline(&lake, &cfg)?;
    let mut outputs = Vec::new();
    for g in result.stages() {
        let path = if g.stage == cfg.stop_after { out.to_path_buf() } else { stage_path(out, g.stage) };
        g.write(&path)?;
        outputs.push(path);
    }
    print_json(&json!({
        "edges": result.counters.edge_counts,
        "counters": result.counters,
    }))?;
    Ok(Outcome {
        seeds: seeds(&[("clp", cfg.clp.seed)]),
        params: pipeline_params(&cfg),
        counters: serde_json::to_value(&result.counters)?,
        outputs,
    })
}

pub fn truth(lake: &Path, out: &Path) -> Result<Outcome> {
    let lake = Lake::open(lake)?;
    let (schema, mut counters) = ground_truth_schema(&lake)?;
    let (reports, c) = ground_truth_content(&lake, &schema)?;
    counters.add(&c);
    write_reports(out, &reports)?;
    let contained = reports.iter().filter(|r| r.contained()).count();
    print_json(&json!({
        "schema_pairs": reports.len(),
        "contained_pairs": contained,
        "counters": counters,
    }))?;
    Ok(Outcome {
        counters: serde_json::to_value(&counters)?,
        outputs: vec![out.to_path_buf()],
        ..Outcome::default()
    })
}

pub fn evaluate_cmd(graphs: &[PathBuf], truth: &Path, out: Option<&Path>) -> Result<Outcome> {
    let reports = read_reports(truth)?;
    let mut results = BTreeMap::new();
    for path in graphs {
        let g = ContainmentGraph::read(path)?;
        let summary = evaluate(&g, &reports)?;
        if results.insert(g.stage.as_str().to_string(), summary).is_some() {
            return Err(invalid(format!("two graphs at stage {}", g.stage)));
        }
    }
    print_json(&results)?;
    let mut outputs = Vec::new();
    if let Some(path) = out {
        write_json(path, &results)?;
        outputs.push(path.to_path_buf());
    }
    Ok(Outcome {
        counters: serde_json::to_value(&results)?,
        outputs,
        ..Outcome::default()
    })
}

#[derive(Serialize)]
struct GridCell {
    s: usize,
    t: usize,
    edges: usize,
    rows_scanned: u64,
    row_membership_ops: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    correct: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    incorrect_lt1: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    not_detected: Option<u64>,
}

#[allow(clippy::too_many_arguments)]
pub fn clp_grid(
    lake: &Path,
    s_values: &[usize],
    t_values: &[usize],
    seed: u64,
    mode: ModeArg,
    truth: Option<&Path>,
    out: Option<&Path>,
    skip_text: bool,
) -> Result<Outcome> {
    let lake = Lake::open(lake)?;
    let schemas = lake.datasets().iter().map(|h| flatten_schema(h)).collect::<lakeprune::Result<Vec<_>>>()?;
    let (sgb, _, _) = build_schema_graph(&schemas)?;
    let (mmp, _) = min_max_prune(&sgb, &lake, &mmp_config(skip_text))?;
    let reports = truth.map(read_reports).transpose()?;
    let mut cells = Vec::new();
    for &s in s_values {
        for &t in t_values {
            let params = ClpParams { s, t, seed, mode: mode.into(), sampling: Sampling::Filtered };
            let (g, c) = content_prune(&mmp, &lake, &params)?;
            let scored = reports.as_ref().map(|r| evaluate(&g, r)).transpose()?;
            cells.push(GridCell {
                s,
                t,
                edges: g.edge_count(),
                rows_scanned: c.rows_scanned,
                row_membership_ops: c.row_membership_ops,
                correct: scored.map(|e| e.correct),
                incorrect_lt1: scored.map(|e| e.incorrect_lt1),
                not_detected: scored.map(|e| e.not_detected),
            });
        }
    }
    print_json(&json!({ "mmp_edges": mmp.edge_count(), "cells": cells }))?;
    let mut outputs = Vec::new();
    if let Some(path) = out {
        write_json(path, &cells)?;
        outputs.push(path.to_path_buf());
    }
    Ok(Outcome {
        seeds: seeds(&[("clp", seed)]),
        params: json!({ "s": s_values, "t": t_values, "mmp_skip_text": skip_text }),
        outputs,
        ..Outcome::default()
    })
}

pub fn optimize_cmd(
    graph: &Path,
    cost: &Path,
    econ: &Path,
    transforms: &Path,
    out: &Path,
    force_ilp: bool,
) -> Result<Outcome> {
    let g = ContainmentGraph::read(graph)?;
    let model = CostModel::read(cost)?;
    let econ: Vec<NodeEconomics> = read_json_list(econ)?;
    let transforms: Vec<TransformAnnotation> = read_json_list(transforms)?;
    let annotated = preprocess_edges(&g, &model, &econ, &transforms)?;
    let instance = Instance::from_annotated(&annotated, &model, &econ)?;
    let (solution, stats) = optimize(&instance, force_ilp)?;
    let mut plan = RetentionPlan::from_solution(&instance, &solution);
    plan.graph_digest = Some(g.digest());
    std::fs::write(out, plan.to_json()).with_context(|| format!("writing {}", out.display()))?;
    let summary = json!({
        "usable_edges": annotated.edges.len(),
        "deletions": plan.deletions.len(),
        "retentions": plan.retentions.len(),
        "objective": plan.objective,
        "solver": stats,
    });
    print_json(&summary)?;
    Ok(Outcome {
        params: json!({ "cost_model": model, "force_ilp": force_ilp }),
        counters: summary,
        outputs: vec![out.to_path_buf()],
        ..Outcome::default()
    })
}

#[allow(clippy::too_many_arguments)]
pub fn savings(
    plan: &Path,
    econ: &Path,
    cost: &Path,
    horizon: u32,
    accesses_per_week: f64,
    graph: Option<&Path>,
    out: Option<&Path>,
) -> Result<Outcome> {
    let plan = RetentionPlan::read(plan)?;
    if let Some(path) = graph {
        let digest = ContainmentGraph::read(path)?.digest();
        if plan.graph_digest.as_deref() != Some(digest.as_str()) {
            return Err(invalid(format!(
                "plan is stale: it was not computed from {}; re-run optimize",
                path.display()
            )));
        }
    }
    let model = CostModel::read(cost)?;
    let econ: Vec<NodeEconomics> = read_json_list(econ)?;
    let report = savings_report(&plan, &model, &econ, horizon, accesses_per_week)?;
    print_json(&report)?;
    let mut outputs = Vec::new();
    if let Some(path) = out {
        write_json(path, &report)?;
        outputs.push(path.to_path_buf());
    }
    Ok(Outcome {
        params: json!({ "horizon_months": horizon, "accesses_per_week": accesses_per_week }),
        counters: serde_json::to_value(&report)?,
        outputs,
        ..Outcome::default()
    })
}

/// Loads the graph and rebuilds clusters for its current nodes.
fn load_dynamic(lake: &Lake, target: &UpdateTarget) -> Result<(DynamicGraph, PipelineConfig)> {
    let graph = ContainmentGraph::read(&target.graph)?;
    if graph.stage == Stage::Truth {
        return Err(invalid("updates apply to pipeline graphs, not TRUTH graphs"));
    }
    let cfg = target.pipeline.config(graph.stage);
    let schemas = graph
        .nodes()
        .iter()
        .map(|n| flatten_schema(&*lake.dataset(n)?))
        .collect::<lakeprune::Result<Vec<_>>>()?;
    let (_, clusters, _) = build_schema_graph(&schemas)?;
    Ok((DynamicGraph::new(lake, graph, clusters, cfg)?, cfg))
}

pub fn update(cmd: &UpdateCommand) -> Result<Outcome> {
    let target = match cmd {
        UpdateCommand::Add { target, .. } | UpdateCommand::Mutate { target, .. } | UpdateCommand::Remove { target } => {
            target
        }
    };
    let lake = Lake::open(&target.lake)?;
    let (mut dynamic, cfg) = load_dynamic(&lake, target)?;
    let (op, stats) = match cmd {
        UpdateCommand::Add { input, partition_rows, .. } => {
            if let Some(input) = input {
                lake.ingest(input, &target.name, *partition_rows)?;
            }
            ("add", dynamic.add_dataset(&lake, &target.name)?)
        }
        UpdateCommand::Mutate { change, input, partition_rows, .. } => {
            if !dynamic.graph().contains_node(&target.name) {
                return Err(lakeprune::Error::UnknownDataset(target.name.clone()).into());
            }
            lake.reingest(input, &target.name, *partition_rows)?;
            ("mutate", dynamic.mutate_dataset(&lake, &target.name, Change::from(*change))?)
        }
        UpdateCommand::Remove { .. } => {
            let stats = dynamic.remove_dataset(&target.name)?;
            lake.remove_dataset(&target.name)?;
            ("remove", stats)
        }
    };
    let out = target.out.clone().unwrap_or_else(|| target.graph.clone());
    dynamic.graph().write(&out)?;
    print_json(&json!({
        "operation": op,
        "dataset": target.name,
        "edges": dynamic.graph().edge_count(),
        "stats": stats,
    }))?;
    Ok(Outcome {
        seeds: seeds(&[("clp", cfg.clp.seed)]),
        params: pipeline_params(&cfg),
        counters: serde_json::to_value(&stats)?,
        outputs: vec![out],
    })
}

pub struct BenchArgs<'a> {
    pub nodes: &'a [usize],
    pub p: &'a [f64],
    pub seed: u64,
    pub trials: u64,
    pub exponent: f64,
    pub force_ilp: bool,
    pub out: Option<&'a Path>,
}

pub fn bench_opt(args: BenchArgs<'_>) -> Result<Outcome> {
    if args.trials == 0 {
        return Err(invalid("--trials must be at least 1"));
    }
    let model = CostModel::cloud_defaults();
    let mut grid = Vec::new();
    for &n in args.nodes {
        for &p in args.p {
            for k in 0..args.trials {
                grid.push(HarnessParams {
                    nodes: n,
                    edge_prob: p,
                    seed: args.seed + k,
                    exponent: args.exponent,
                    force_general: args.force_ilp,
                });
            }
        }
    }
    let runs = grid
        .par_iter()
        .map(|params| run_trial(params, &model))
        .collect::<lakeprune::Result<Vec<_>>>()?;
    let mut lines = String::new();
    for (record, elapsed) in &runs {
        let mut shown = serde_json::to_value(record)?;
        shown["seconds"] = json!(elapsed.as_secs_f64());
        print_line(&serde_json::to_string(&shown)?)?;
        lines.push_str(&serde_json::to_string(record)?);
        lines.push('\n');
    }
    let mut outputs = Vec::new();
    if let Some(path) = args.out {
        std::fs::write(path, lines).with_context(|| format!("writing {}", path.display()))?;
        outputs.push(path.to_path_buf());
    }
    Ok(Outcome {
        seeds: seeds(&[("bench", args.seed)]),
        params: json!({
            "nodes": args.nodes,
            "p": args.p,
            "trials": args.trials,
            "exponent": args.exponent,
            "force_ilp": args.force_ilp,
            "cost_model": model,
        }),
        outputs,
        ..Outcome::default()
    })
}
