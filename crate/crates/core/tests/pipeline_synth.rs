// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright The Lakeprune Authors

use lakeprune::lake::Lake;
use lakeprune::pipeline::{run_pipeline, PipelineConfig};
use lakeprune::synth::{generate, GenSpec};
use lakeprune::truth::{evaluate, ground_truth_content, ground_truth_schema};

fn small_spec(seed: u64) -> GenSpec {
    GenSpec {
        tables_target: 40,
        root_rows: 400,
        partition_rows: 64,
        seed,
        ..GenSpec::default()
    }
}

#[test]
fn every_stage_keeps_every_contained_pair() {
    for seed in 0..3 {
        let dir = tempfile::tempdir().unwrap();
        let lake = Lake::open(dir.path()).unwrap();
        let gen = generate(&lake, &small_spec(seed)).unwrap();
        let out = run_pipeline(&lake, &PipelineConfig::default()).unwrap();
        let (schema_truth, _) = ground_truth_schema(&lake).unwrap();
        let (reports, truth_counters) = ground_truth_content(&lake, &schema_truth).unwrap();

        // Schema grouping finds exactly the schema-contained pairs.
        assert_eq!(out.sgb.edge_pairs(), schema_truth.edge_pairs());

        let mut last = u64::MAX;
        for g in out.stages() {
            let s = evaluate(g, &reports).unwrap();
            assert_eq!(s.not_detected, 0, "seed {seed} stage {}", g.stage);
            assert!(s.incorrect_lt1 <= last);
            last = s.incorrect_lt1;
        }
        let mmp = out.mmp.as_ref().unwrap();
        let clp = out.clp.as_ref().unwrap();
        assert!(mmp.edge_pairs().is_subset(&out.sgb.edge_pairs()));
        assert!(clp.edge_pairs().is_subset(&mmp.edge_pairs()));

        // Lineage says which derived children are contained in their source.
        for rec in gen.lineage.iter().filter(|r| r.truth_contained) {
            if schema_truth.has_edge(&rec.parent, &rec.child) {
                assert!(clp.has_edge(&rec.parent, &rec.child), "{rec:?}");
            }
        }

        assert!(out.counters.rows_scanned * 100 <= truth_counters.truth_nominal_row_ops);
    }
}

#[test]
fn same_seed_same_graphs_at_any_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let lake = Lake::open(dir.path()).unwrap();
    generate(&lake, &small_spec(9)).unwrap();
    let cfg = PipelineConfig::default();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let out = run_pipeline(&lake, &cfg).unwrap();
            (out.stages().iter().map(|g| g.to_json()).collect::<Vec<_>>(), out.counters)
        })
    };
    let (one, c1) = run(1);
    let (four, c4) = run(4);
    assert_eq!(one, four);
    assert_eq!(c1, c4);
}

#[test]
fn same_spec_same_lake() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let la = Lake::open(a.path()).unwrap();
    let lb = Lake::open(b.path()).unwrap();
    let ga = generate(&la, &small_spec(4)).unwrap();
    let gb = generate(&lb, &small_spec(4)).unwrap();
    assert_eq!(ga.lineage, gb.lineage);
    assert_eq!(la.names(), lb.names());
    for name in la.names() {
        let (ha, hb) = (la.dataset(&name).unwrap(), lb.dataset(&name).unwrap());
        assert_eq!(ha.to_json().unwrap(), hb.to_json().unwrap());
    }
    let other = tempfile::tempdir().unwrap();
    let lo = Lake::open(other.path()).unwrap();
    assert_ne!(generate(&lo, &small_spec(5)).unwrap().lineage, ga.lineage);
}

#[test]
fn both_sides_mode_is_also_complete() {
    let dir = tempfile::tempdir().unwrap();
    let lake = Lake::open(dir.path()).unwrap();
    generate(&lake, &small_spec(2)).unwrap();
    let mut cfg = PipelineConfig::default();
    cfg.clp.mode = lakeprune::clp::ClpMode::BothSides;
    let out = run_pipeline(&lake, &cfg).unwrap();
    let (schema_truth, _) = ground_truth_schema(&lake).unwrap();
    let (reports, _) = ground_truth_content(&lake, &schema_truth).unwrap();
    assert_eq!(evaluate(out.final_graph(), &reports).unwrap().not_detected, 0);
}
