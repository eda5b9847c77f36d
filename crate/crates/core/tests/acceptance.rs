//! Acceptance battery: one PASS/FAIL line per criterion, nonzero exit if any
//! fails. Runs as a plain binary (`harness = false`) so the lines always
//! show in `cargo test` output.

mod common;

use std::collections::BTreeSet;
use std::path::Path;
use std::time::{Duration, Instant};

use netsel::community::{louvain, louvain_with, modularity, LouvainOptions};
use netsel::data::Role;
use netsel::experiment::{group_records, run_experiment, EvaluateSummary, ExperimentConfig};
use netsel::learn::ClassifierKind;
use netsel::rng;
use netsel::selection::{
    cross_task, kendall_tau, match_mismatch_groups, node_difficulty, selection_stats, topk_intersection,
    EvaluationRecord, Selector,
};
use netsel::similarity::{knn_graph, threshold_graph, Measure, SimilarityIndex};
use netsel::tasks::{lp_evaluation_set, BatchStats, Fallback, PredictionBatch, Record, Target, Task};
use rand::Rng as _;

use common::*;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn similarity_oracle() -> Outcome {
    let start = Instant::now();
    let mut pairs = 0usize;
    for f in 0..20u64 {
        let mut r = rng::rng(rng::derive(11, f));
        let n = r.gen_range(2..=200);
        let items = r.gen_range(1..=100);
        let m = random_matrix(rng::derive(12, f), n, items, r.gen_range(0.02..0.3));
        let d = dense(&m, items);
        let index = SimilarityIndex::new(&m);
        let mut scratch = index.scratch();
        for measure in [Measure::Int, Measure::IntN] {
            for i in 0..n {
                let mut got = vec![0.0; n];
                for (j, s) in index.scores(i, measure, false, &mut scratch) {
                    got[j as usize] = s;
                }
                for j in (0..n).filter(|&j| j != i) {
                    let want = dense_sim(measure, &d[i], &d[j]);
                    let ok = match measure {
                        Measure::Int => got[j] == want,
                        Measure::IntN => (got[j] - want).abs() <= 1e-12 * want.abs(),
                    };
                    check(ok, || format!("fixture {f} {measure} ({i},{j}): {} vs {want}", got[j]))?;
                    pairs += 1;
                }
            }
        }
    }
    let t = start.elapsed();
    check(t < Duration::from_secs(10), || format!("took {t:.2?}"))?;
    Ok(format!("{pairs} ordered pairs match in {t:.2?}"))
}

fn graph_contracts() -> Outcome {
    for f in 0..10u64 {
        let n = 60 + 10 * f as usize;
        let items = 40;
        let m = random_matrix(rng::derive(21, f), n, items, 0.08);
        let d = dense(&m, items);
        let positives = |i: usize| (0..n).filter(|&j| j != i && dense_sim(Measure::Int, &d[i], &d[j]) > 0.0).count();
        let lambda = n * (2 + f as usize % 4);
        let k = lambda / n;
        let g = knn_graph(&m, Measure::IntN, lambda).map_err(|e| e.to_string())?;
        for i in 0..n {
            let deg = g.out(i).len();
            check(deg == k.min(positives(i)), || format!("fixture {f}: node {i} degree {deg}, k {k}"))?;
        }
        let total_pos: usize = (0..n).map(positives).sum::<usize>() / 2;
        let l1 = 3 * n;
        let l2 = 7 * n;
        let g1 = threshold_graph(&m, Measure::Int, l1).map_err(|e| e.to_string())?;
        let g2 = threshold_graph(&m, Measure::Int, l2).map_err(|e| e.to_string())?;
        check(g1.len() == l1.min(total_pos), || format!("fixture {f}: |E| {} vs {}", g1.len(), l1.min(total_pos)))?;
        check(g2.len() == l2.min(total_pos), || format!("fixture {f}: |E| {} vs {}", g2.len(), l2.min(total_pos)))?;
        let big: BTreeSet<(u32, u32)> = g2.edges().iter().map(|e| (e.u, e.v)).collect();
        check(g1.edges().iter().all(|e| big.contains(&(e.u, e.v))), || format!("fixture {f}: not nested"))?;
    }
    Ok("10 fixtures: KNN degrees, TH sizes and nesting hold".into())
}

fn kendall_oracle() -> Outcome {
    for f in 0..100u64 {
        let mut r = rng::rng(rng::derive(31, f));
        let n = r.gen_range(2..=500);
        let levels = if f % 2 == 0 { 5 } else { 1_000_000 };
        let x: Vec<f64> = (0..n).map(|_| f64::from(r.gen_range(0..levels))).collect();
        let y: Vec<f64> = (0..n).map(|_| f64::from(r.gen_range(0..levels))).collect();
        let (t, _) = kendall_tau(&x, &y).map_err(|e| e.to_string())?;
        let want = kendall_brute(&x, &y);
        check(t.to_bits() == want.to_bits(), || format!("input {f} (n={n}): {t} vs {want}"))?;
    }
    let x: Vec<f64> = (0..50).map(f64::from).collect();
    let rev: Vec<f64> = x.iter().rev().copied().collect();
    check(kendall_tau(&x, &x).unwrap().0 == 1.0, || "identical is not 1".into())?;
    check(kendall_tau(&x, &rev).unwrap().0 == -1.0, || "reversed is not -1".into())?;
    Ok("100 random inputs equal pair enumeration bit for bit".into())
}

fn louvain_sanity() -> Outcome {
    let labels = louvain(&two_cliques(), 1).labels;
    let want: Vec<u32> = (0..10).map(|i| u32::from(i >= 5)).collect();
    check(labels == want, || format!("cliques split as {labels:?}"))?;
    let mut graphs = vec![two_cliques()];
    graphs.extend((0..10).map(|s| random_graph(rng::derive(41, s), 80, 0.05 + 0.01 * s as f64)));
    let mut phases = 0;
    for (k, g) in graphs.iter().enumerate() {
        let mut ok = true;
        louvain_with(g, 7, LouvainOptions::default(), |p| {
            phases += 1;
            ok &= p.after >= p.before;
        });
        check(ok, || format!("graph {k}: a phase lowered modularity"))?;
    }
    let edgeless = undirected(6, &[]);
    let singletons: Vec<u32> = (0..6).collect();
    check(modularity(&edgeless, &singletons) == 0.0, || "edgeless singleton modularity is not 0".into())?;
    Ok(format!("cliques recovered; {phases} phases non-decreasing on {} graphs", graphs.len()))
}

fn lp_balance() -> Outcome {
    let start = Instant::now();
    let g = random_graph(51, 400, 0.02);
    let mut coin = rng::rng(52);
    let (mut pred, mut tp, mut records) = (0usize, 0usize, 0usize);
    for i in 0..g.n_nodes() as u32 {
        for (_, _, y) in lp_evaluation_set(&g, &g, i, rng::derive(53, u64::from(i))) {
            records += 1;
            if coin.gen_bool(0.5) {
                pred += 1;
                tp += usize::from(y);
            }
        }
    }
    let p = tp as f64 / pred as f64;
    let t = start.elapsed();
    check(records >= 1000, || format!("only {records} records"))?;
    check((0.45..=0.55).contains(&p), || format!("precision {p}"))?;
    check(t < Duration::from_secs(30), || format!("took {t:.2?}"))?;
    Ok(format!("precision {p:.4} over {records} records"))
}

fn battery_arithmetic() -> Outcome {
    let recs = |v: &[(&str, f64, f64)]| -> Vec<EvaluationRecord> {
        v.iter().map(|&(k, a, b)| EvaluationRecord::new(k, a, b)).collect()
    };
    let r = recs(&[("a", 0.1, 0.9), ("b", 0.9, 0.8), ("c", 0.2, 0.7), ("d", 0.3, 0.1)]);
    let s = selection_stats(&r).map_err(|e| e.to_string())?;
    check(s.mu == 0.625 && s.p1 == 0.9, || format!("mu {} p1 {}", s.mu, s.p1))?;
    check(s.delta_p1 == 0.8 - 0.9 && s.selected_rank == 2.0 / 3.0, || format!("{s:?}"))?;
    let best = recs(&[("a", 0.9, 0.9), ("b", 0.1, 0.5), ("c", 0.2, 0.4)]);
    let s = selection_stats(&best).unwrap();
    check(s.delta_p1 == 0.0 && s.selected_rank == 1.0, || format!("{s:?}"))?;
    let worst = recs(&[("a", 0.9, 0.0), ("b", 0.1, 0.5), ("c", 0.1, 0.4), ("d", 0.1, 0.3), ("e", 0.1, 0.2)]);
    check(selection_stats(&worst).unwrap().selected_rank == 0.0, || "worst rank is not 0".into())?;

    let ident: Vec<EvaluationRecord> = (0..12).map(|i| EvaluationRecord::new(format!("k{i:02}"), f64::from(i), f64::from(i))).collect();
    check(topk_intersection(&ident, 10) == (10, 10), || "identical orderings".into())?;
    let disjoint: Vec<EvaluationRecord> =
        (0..20).map(|i| EvaluationRecord::new(format!("k{i:02}"), f64::from(i), f64::from(20 - i))).collect();
    check(topk_intersection(&disjoint, 10).0 == 0, || "disjoint top-10".into())?;
    // Validation top-10 is k10..k19; testing top-10 is k05..k14.
    let five: Vec<EvaluationRecord> = (0..20)
        .map(|i| {
            let t = if (5..15).contains(&i) { 100.0 + f64::from(i) } else { f64::from(i) };
            EvaluationRecord::new(format!("k{i:02}"), f64::from(i), t)
        })
        .collect();
    check(topk_intersection(&five, 10).0 == 5, || format!("{:?}", topk_intersection(&five, 10)))?;

    let mm = recs(&[("a", 0.0, 0.9), ("b", 0.0, 0.9), ("c", 0.0, 0.1), ("d", 0.0, 0.1)]);
    check(match_mismatch_groups(&mm, &[0, 0, 1, 1]).unwrap() == -0.8, || "two-group example".into())?;
    let flat = recs(&[("a", 0.0, 0.4), ("b", 0.0, 0.4), ("c", 0.0, 0.4)]);
    check(match_mismatch_groups(&flat, &[0, 0, 1]).unwrap() == 0.0, || "equal precisions".into())?;
    check(match_mismatch_groups(&flat, &[0, 0, 0]).is_err(), || "single group accepted".into())?;

    let rec = |node, p, a| Record {
        partition: Role::Testing,
        node,
        target: Target::Pair(node, 99),
        predicted: p,
        actual: a,
        fallback: Fallback::None,
    };
    let nd_recs: Vec<EvaluationRecord> = ["adjacency", "bfs", "community", "global", "ensemble:degree", "ensemble:random"]
        .iter()
        .enumerate()
        .map(|(i, l)| EvaluationRecord::new(format!("knn:int:0.01|{l}|lp|svm"), 1.0 - 0.1 * i as f64, 1.0 - 0.1 * i as f64))
        .collect();
    let batches: Vec<PredictionBatch> = nd_recs
        .iter()
        .map(|r| PredictionBatch::new(r.config_key.clone(), vec![rec(0, 1, 1), rec(1, 1, 1), rec(1, 1, 0)], BatchStats::default()))
        .collect();
    let (union, nodes) = node_difficulty(&nd_recs, &batches, 5).map_err(|e| e.to_string())?;
    check(union.len() == 5, || format!("union of overlapping top-5 has {}", union.len()))?;
    check(nodes.len() == 2 && nodes[0].precision == 1.0 && nodes[1].precision == 0.5, || format!("{nodes:?}"))?;
    Ok("selection_stats, topk_intersection, match_mismatch and node_difficulty fixtures exact".into())
}

const GRID: &str = r#"
seed = 1
workers = 4

[dataset.synth]
n_nodes = 500

[grid]
models = ["knn", "th"]
measures = ["int", "int-n"]
densities = [0.01, 0.02]
explicit = ["label", "formation"]
localities = ["adjacency", "bfs", "community", "global", "ensemble:degree"]
tasks = ["cc", "lp"]
classifiers = ["svm"]
"#;

fn config(text: &str, seed: u64, workers: usize, out: &Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::from_toml(text).unwrap();
    cfg.seed = seed;
    cfg.workers = workers;
    cfg.out_dir = out.to_path_buf();
    cfg
}

struct SeedRun {
    seed: u64,
    summary: EvaluateSummary,
    wall: Duration,
}

fn determinism(scratch: &Path) -> Outcome {
    let small = GRID
        .replace("n_nodes = 500", "n_nodes = 150")
        .replace("densities = [0.01, 0.02]", "densities = [0.02]")
        .replace("explicit = [\"label\", \"formation\"]", "explicit = [\"label\"]");
    let files = [
        "results.csv",
        "manifest.json",
        "selection.csv",
        "cross_task.csv",
        "match_mismatch.csv",
        "node_difficulty.csv",
    ];
    let mut outputs = Vec::new();
    for (k, workers) in [1, 1, 3].into_iter().enumerate() {
        let dir = scratch.join(format!("det{k}"));
        run_experiment(&config(&small, 5, workers, &dir), false).map_err(|e| e.to_string())?;
        outputs.push(files.map(|f| std::fs::read(dir.join(f)).unwrap()));
    }
    check(outputs[0] == outputs[1], || "rerun changed an output".into())?;
    check(outputs[0] == outputs[2], || "worker count changed an output".into())?;
    Ok(format!("{} files byte-identical across reruns and 1 vs 3 workers", files.len()))
}

fn seed_runs(scratch: &Path) -> Result<Vec<SeedRun>, String> {
    (1..=10u64)
        .map(|seed| {
            let start = Instant::now();
            let summary = run_experiment(&config(GRID, seed, 4, &scratch.join(format!("seed{seed}"))), false)
                .map_err(|e| e.to_string())?;
            Ok(SeedRun {
                seed,
                summary,
                wall: start.elapsed(),
            })
        })
        .collect()
}

fn planted_recovery(runs: &[SeedRun]) -> Outcome {
    let mut hits = [0usize; 2];
    for run in runs {
        let groups = group_records(&run.summary.records).map_err(|e| e.to_string())?;
        for (k, task) in [Task::Cc, Task::Lp].into_iter().enumerate() {
            let s = selection_stats(&groups[&(task, ClassifierKind::LinearSvm)]).map_err(|e| e.to_string())?;
            hits[k] += usize::from(s.bold_delta_p1);
        }
    }
    check(hits[0] >= 8 && hits[1] >= 8, || format!("bold in CC {}/10, LP {}/10", hits[0], hits[1]))?;
    Ok(format!("bold criterion met in CC {}/10 and LP {}/10 seeds", hits[0], hits[1]))
}

fn cross_task_divergence(runs: &[SeedRun]) -> Outcome {
    let mut cc_col = 0;
    let mut lp_col = 0;
    let mut avg_ok = 0;
    for run in runs {
        let groups = group_records(&run.summary.records).map_err(|e| e.to_string())?;
        let clf = ClassifierKind::LinearSvm;
        let t = cross_task(&groups[&(Task::Cc, clf)], &groups[&(Task::Lp, clf)]).map_err(|e| e.to_string())?;
        let d = |s, e| t.get(s, e).map(|c| c.delta_p1).unwrap_or(f64::NEG_INFINITY);
        cc_col += usize::from(d(Selector::Cc, Task::Cc) > d(Selector::Lp, Task::Cc));
        lp_col += usize::from(d(Selector::Lp, Task::Lp) > d(Selector::Cc, Task::Lp));
        let best_diag = d(Selector::Cc, Task::Cc).max(d(Selector::Lp, Task::Lp));
        let best_avg = d(Selector::Average, Task::Cc).max(d(Selector::Average, Task::Lp));
        if best_avg <= best_diag {
            avg_ok += 1;
        } else {
            eprintln!("seed {}: average row {best_avg} beats diagonal {best_diag}", run.seed);
        }
    }
    check(cc_col >= 8 && lp_col >= 8 && avg_ok == runs.len(), || {
        format!("CC column {cc_col}/10, LP column {lp_col}/10, average row held {avg_ok}/10")
    })?;
    Ok(format!("diagonal wins CC column {cc_col}/10, LP column {lp_col}/10; average row never ahead"))
}

fn leakage(runs: &[SeedRun]) -> Outcome {
    let (checks, violations) = runs
        .iter()
        .fold((0u64, 0u64), |a, r| (a.0 + r.summary.audit.checks, a.1 + r.summary.audit.violations));
    check(checks > 0 && violations == 0, || format!("{checks} checks, {violations} violations"))?;
    Ok(format!("{checks} training instances audited, 0 from evaluation partitions"))
}

fn performance(runs: &[SeedRun]) -> Outcome {
    let run = &runs[0];
    let n = run.summary.records.len();
    check(n >= 96, || format!("grid has only {n} configs"))?;
    check(run.wall < Duration::from_secs(600), || format!("took {:.1?}", run.wall))?;
    Ok(format!("{n} configs on 500 nodes in {:.1?} (4 workers)", run.wall))
}

fn main() {
    let scratch = tempfile::tempdir().expect("temp dir");
    let mut results: Vec<(u32, &str, Outcome)> = vec![
        (1, "similarity oracle", similarity_oracle()),
        (2, "graph-model contracts", graph_contracts()),
        (3, "kendall tau oracle", kendall_oracle()),
        (4, "louvain sanity", louvain_sanity()),
        (5, "LP balance baseline", lp_balance()),
    ];
    let runs = seed_runs(scratch.path());
    let from_runs = |f: fn(&[SeedRun]) -> Outcome| runs.as_ref().map_err(Clone::clone).and_then(|r| f(r));
    results.push((6, "planted-model recovery", from_runs(planted_recovery)));
    results.push((7, "cross-task divergence", from_runs(cross_task_divergence)));
    results.push((8, "selection-battery arithmetic", battery_arithmetic()));
    results.push((9, "determinism", determinism(scratch.path())));
    results.push((10, "no-leakage audit", from_runs(leakage)));
    results.push((11, "desk-scale performance", from_runs(performance)));

    let mut failed = 0;
    for (n, name, outcome) in &results {
        match outcome {
            Ok(detail) => println!("criterion {n:>2} {name}: PASS ({detail})"),
            Err(why) => {
                failed += 1;
                println!("criterion {n:>2} {name}: FAIL ({why})");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
