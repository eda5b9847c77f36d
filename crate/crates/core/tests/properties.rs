//! Invariants over random inputs.

mod common;

use std::collections::BTreeSet;

use netsel::community::{louvain, louvain_with, modularity, LouvainOptions};
use netsel::data::{
    derive_labels, partition_by_time, synth_generate, Event, EventLog, IdMap, LabelRule, PartitionOptions, Role,
    SynthSpec,
};
use netsel::graph::{bfs_neighborhood, egonet, sample_nonedges, split_edges_random, EdgeSet};
use netsel::learn::ClassifierKind;
use netsel::selection::{kendall_tau, selection_stats, topk_intersection, EvaluationRecord};
use netsel::similarity::{knn_graph, sim, threshold_graph, Measure};
use netsel::tasks::{
    BatchStats, EnsembleOrder, Fallback, Locality, ModelConfig, NetworkModel, NetworkSpec, PredictionBatch, Record,
    Target, Task,
};
use proptest::prelude::*;

use common::{dense, dense_sim, kendall_brute, random_graph, random_matrix};

fn cfg() -> ProptestConfig {
    ProptestConfig::with_cases(48)
}

proptest! {
    #![proptest_config(cfg())]

    #[test]
    fn sparse_similarity_equals_dense_loop(seed in any::<u64>(), n in 2usize..25, items in 1usize..30) {
        let m = random_matrix(seed, n, items, 0.3);
        let d = dense(&m, items);
        for measure in [Measure::Int, Measure::IntN] {
            for i in 0..n {
                for j in 0..n {
                    let s = sim(measure, m.row(i), m.row(j)).unwrap();
                    prop_assert_eq!(s, dense_sim(measure, &d[i], &d[j]));
                    prop_assert_eq!(s, sim(measure, m.row(j), m.row(i)).unwrap());
                }
            }
        }
    }

    #[test]
    fn intn_scale_invariant_int_linear(seed in any::<u64>(), c in 1u32..8) {
        let m = random_matrix(seed, 2, 20, 0.5);
        let (a, b) = (m.row(0), m.row(1));
        let c = f64::from(c);
        let (sa, sb) = (a.scaled(c), b.scaled(c));
        // Integer values times a small integer stay exact.
        prop_assert_eq!(sim(Measure::IntN, &sa, &sb).unwrap(), sim(Measure::IntN, a, b).unwrap());
        prop_assert_eq!(sim(Measure::Int, &sa, &sb).unwrap(), c * sim(Measure::Int, a, b).unwrap());
    }

    #[test]
    fn knn_degree_bounded_by_quota(seed in any::<u64>(), n in 3usize..30, k in 1usize..8, extra in 0usize..30) {
        let m = random_matrix(seed, n, 15, 0.25);
        let lambda = k * n + extra % n;
        let d = dense(&m, 15);
        let g = knn_graph(&m, Measure::Int, lambda).unwrap();
        prop_assert_eq!(lambda / n, k);
        for i in 0..n {
            let positive = (0..n).filter(|&j| j != i && dense_sim(Measure::Int, &d[i], &d[j]) > 0.0).count();
            prop_assert_eq!(g.out(i).len(), k.min(positive));
        }
    }

    #[test]
    fn threshold_graphs_nest(seed in any::<u64>(), n in 3usize..30, l1 in 1usize..60, extra in 0usize..60) {
        let m = random_matrix(seed, n, 15, 0.25);
        let small = threshold_graph(&m, Measure::IntN, l1).unwrap();
        let large = threshold_graph(&m, Measure::IntN, l1 + extra).unwrap();
        for e in small.edges() {
            prop_assert!(large.linked(e.u, e.v));
        }
        let d = dense(&m, 15);
        let positive = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter(|&(i, j)| dense_sim(Measure::IntN, &d[i], &d[j]) > 0.0)
            .count();
        prop_assert_eq!(small.len(), l1.min(positive));
    }

    #[test]
    fn egonet_pairs_partition_node_pairs(seed in any::<u64>(), n in 2usize..30, i in 0usize..30) {
        let g = random_graph(seed, n, 0.2);
        let i = i % n;
        let ego = egonet(&g, i).unwrap();
        let k = ego.nodes.len();
        prop_assert_eq!(ego.edges.len() + ego.non_edges.len(), k * (k - 1) / 2);
        let edges: BTreeSet<_> = ego.edges.iter().collect();
        prop_assert!(ego.non_edges.iter().all(|p| !edges.contains(p)));
        prop_assert!(ego.edges.iter().all(|&(u, v)| g.linked(u, v)));
        prop_assert!(ego.non_edges.iter().all(|&(u, v)| !g.linked(u, v)));
    }

    #[test]
    fn bfs_is_prefix_closed(seed in any::<u64>(), n in 2usize..40, i in 0usize..40, k1 in 1usize..40, k2 in 1usize..40) {
        let g = random_graph(seed, n, 0.1);
        let i = i % n;
        let (lo, hi) = (k1.min(k2), k1.max(k2));
        let a = bfs_neighborhood(&g, i, lo).unwrap();
        let b = bfs_neighborhood(&g, i, hi).unwrap();
        prop_assert_eq!(&a[..], &b[..a.len()]);
        prop_assert!(!b.contains(&(i as u32)));
    }

    #[test]
    fn split_slices_disjoint_and_cover(seed in any::<u64>(), n in 2usize..40, split_seed in any::<u64>()) {
        let g = random_graph(seed, n, 0.2);
        let parts = split_edges_random(&g, [0.5, 0.25, 0.25], split_seed).unwrap();
        let mut seen = BTreeSet::new();
        for p in &parts {
            for e in p.edges() {
                prop_assert!(seen.insert((e.u, e.v)));
            }
        }
        let all: BTreeSet<_> = g.edges().iter().map(|e| (e.u, e.v)).collect();
        prop_assert_eq!(seen, all);
        let union = EdgeSet::union_undirected(&[&parts[0], &parts[1], &parts[2]]);
        prop_assert_eq!(union.und_len(), g.und_len());
    }

    #[test]
    fn sampled_nonedges_avoid_union(seed in any::<u64>(), p in 0.05f64..0.6, frac in 0.0f64..1.0) {
        let g = random_graph(seed, 50, p);
        let available = 50 * 49 / 2 - g.und_len();
        let count = (frac * available as f64) as usize;
        let pairs = sample_nonedges(&g, count, seed ^ 7).unwrap();
        prop_assert_eq!(pairs.len(), count);
        prop_assert!(pairs.iter().all(|&(u, v)| u < v && !g.linked(u, v)));
        prop_assert_eq!(pairs.iter().collect::<BTreeSet<_>>().len(), count);
        prop_assert!(sample_nonedges(&g, available + 1, seed).is_err());
    }

    #[test]
    fn louvain_reports_its_own_modularity(seed in any::<u64>(), n in 2usize..60, p in 0.02f64..0.4) {
        let g = random_graph(seed, n, p);
        let a = louvain(&g, seed);
        prop_assert_eq!(modularity(&g, &a.labels), a.modularity);
        let singletons: Vec<u32> = (0..n as u32).collect();
        prop_assert!(a.modularity >= modularity(&g, &singletons));
        prop_assert!(a.modularity >= modularity(&g, &vec![0; n]));
        let mut phases = Vec::new();
        let b = louvain_with(&g, seed, LouvainOptions::default(), |r| phases.push(*r));
        prop_assert_eq!(&b, &a);
        for r in phases {
            prop_assert!(r.after >= r.before, "phase {} lowered modularity", r.phase);
        }
    }

    #[test]
    fn kendall_matches_pair_enumeration(seed in any::<u64>(), n in 2usize..120, levels in 2u32..12) {
        let mut r = netsel::rng::rng(seed);
        use rand::Rng as _;
        let x: Vec<f64> = (0..n).map(|_| f64::from(r.gen_range(0..levels))).collect();
        let y: Vec<f64> = (0..n).map(|_| f64::from(r.gen_range(0..levels))).collect();
        let (tau, _) = kendall_tau(&x, &y).unwrap();
        let brute = kendall_brute(&x, &y);
        prop_assert!(tau == brute || (tau.is_nan() && brute.is_nan()), "{tau} vs {brute}");
    }
}

fn records_from(v: &[(u8, u8)]) -> Vec<EvaluationRecord> {
    v.iter()
        .enumerate()
        .map(|(k, &(a, b))| EvaluationRecord::new(format!("c{k:03}"), f64::from(a) / 8.0, f64::from(b) / 8.0))
        .collect()
}

proptest! {
    #![proptest_config(cfg())]

    #[test]
    fn delta_p1_nonpositive_and_zero_at_testing_argmax(v in prop::collection::vec((0u8..9, 0u8..9), 1..40)) {
        let recs = records_from(&v);
        let rep = selection_stats(&recs).unwrap();
        prop_assert!(rep.delta_p1 <= 0.0);
        let best_test = recs.iter().map(|r| r.precision_testing).fold(f64::MIN, f64::max);
        let sel = recs.iter().find(|r| r.config_key == rep.selected_key).unwrap();
        prop_assert_eq!(rep.delta_p1 == 0.0, sel.precision_testing == best_test);
        prop_assert!((0.0..=1.0).contains(&rep.selected_rank));
    }

    #[test]
    fn rank_endpoints_and_strict_order(n in 2usize..30, pick in 0usize..30) {
        // Distinct testing values; the validation favourite is `pick`.
        let pick = pick % n;
        let recs: Vec<EvaluationRecord> = (0..n)
            .map(|k| EvaluationRecord::new(format!("c{k:03}"), f64::from(u8::from(k == pick)), k as f64 / n as f64))
            .collect();
        let rep = selection_stats(&recs).unwrap();
        // Testing order is descending, so record k sits at position n-1-k.
        prop_assert_eq!(rep.selected_rank, pick as f64 / (n - 1) as f64);
        if pick == n - 1 {
            prop_assert_eq!(rep.selected_rank, 1.0);
        }
        if pick == 0 {
            prop_assert_eq!(rep.selected_rank, 0.0);
        }
    }

    #[test]
    fn topk_symmetric_and_order_free(v in prop::collection::vec((0u8..9, 0u8..9), 1..40), k in 1usize..15, rot in 0usize..40) {
        let recs = records_from(&v);
        let swapped: Vec<EvaluationRecord> = recs
            .iter()
            .map(|r| EvaluationRecord::new(r.config_key.clone(), r.precision_testing, r.precision_validation))
            .collect();
        let mut rotated = recs.clone();
        rotated.rotate_left(rot % recs.len());
        rotated.reverse();
        let base = topk_intersection(&recs, k);
        prop_assert_eq!(base, topk_intersection(&swapped, k));
        prop_assert_eq!(base, topk_intersection(&rotated, k));
        // Debug output, since NaN taus never compare equal.
        let a = format!("{:?}", selection_stats(&recs).unwrap());
        prop_assert_eq!(a, format!("{:?}", selection_stats(&rotated).unwrap()));
    }
}

fn network_strategy() -> impl Strategy<Value = NetworkSpec> {
    prop_oneof![
        (prop::bool::ANY, prop::bool::ANY, 1u32..200).prop_map(|(knn, intn, d)| {
            let model = if knn { NetworkModel::Knn } else { NetworkModel::Th };
            let measure = if intn { Measure::IntN } else { Measure::Int };
            NetworkSpec::inferred(model, measure, f64::from(d) / 1000.0)
        }),
        ("[a-z][a-z0-9_-]{0,8}", prop::option::of(1u32..=4)).prop_map(|(name, f)| {
            NetworkSpec::explicit(name, f.map(|f| f64::from(f) / 4.0))
        }),
    ]
}

fn locality_strategy() -> impl Strategy<Value = Locality> {
    prop::sample::select(vec![
        Locality::Adjacency,
        Locality::Bfs,
        Locality::Community,
        Locality::Global,
        Locality::Ensemble(EnsembleOrder::Degree),
        Locality::Ensemble(EnsembleOrder::AttrSum),
        Locality::Ensemble(EnsembleOrder::AttrUnique),
        Locality::Ensemble(EnsembleOrder::Random),
    ])
}

fn config_strategy() -> impl Strategy<Value = ModelConfig> {
    (
        network_strategy(),
        locality_strategy(),
        prop::bool::ANY,
        prop::sample::select(vec![ClassifierKind::LinearSvm, ClassifierKind::RandomForest]),
    )
        .prop_map(|(network, locality, cc, classifier)| ModelConfig {
            network,
            locality,
            task: if cc { Task::Cc } else { Task::Lp },
            classifier,
            seed: 0,
        })
}

proptest! {
    #![proptest_config(cfg())]

    #[test]
    fn config_keys_roundtrip_and_are_injective(a in config_strategy(), b in config_strategy()) {
        prop_assert_eq!(&ModelConfig::parse_key(&a.key(), 0).unwrap(), &a);
        prop_assert_eq!(a.key() == b.key(), a == b);
    }

    #[test]
    fn batch_tsv_roundtrip(cc in prop::bool::ANY, raw in prop::collection::vec((0u32..50, 0u32..50, 0u8..2, 0u8..2, 0u8..3, prop::bool::ANY), 0..60)) {
        let records = raw
            .into_iter()
            .map(|(node, t, predicted, actual, fb, val)| Record {
                partition: if val { Role::Validation } else { Role::Testing },
                node,
                target: if cc { Target::Label(t) } else { Target::Pair(node.min(t), node.max(t) + 1) },
                predicted,
                actual,
                fallback: [Fallback::None, Fallback::Untrainable, Fallback::Global][fb as usize],
            })
            .collect();
        let key = if cc { "knn:int:0.01|adjacency|cc|svm" } else { "th:int-n:0.02|global|lp|rf" };
        let batch = PredictionBatch::new(key.into(), records, BatchStats::default());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("b.tsv");
        batch.write_tsv(&path).unwrap();
        prop_assert_eq!(PredictionBatch::read_tsv(&path).unwrap(), batch);
    }

    #[test]
    fn edgeset_tsv_roundtrip(seed in any::<u64>(), n in 1usize..40, knn in prop::bool::ANY) {
        let g = if knn {
            knn_graph(&random_matrix(seed, n, 10, 0.3), Measure::IntN, 2 * n).unwrap()
        } else {
            random_graph(seed, n, 0.2)
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.tsv");
        g.write_tsv(&path).unwrap();
        let back = EdgeSet::read_tsv(&path).unwrap();
        prop_assert_eq!(back.is_directed(), g.is_directed());
        prop_assert_eq!(back.n_nodes(), g.n_nodes());
        let pairs = |s: &EdgeSet| s.edges().iter().map(|e| (e.u, e.v)).collect::<Vec<_>>();
        prop_assert_eq!(pairs(&back), pairs(&g));
        prop_assert_eq!(back.provenance(), g.provenance());
    }
}

fn random_log(seed: u64, n_events: usize) -> EventLog {
    use rand::Rng as _;
    let mut r = netsel::rng::rng(seed);
    let n_nodes = 12;
    EventLog {
        events: (0..n_events)
            .map(|_| Event {
                node: r.gen_range(0..n_nodes),
                item: r.gen_range(0..20),
                value: f64::from(r.gen_range(1..6u32)),
                timestamp: r.gen_range(0..40),
            })
            .collect(),
        ids: IdMap::identity(n_nodes as usize),
    }
}

proptest! {
    #![proptest_config(cfg())]

    #[test]
    fn partitioning_conserves_mass_and_splits_timestamps(seed in any::<u64>(), n in 1usize..300) {
        let log = random_log(seed, n);
        let parts = partition_by_time(&log, &PartitionOptions::default()).unwrap();
        let mass: f64 = parts.segments.iter().map(|s| s.matrix.total_mass()).sum();
        prop_assert_eq!(mass, log.total_value());
        let (b1, b2) = parts.boundaries;
        let seg = |t: i64| usize::from(t >= b1) + usize::from(t >= b2);
        let mut per_segment = [0usize; 3];
        for e in &log.events {
            per_segment[seg(e.timestamp)] += 1;
        }
        let counts: Vec<usize> = parts.segments.iter().map(|s| s.n_events).collect();
        prop_assert_eq!(counts, per_segment.to_vec());
    }

    #[test]
    fn label_derivation_is_idempotent(seed in any::<u64>(), min_count in 1usize..4) {
        let log = random_log(seed, 200);
        let mut parts = partition_by_time(&log, &PartitionOptions::default()).unwrap();
        let rules = vec![
            LabelRule::new("a", (0..10).collect(), min_count, 1.0).unwrap(),
            LabelRule::new("b", (5..20).collect(), min_count, 2.0).unwrap(),
        ];
        parts.apply_label_rules(&rules);
        let once = parts.clone();
        parts.apply_label_rules(&rules);
        prop_assert_eq!(&once, &parts);
        let m = &parts.get(Role::Training).matrix;
        prop_assert_eq!(derive_labels(m, &rules), derive_labels(m, &rules));
    }
}

#[test]
fn synth_is_reproducible_per_seed() {
    let spec = SynthSpec {
        n_nodes: 80,
        n_items: 200,
        ..Default::default()
    };
    let a = synth_generate(5, &spec).unwrap();
    let b = synth_generate(5, &spec).unwrap();
    let c = synth_generate(6, &spec).unwrap();
    assert_eq!(a.log, b.log);
    assert_eq!(a.label_graph, b.label_graph);
    assert_eq!(a.formation_graph, b.formation_graph);
    assert_ne!(a.log, c.log);
}
