use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::batch::{BatchStats, Fallback, LeakageAudit, PredictionBatch, Record, Target};
use super::config::{Locality, ModelConfig, Task};
use super::neighborhood::{
    community_of, egonet_pairs, ensemble_members, global_pairs, induced_pairs, resolve_neighborhood, Neighborhood,
};
use super::{assemble_pairs, pair_features, TaskContext, EVAL_ROLES};
use crate::community::CommunityAssignment;
use crate::data::Role;
use crate::error::{Error, Result};
use crate::graph::{sample_nonedge_partners, EdgeSet};
use crate::learn::{ensemble_vote, train, Trained};
use crate::rng;

/// Graphs of one LP evaluation: classifiers train on `train`; each
/// evaluation partition predicts its own graph's edges. Non-edges are drawn
/// outside `union`, which must contain all three.
#[derive(Debug, Clone, Copy)]
pub struct LpGraphs<'a> {
    pub train: &'a EdgeSet,
    pub validation: &'a EdgeSet,
    pub testing: &'a EdgeSet,
    pub union: &'a EdgeSet,
}

impl LpGraphs<'_> {
    fn eval(&self, role: Role) -> &EdgeSet {
        match role {
            Role::Validation => self.validation,
            Role::Testing => self.testing,
            Role::Training => self.train,
        }
    }
}

/// Balanced evaluation pairs of node `i`: its incident edges in `g_eval` and
/// as many seeded partners `j` with `{i, j}` outside `union`. When partners
/// run short the edge side is down-sampled to match. Pairs are `(min, max)`
/// and sorted.
pub fn lp_evaluation_set(g_eval: &EdgeSet, union: &EdgeSet, i: u32, seed: u64) -> Vec<(u32, u32, u8)> {
    let mut r = rng::rng(seed);
    let mut pos: Vec<u32> = g_eval.und(i as usize).to_vec();
    let neg = sample_nonedge_partners(union, i, pos.len(), &mut r);
    if neg.len() < pos.len() {
        pos = pos.choose_multiple(&mut r, neg.len()).copied().collect();
    }
    let mut out: Vec<(u32, u32, u8)> = pos
        .into_iter()
        .map(|j| (i.min(j), i.max(j), 1))
        .chain(neg.into_iter().map(|j| (i.min(j), i.max(j), 0)))
        .collect();
    out.sort_unstable();
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Support {
    Node(u32),
    Community(u32),
    Global,
}

type EvalSets = BTreeMap<u32, Vec<(Role, Vec<(u32, u32, u8)>)>>;

/// Link prediction for every node with incident evaluation edges.
pub fn run_lp(
    cfg: &ModelConfig,
    graphs: LpGraphs,
    comm: Option<&CommunityAssignment>,
    ctx: &TaskContext,
) -> Result<PredictionBatch> {
    if cfg.task != Task::Lp {
        return Err(Error::invalid(format!("{} is not an LP config", cfg.key())));
    }
    let seed = cfg.stream_seed();
    let train_part = ctx.parts.training();
    let g = graphs.train;

    let mut stats = BatchStats::default();
    let mut tests: EvalSets = BTreeMap::new();
    for (r, role) in EVAL_ROLES.into_iter().enumerate() {
        let ge = graphs.eval(role);
        for i in 0..ge.n_nodes() as u32 {
            if ge.und_degree(i as usize) == 0 {
                continue;
            }
            let set = lp_evaluation_set(ge, graphs.union, i, rng::derive_all(seed, &[0xe7a1, r as u64, u64::from(i)]));
            if set.is_empty() {
                stats.skipped += 1;
                continue;
            }
            tests.entry(i).or_default().push((role, set));
        }
    }

    let global = global_pairs(g, ctx.locality.global_sample, rng::derive(seed, 0x91))?;
    let global_seed = rng::derive(seed, u64::MAX);

    if let Locality::Ensemble(order) = cfg.locality {
        let members = ensemble_members(g, order, &train_part.matrix, ctx.locality.ensemble_k, rng::derive(seed, 0xe5));
        return run_ensemble(cfg, g, &members, &tests, ctx, &global, global_seed, stats);
    }

    let members = comm.map(CommunityAssignment::members);
    let mut groups: BTreeMap<Support, Vec<(u32, Fallback)>> = BTreeMap::new();
    for &i in tests.keys() {
        let (support, flag) = match cfg.locality {
            Locality::Global => (Support::Global, Fallback::None),
            Locality::Community => {
                let comm = comm.ok_or_else(|| Error::invalid("community locality needs a community assignment"))?;
                let members = members.as_ref().expect("members with comm");
                match community_of(comm, members, i as usize, ctx.locality.community_min_size) {
                    Some(c) => (Support::Community(c), Fallback::None),
                    None => (Support::Global, Fallback::Global),
                }
            }
            _ => (Support::Node(i), Fallback::None),
        };
        groups.entry(support).or_default().push((i, flag));
    }

    let parts: Vec<Result<(Vec<Record>, BatchStats)>> = groups
        .par_iter()
        .map(|(&support, nodes)| {
            let mut stats = BatchStats::default();
            let (pairs, model_seed) = match support {
                Support::Global => (global.clone(), global_seed),
                Support::Community(c) => {
                    let members = members.as_ref().expect("community support has members");
                    let s = rng::derive(seed, 1 << 40 | u64::from(c));
                    (induced_pairs(g, &members[c as usize], s), rng::derive(s, 1))
                }
                Support::Node(i) => {
                    match resolve_neighborhood(g, cfg.locality, Task::Lp, i as usize, comm, ctx.locality, seed)? {
                        Neighborhood::Pairs(p) => (p, rng::derive_all(seed, &[u64::from(i), 0x1b])),
                        Neighborhood::Nodes(_) => unreachable!("LP neighborhoods are pair sets"),
                    }
                }
            };
            let model = train_lp(cfg, ctx, &pairs, model_seed, &mut stats.audit);
            let mut records = Vec::new();
            for &(i, flag) in nodes {
                if flag == Fallback::Global {
                    stats.global_fallback += 1;
                }
                predict_node(i, &tests[&i], ctx, flag, &mut stats, &mut records, |x| {
                    model.as_ref().map(|m| m.predict(x))
                });
            }
            Ok((records, stats))
        })
        .collect();

    let mut records = Vec::new();
    for p in parts {
        let (r, s) = p?;
        records.extend(r);
        stats.merge(s);
    }
    Ok(PredictionBatch::new(cfg.key(), records, stats))
}

/// LP classifiers need both classes.
fn train_lp(
    cfg: &ModelConfig,
    ctx: &TaskContext,
    pairs: &[(u32, u32, u8)],
    seed: u64,
    audit: &mut LeakageAudit,
) -> Option<Trained> {
    let data = assemble_pairs(ctx.parts.training(), pairs, audit);
    if data.single_class().is_some() {
        return None;
    }
    train(cfg.classifier, ctx.learn, data, seed)
}

fn predict_node(
    i: u32,
    sets: &[(Role, Vec<(u32, u32, u8)>)],
    ctx: &TaskContext,
    flag: Fallback,
    stats: &mut BatchStats,
    records: &mut Vec<Record>,
    mut predict: impl FnMut(&crate::sparse::SparseVec) -> Option<u8>,
) {
    for (role, set) in sets {
        let part = ctx.parts.get(*role);
        for &(u, v, actual) in set {
            let x = pair_features(part, u, v);
            let (predicted, fallback) = match predict(&x) {
                Some(p) => (p, flag),
                None => {
                    stats.untrainable += 1;
                    (0, Fallback::Untrainable)
                }
            };
            records.push(Record {
                partition: *role,
                node: i,
                target: Target::Pair(u, v),
                predicted,
                actual,
                fallback,
            });
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn run_ensemble(
    cfg: &ModelConfig,
    g: &EdgeSet,
    members: &[u32],
    tests: &EvalSets,
    ctx: &TaskContext,
    global: &[(u32, u32, u8)],
    global_seed: u64,
    mut stats: BatchStats,
) -> Result<PredictionBatch> {
    let seed = cfg.stream_seed();
    let train_part = ctx.parts.training();
    let knn = ctx.locality.ensemble_knn;
    let trained: Vec<(u32, Option<Trained>, LeakageAudit)> = members
        .par_iter()
        .map(|&m| {
            let mut audit = LeakageAudit::default();
            let pairs = egonet_pairs(g, m as usize, rng::derive(seed, u64::from(m)))?;
            let model = train_lp(cfg, ctx, &pairs, rng::derive_all(seed, &[u64::from(m), 0x1b]), &mut audit);
            Ok((m, model, audit))
        })
        .collect::<Result<_>>()?;
    let mut ensemble: Vec<(u32, &Trained)> = Vec::new();
    for (m, model, audit) in &trained {
        stats.audit.merge(*audit);
        if let Some(model) = model {
            ensemble.push((*m, model));
        }
    }
    let fallback_model = if ensemble.len() < knn {
        train_lp(cfg, ctx, global, global_seed, &mut stats.audit)
    } else {
        None
    };

    let measure = cfg.network.similarity();
    let mut records = Vec::new();
    for (&i, sets) in tests {
        let query = train_part.matrix.row(i as usize);
        if ensemble.len() >= knn {
            predict_node(i, sets, ctx, Fallback::None, &mut stats, &mut records, |x| {
                let votes: Vec<(u32, u8)> = ensemble.iter().map(|(m, model)| (*m, model.predict(x))).collect();
                Some(ensemble_vote(&votes, query, measure, knn, &train_part.matrix))
            });
        } else {
            stats.global_fallback += 1;
            predict_node(i, sets, ctx, Fallback::Global, &mut stats, &mut records, |x| {
                fallback_model.as_ref().map(|m| m.predict(x))
            });
        }
    }
    Ok(PredictionBatch::new(cfg.key(), records, stats))
}
