use std::collections::BTreeMap;

use rayon::prelude::*;

use super::batch::{BatchStats, Fallback, LeakageAudit, PredictionBatch, Record, Target};
use super::config::{Locality, ModelConfig, Task};
use super::neighborhood::{community_of, ensemble_members, global_nodes, resolve_neighborhood, Neighborhood};
use super::{assemble_nodes, TaskContext, EVAL_ROLES};
use crate::community::CommunityAssignment;
use crate::data::Role;
use crate::error::{Error, Result};
use crate::graph::EdgeSet;
use crate::learn::{ensemble_vote, train, Trained};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Support {
    Node(u32),
    Global,
}

/// Collective classification of every evaluation-partition positive.
///
/// Classifiers train on the neighborhood's training-partition attributes and
/// labels, then predict from the test node's evaluation-partition attributes.
/// Each test node is trained once per labelset and predicted in every
/// evaluation partition where it is positive.
pub fn run_cc(
    cfg: &ModelConfig,
    g: &EdgeSet,
    comm: Option<&CommunityAssignment>,
    ctx: &TaskContext,
) -> Result<PredictionBatch> {
    if cfg.task != Task::Cc {
        return Err(Error::invalid(format!("{} is not a CC config", cfg.key())));
    }
    let seed = cfg.stream_seed();
    let train_part = ctx.parts.training();
    let n_labelsets = ctx.parts.n_labelsets();

    // (node, labelset) → partitions where the node is positive.
    let mut tests: BTreeMap<(u32, u32), Vec<Role>> = BTreeMap::new();
    for role in EVAL_ROLES {
        let part = ctx.parts.get(role);
        for (l, set) in part.labels.labelsets.iter().enumerate() {
            for i in set.positives() {
                tests.entry((i as u32, l as u32)).or_default().push(role);
            }
        }
    }

    if let Locality::Ensemble(order) = cfg.locality {
        let members = ensemble_members(g, order, &train_part.matrix, ctx.locality.ensemble_k, rng::derive(seed, 0xe5));
        return run_ensemble(cfg, g, &members, &tests, ctx, n_labelsets);
    }

    let members = comm.map(CommunityAssignment::members);
    let mut global_fallback = 0;
    let mut groups: BTreeMap<(Support, u32), Vec<(u32, &Vec<Role>, Fallback)>> = BTreeMap::new();
    for (&(i, l), roles) in &tests {
        let (support, flag) = match cfg.locality {
            Locality::Global => (Support::Global, Fallback::None),
            Locality::Community => {
                let comm = comm.ok_or_else(|| Error::invalid("community locality needs a community assignment"))?;
                let members = members.as_ref().expect("members with comm");
                match community_of(comm, members, i as usize, ctx.locality.community_min_size) {
                    Some(_) => (Support::Node(i), Fallback::None),
                    None => {
                        global_fallback += roles.len();
                        (Support::Global, Fallback::Global)
                    }
                }
            }
            _ => (Support::Node(i), Fallback::None),
        };
        groups.entry((support, l)).or_default().push((i, roles, flag));
    }

    let global = global_nodes(g.n_nodes(), ctx.locality.global_sample, rng::derive(seed, 0x91));
    let parts: Vec<Result<(Vec<Record>, BatchStats)>> = groups
        .par_iter()
        .map(|(&(support, l), tests)| {
            let mut stats = BatchStats::default();
            let nodes = match support {
                Support::Global => global.clone(),
                Support::Node(i) => {
                    match resolve_neighborhood(g, cfg.locality, Task::Cc, i as usize, comm, ctx.locality, seed)? {
                        Neighborhood::Nodes(v) => v,
                        Neighborhood::Pairs(_) => unreachable!("CC neighborhoods are node sets"),
                    }
                }
            };
            let model_seed = match support {
                Support::Global => rng::derive_all(seed, &[u64::MAX, u64::from(l)]),
                Support::Node(i) => rng::derive_all(seed, &[u64::from(i), u64::from(l)]),
            };
            let data = assemble_nodes(train_part, &nodes, l as usize, ctx.positives_only, &mut stats.audit);
            let model = train(cfg.classifier, ctx.learn, data, model_seed);
            let mut records = Vec::new();
            for &(i, roles, flag) in tests {
                for &role in roles {
                    let x = ctx.parts.get(role).matrix.row(i as usize);
                    let (predicted, fallback) = match &model {
                        Some(m) => (m.predict(x), flag),
                        None => {
                            stats.untrainable += 1;
                            (0, Fallback::Untrainable)
                        }
                    };
                    records.push(Record {
                        partition: role,
                        node: i,
                        target: Target::Label(l),
                        predicted,
                        actual: 1,
                        fallback,
                    });
                }
            }
            Ok((records, stats))
        })
        .collect();

    let mut stats = BatchStats {
        global_fallback,
        ..Default::default()
    };
    let mut records = Vec::new();
    for p in parts {
        let (r, s) = p?;
        records.extend(r);
        stats.merge(s);
    }
    Ok(PredictionBatch::new(cfg.key(), records, stats))
}

fn run_ensemble(
    cfg: &ModelConfig,
    g: &EdgeSet,
    members: &[u32],
    tests: &BTreeMap<(u32, u32), Vec<Role>>,
    ctx: &TaskContext,
    n_labelsets: usize,
) -> Result<PredictionBatch> {
    let seed = cfg.stream_seed();
    let train_part = ctx.parts.training();
    let knn = ctx.locality.ensemble_knn;
    let jobs: Vec<(u32, Option<u32>)> = (0..n_labelsets as u32)
        .flat_map(|l| members.iter().map(move |&m| (l, Some(m))).chain(std::iter::once((l, None))))
        .collect();
    let global = global_nodes(g.n_nodes(), ctx.locality.global_sample, rng::derive(seed, 0x91));
    let trained: Vec<(u32, Option<u32>, Option<Trained>, LeakageAudit)> = jobs
        .par_iter()
        .map(|&(l, m)| {
            let mut audit = LeakageAudit::default();
            let (nodes, model_seed) = match m {
                Some(m) => (g.neighbors(m as usize)?.to_vec(), rng::derive_all(seed, &[u64::from(m), u64::from(l)])),
                None => (global.clone(), rng::derive_all(seed, &[u64::MAX, u64::from(l)])),
            };
            let data = assemble_nodes(train_part, &nodes, l as usize, ctx.positives_only, &mut audit);
            Ok((l, m, train(cfg.classifier, ctx.learn, data, model_seed), audit))
        })
        .collect::<Result<_>>()?;

    let mut stats = BatchStats::default();
    let mut per_label: Vec<(Vec<(u32, &Trained)>, Option<&Trained>)> = vec![(Vec::new(), None); n_labelsets];
    for (l, m, model, audit) in &trained {
        stats.audit.merge(*audit);
        match (m, model) {
            (Some(m), Some(model)) => per_label[*l as usize].0.push((*m, model)),
            (None, model) => per_label[*l as usize].1 = model.as_ref(),
            _ => {}
        }
    }

    let measure = cfg.network.similarity();
    let mut records = Vec::new();
    for (&(i, l), roles) in tests {
        let (ensemble, global) = &per_label[l as usize];
        for &role in roles {
            let x = ctx.parts.get(role).matrix.row(i as usize);
            let (predicted, fallback) = if ensemble.len() >= knn {
                let votes: Vec<(u32, u8)> = ensemble.iter().map(|(m, model)| (*m, model.predict(x))).collect();
                let query = train_part.matrix.row(i as usize);
                (ensemble_vote(&votes, query, measure, knn, &train_part.matrix), Fallback::None)
            } else if let Some(model) = global {
                stats.global_fallback += 1;
                (model.predict(x), Fallback::Global)
            } else {
                stats.untrainable += 1;
                (0, Fallback::Untrainable)
            };
            records.push(Record {
                partition: role,
                node: i,
                target: Target::Label(l),
                predicted,
                actual: 1,
                fallback,
            });
        }
    }
    Ok(PredictionBatch::new(cfg.key(), records, stats))
}
