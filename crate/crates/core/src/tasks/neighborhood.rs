use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng as _;

use super::config::{EnsembleOrder, Locality, LocalityParams, Task};
use crate::community::CommunityAssignment;
use crate::data::AttributeMatrix;
use crate::error::{Error, Result};
use crate::graph::{bfs_neighborhood, egonet, nonedge_count, sample_nonedges, EdgeSet};
use crate::rng;

/// Training support of one test node: nodes for CC, labelled pairs
/// (`1` = edge) for LP.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Neighborhood {
    Nodes(Vec<u32>),
    Pairs(Vec<(u32, u32, u8)>),
}

impl Neighborhood {
    pub fn is_empty(&self) -> bool {
        match self {
            Neighborhood::Nodes(v) => v.is_empty(),
            Neighborhood::Pairs(v) => v.is_empty(),
        }
    }
}

/// Seeded sample of `sample` nodes (all nodes if fewer), sorted.
pub fn global_nodes(n_nodes: usize, sample: usize, seed: u64) -> Vec<u32> {
    let all: Vec<u32> = (0..n_nodes as u32).collect();
    let mut out: Vec<u32> = all.choose_multiple(&mut rng::rng(seed), sample.min(n_nodes)).copied().collect();
    out.sort_unstable();
    out
}

/// Seeded balanced sample of up to `sample` pairs: half edges of `g`, half
/// non-edges of `g`.
pub fn global_pairs(g: &EdgeSet, sample: usize, seed: u64) -> Result<Vec<(u32, u32, u8)>> {
    let mut r = rng::rng(seed);
    let edges = und_pairs(g);
    let k = (sample / 2).min(edges.len()).min(nonedge_count(g));
    let mut out: Vec<(u32, u32, u8)> = edges.choose_multiple(&mut r, k).map(|&(u, v)| (u, v, 1)).collect();
    let non = sample_nonedges(g, k, r.gen())?;
    out.extend(non.into_iter().map(|(u, v)| (u, v, 0)));
    out.sort_unstable();
    Ok(out)
}

fn und_pairs(g: &EdgeSet) -> Vec<(u32, u32)> {
    let mut out = Vec::with_capacity(g.und_len());
    for u in 0..g.n_nodes() {
        for &v in g.und(u) {
            if (u as u32) < v {
                out.push((u as u32, v));
            }
        }
    }
    out
}

/// Edges and non-edges induced on `nodes`, balanced by seeded down-sampling
/// of the larger side. Sorted by pair.
pub fn induced_pairs(g: &EdgeSet, nodes: &[u32], seed: u64) -> Vec<(u32, u32, u8)> {
    let mut nodes = nodes.to_vec();
    nodes.sort_unstable();
    nodes.dedup();
    let member: HashSet<u32> = nodes.iter().copied().collect();
    let mut edges = Vec::new();
    for &u in &nodes {
        for &v in g.und(u as usize) {
            if u < v && member.contains(&v) {
                edges.push((u, v));
            }
        }
    }
    let s = nodes.len();
    let n_non = s * s.saturating_sub(1) / 2 - edges.len();
    let target = edges.len().min(n_non);
    let mut r = rng::rng(seed);
    let mut out: Vec<(u32, u32, u8)> = if edges.len() > target {
        edges.choose_multiple(&mut r, target).map(|&(u, v)| (u, v, 1)).collect()
    } else {
        edges.iter().map(|&(u, v)| (u, v, 1)).collect()
    };
    if target * 2 > n_non {
        let mut all = Vec::with_capacity(n_non);
        for (a, &u) in nodes.iter().enumerate() {
            for &v in &nodes[a + 1..] {
                if !g.linked(u, v) {
                    all.push((u, v));
                }
            }
        }
        out.extend(all.choose_multiple(&mut r, target).map(|&(u, v)| (u, v, 0)));
    } else {
        let mut seen = HashSet::with_capacity(target);
        while seen.len() < target {
            let u = nodes[r.gen_range(0..s)];
            let v = nodes[r.gen_range(0..s)];
            if u == v || g.linked(u, v) {
                continue;
            }
            let p = (u.min(v), u.max(v));
            if seen.insert(p) {
                out.push((p.0, p.1, 0));
            }
        }
    }
    out.sort_unstable();
    out
}

/// Balanced egonet edges and non-edges of `i`.
pub fn egonet_pairs(g: &EdgeSet, i: usize, seed: u64) -> Result<Vec<(u32, u32, u8)>> {
    let ego = egonet(g, i)?;
    Ok(induced_pairs(g, &ego.nodes, seed))
}

/// Community of `i` when it has at least `min_size` members.
pub(crate) fn community_of(comm: &CommunityAssignment, members: &[Vec<u32>], i: usize, min_size: usize) -> Option<u32> {
    let c = comm.labels[i];
    (members[c as usize].len() >= min_size).then_some(c)
}

/// Training support of test node `i` under `locality`.
///
/// The global locality ignores `i` and returns the config-wide sample drawn
/// from `seed`; an undersized community yields an empty set (callers apply
/// the global fallback). Ensembles are resolved by the runners.
pub fn resolve_neighborhood(
    g: &EdgeSet,
    locality: Locality,
    task: Task,
    i: usize,
    comm: Option<&CommunityAssignment>,
    params: &LocalityParams,
    seed: u64,
) -> Result<Neighborhood> {
    let local_seed = rng::derive(seed, i as u64);
    let nodes = match locality {
        Locality::Adjacency => match task {
            Task::Cc => g.neighbors(i)?.to_vec(),
            Task::Lp => return Ok(Neighborhood::Pairs(egonet_pairs(g, i, local_seed)?)),
        },
        Locality::Bfs => {
            let mut v = bfs_neighborhood(g, i, params.bfs_k)?;
            if task == Task::Lp {
                v.push(i as u32);
            }
            v
        }
        Locality::Community => {
            let comm = comm.ok_or_else(|| Error::invalid("community locality needs a community assignment"))?;
            let members = comm.members();
            match community_of(comm, &members, i, params.community_min_size) {
                None => Vec::new(),
                Some(c) => match task {
                    Task::Cc => members[c as usize].iter().copied().filter(|&j| j as usize != i).collect(),
                    Task::Lp => {
                        let s = rng::derive(seed, 1 << 40 | u64::from(c));
                        return Ok(Neighborhood::Pairs(induced_pairs(g, &members[c as usize], s)));
                    }
                },
            }
        }
        Locality::Global => {
            return Ok(match task {
                Task::Cc => Neighborhood::Nodes(global_nodes(g.n_nodes(), params.global_sample, seed)),
                Task::Lp => Neighborhood::Pairs(global_pairs(g, params.global_sample, seed)?),
            })
        }
        Locality::Ensemble(_) => return Err(Error::invalid("ensemble localities are resolved per member")),
    };
    Ok(match task {
        Task::Cc => Neighborhood::Nodes(nodes),
        Task::Lp => Neighborhood::Pairs(induced_pairs(g, &nodes, local_seed)),
    })
}

/// The first `k` nodes under the ensemble ordering; ties by ascending id.
pub fn ensemble_members(g: &EdgeSet, order: EnsembleOrder, train: &AttributeMatrix, k: usize, seed: u64) -> Vec<u32> {
    let n = g.n_nodes();
    let mut nodes: Vec<u32> = (0..n as u32).collect();
    let score = |i: u32| -> f64 {
        match order {
            EnsembleOrder::Degree => g.und_degree(i as usize) as f64,
            EnsembleOrder::AttrSum => train.row_sum(i as usize),
            EnsembleOrder::AttrUnique => train.row_nnz(i as usize) as f64,
            EnsembleOrder::Random => 0.0,
        }
    };
    if order == EnsembleOrder::Random {
        nodes.shuffle(&mut rng::rng(seed));
    } else {
        nodes.sort_by(|&a, &b| score(b).total_cmp(&score(a)).then(a.cmp(&b)));
    }
    nodes.truncate(k);
    nodes
}
