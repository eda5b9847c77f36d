//! Collective classification and link prediction over a network model at a
//! task locality.

mod batch;
mod cc;
mod config;
mod lp;
mod neighborhood;

pub use batch::{BatchStats, Fallback, LeakageAudit, PredictionBatch, Record, Target};
pub use cc::run_cc;
pub use config::{EnsembleOrder, Locality, LocalityParams, ModelConfig, NetworkModel, NetworkSpec, Task};
pub use lp::{lp_evaluation_set, run_lp, LpGraphs};
pub use neighborhood::{
    egonet_pairs, ensemble_members, global_nodes, global_pairs, induced_pairs, resolve_neighborhood, Neighborhood,
};

use crate::data::{Partition, PartitionedDataset, Role};
use crate::learn::{LearnParams, TrainingSet};
use crate::sparse::SparseVec;

/// Shared inputs of the task runners.
#[derive(Debug, Clone, Copy)]
pub struct TaskContext<'a> {
    pub parts: &'a PartitionedDataset,
    pub locality: &'a LocalityParams,
    pub learn: &'a LearnParams,
    /// Train CC classifiers on positive neighbors only.
    pub positives_only: bool,
}

/// Partitions whose records are produced, in record order.
pub const EVAL_ROLES: [Role; 2] = [Role::Validation, Role::Testing];

/// Node instances from `part`: the node's attribute row and its label for
/// `labelset`. Every instance is counted by the audit against the role of the
/// partition it was read from.
pub(crate) fn assemble_nodes(
    part: &Partition,
    nodes: &[u32],
    labelset: usize,
    positives_only: bool,
    audit: &mut LeakageAudit,
) -> TrainingSet {
    let rows = nodes
        .iter()
        .map(|&j| (u64::from(j), part.matrix.row(j as usize).clone(), part.labels.get(labelset, j as usize)))
        .filter(|r| !positives_only || r.2 == 1)
        .collect::<Vec<_>>();
    audit.observe(part.role, rows.len());
    TrainingSet::new(rows)
}

/// Pair instances from `part`: element-wise minimum features.
pub(crate) fn assemble_pairs(part: &Partition, pairs: &[(u32, u32, u8)], audit: &mut LeakageAudit) -> TrainingSet {
    let rows = pairs
        .iter()
        .map(|&(u, v, y)| (pair_key(u, v), pair_features(part, u, v), y))
        .collect::<Vec<_>>();
    audit.observe(part.role, rows.len());
    TrainingSet::new(rows)
}

pub(crate) fn pair_features(part: &Partition, u: u32, v: u32) -> SparseVec {
    crate::learn::edge_features(part.matrix.row(u as usize), part.matrix.row(v as usize))
}

pub(crate) fn pair_key(u: u32, v: u32) -> u64 {
    (u64::from(u.min(v)) << 32) | u64::from(u.max(v))
}
