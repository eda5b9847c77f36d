use serde::{Deserialize, Serialize};

use super::events::EventLog;
use super::labels::{derive_labels, LabelRule, LabelSetCollection};
use super::matrix::{Aggregation, AttributeMatrix};
use crate::error::{Error, Result};

/// What a time segment is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Validation,
    Training,
    Testing,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Validation => "validation",
            Role::Training => "training",
            Role::Testing => "testing",
        }
    }

    pub fn parse(s: &str) -> Option<Role> {
        match s {
            "validation" => Some(Role::Validation),
            "training" => Some(Role::Training),
            "testing" => Some(Role::Testing),
            _ => None,
        }
    }
}

impl std::fmt::Display for Role {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PartitionMode {
    /// Boundaries at the 1/3 and 2/3 timestamp quantiles.
    EqualFrequency,
    /// Segments `[-inf, b1)`, `[b1, b2)`, `[b2, inf)`.
    Explicit(i64, i64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartitionOptions {
    pub mode: PartitionMode,
    /// Role of each segment in time order.
    pub roles: [Role; 3],
    pub aggregation: Aggregation,
}

impl Default for PartitionOptions {
    fn default() -> Self {
        PartitionOptions {
            mode: PartitionMode::EqualFrequency,
            roles: [Role::Validation, Role::Training, Role::Testing],
            aggregation: Aggregation::Sum,
        }
    }
}

/// One contiguous time segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub role: Role,
    pub matrix: AttributeMatrix,
    pub labels: LabelSetCollection,
    pub n_events: usize,
    pub event_mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionedDataset {
    pub n_nodes: usize,
    /// Segments in time order.
    pub segments: Vec<Partition>,
    pub boundaries: (i64, i64),
    pub warnings: Vec<String>,
}

impl PartitionedDataset {
    pub fn get(&self, role: Role) -> &Partition {
        self.segments
            .iter()
            .find(|p| p.role == role)
            .expect("every role is assigned exactly once")
    }

    pub fn training(&self) -> &Partition {
        self.get(Role::Training)
    }

    /// Re-derive labelsets independently in every segment.
    pub fn apply_label_rules(&mut self, rules: &[LabelRule]) {
        for seg in &mut self.segments {
            seg.labels = derive_labels(&seg.matrix, rules);
        }
    }

    pub fn n_labelsets(&self) -> usize {
        self.segments[0].labels.len()
    }
}

fn equal_frequency_boundaries(log: &EventLog) -> Result<(i64, i64)> {
    if log.is_empty() {
        return Err(Error::invalid("equal-frequency partitioning needs a non-empty event log"));
    }
    let mut ts: Vec<i64> = log.events.iter().map(|e| e.timestamp).collect();
    ts.sort_unstable();
    let n = ts.len();
    // Each segment ends just after the timestamp that closes its third, so a
    // timestamp never straddles two segments.
    let first = n.div_ceil(3);
    let second = (2 * n).div_ceil(3);
    let b1 = ts[first - 1] + 1;
    let b2 = ts[second.max(1) - 1] + 1;
    Ok((b1, b2.max(b1)))
}

/// Split events into three time segments and aggregate each into a matrix.
///
/// Labels are left empty; call [`PartitionedDataset::apply_label_rules`].
pub fn partition_by_time(log: &EventLog, opts: &PartitionOptions) -> Result<PartitionedDataset> {
    let mut roles = opts.roles.to_vec();
    roles.sort();
    roles.dedup();
    if roles.len() != 3 {
        return Err(Error::invalid("segment roles must name validation, training and testing once each"));
    }
    let (b1, b2) = match opts.mode {
        PartitionMode::EqualFrequency => equal_frequency_boundaries(log)?,
        PartitionMode::Explicit(b1, b2) => {
            if b1 > b2 {
                return Err(Error::invalid(format!("partition boundaries out of order: {b1} > {b2}")));
            }
            (b1, b2)
        }
    };
    let segment_of = |t: i64| -> usize {
        if t < b1 {
            0
        } else if t < b2 {
            1
        } else {
            2
        }
    };
    let mut buckets: [Vec<_>; 3] = Default::default();
    for e in &log.events {
        buckets[segment_of(e.timestamp)].push(e);
    }
    let n_nodes = log.n_nodes();
    let mut warnings = Vec::new();
    let mut segments = Vec::with_capacity(3);
    for (k, bucket) in buckets.iter().enumerate() {
        let role = opts.roles[k];
        if bucket.is_empty() {
            let w = format!("{role} segment is empty");
            log::warn!("{w}");
            warnings.push(w);
        }
        let matrix = AttributeMatrix::from_events(n_nodes, bucket.iter().copied(), opts.aggregation)?;
        segments.push(Partition {
            role,
            matrix,
            labels: LabelSetCollection {
                n_nodes,
                labelsets: Vec::new(),
            },
            n_events: bucket.len(),
            event_mass: bucket.iter().map(|e| e.value).sum(),
        });
    }
    Ok(PartitionedDataset {
        n_nodes,
        segments,
        boundaries: (b1, b2),
        warnings,
    })
}
