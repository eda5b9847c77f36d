use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::events::Event;
use crate::error::{Error, Result};
use crate::sparse::SparseVec;

/// How repeated events for one `(node, item)` combine inside a partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    /// Total value (play counts).
    #[default]
    Sum,
    /// Average value (ratings).
    Mean,
}

/// Per-node sparse non-negative item vectors.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AttributeMatrix {
    rows: Vec<SparseVec>,
}

impl AttributeMatrix {
    pub fn from_rows(rows: Vec<SparseVec>) -> Result<Self> {
        for r in &rows {
            if let Some(v) = r.values().iter().find(|v| **v < 0.0 || !v.is_finite()) {
                return Err(Error::NegativeValue(*v));
            }
        }
        Ok(AttributeMatrix { rows })
    }

    pub fn empty(n_nodes: usize) -> Self {
        AttributeMatrix {
            rows: vec![SparseVec::new(); n_nodes],
        }
    }

    /// Aggregate events into rows for `n_nodes` nodes.
    pub fn from_events<'a>(
        n_nodes: usize,
        events: impl IntoIterator<Item = &'a Event>,
        aggregation: Aggregation,
    ) -> Result<Self> {
        let mut acc: Vec<HashMap<u32, (f64, u32)>> = vec![HashMap::new(); n_nodes];
        for e in events {
            if e.value < 0.0 || !e.value.is_finite() {
                return Err(Error::NegativeValue(e.value));
            }
            let row = acc.get_mut(e.node as usize).ok_or(Error::NodeOutOfRange {
                node: u64::from(e.node),
                n_nodes,
            })?;
            let slot = row.entry(e.item).or_insert((0.0, 0));
            slot.0 += e.value;
            slot.1 += 1;
        }
        let rows = acc
            .into_iter()
            .map(|row| {
                let pairs = row
                    .into_iter()
                    .map(|(item, (total, count))| match aggregation {
                        Aggregation::Sum => (item, total),
                        Aggregation::Mean => (item, total / f64::from(count)),
                    })
                    .collect();
                SparseVec::from_pairs(pairs)
            })
            .collect();
        Ok(AttributeMatrix { rows })
    }

    pub fn n_nodes(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, i: usize) -> &SparseVec {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[SparseVec] {
        &self.rows
    }

    /// Every item id with a stored entry.
    pub fn item_dictionary(&self) -> BTreeSet<u32> {
        self.rows.iter().flat_map(|r| r.indices().iter().copied()).collect()
    }

    pub fn total_mass(&self) -> f64 {
        self.rows.iter().map(SparseVec::sum).sum()
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.rows[i].sum()
    }

    pub fn row_nnz(&self, i: usize) -> usize {
        self.rows[i].nnz()
    }
}
