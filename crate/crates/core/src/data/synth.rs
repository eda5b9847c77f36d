//! Synthetic attributed networks with two planted structures.
//!
//! Nodes belong to a *label community* (or the unlabeled background) and,
//! independently, to an *edge community*. Label communities drive labelsets
//! through a small group of label items; edge communities drive the bulk of
//! each node's activity through a block of items. The two ground-truth graphs
//! connect nodes within label communities and within edge communities
//! respectively, so the best network for classification and the best one for
//! link prediction differ by construction.

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::events::{Event, EventLog, IdMap};
use super::labels::{LabelRule, LabelRuleKind};
use crate::error::{Error, Result};
use crate::graph::{Edge, EdgeSet, Provenance};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub n_nodes: usize,
    pub n_items: usize,
    /// Number of labelsets, one per label community.
    pub labelsets: usize,
    pub label_items: usize,
    /// Fraction of nodes placed in some label community.
    pub label_fraction: f64,
    /// Items a positive node activates per segment, beyond `label_min_count`.
    pub label_extra: usize,
    pub label_min_count: usize,
    /// Chance a positive node sits out its label group in a segment.
    pub label_dropout: f64,
    /// Chance a node shows sub-threshold activity on a random label group.
    pub confuser_rate: f64,
    pub edge_communities: usize,
    pub edge_items: usize,
    /// Fraction of its block a node touches per segment.
    pub block_coverage: f64,
    pub block_min: u32,
    pub block_max: u32,
    /// Background items per node per segment.
    pub noise_items: usize,
    pub p_in_label: f64,
    pub p_out_label: f64,
    pub p_in_edge: f64,
    pub p_out_edge: f64,
    pub start: i64,
    pub segment_seconds: i64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n_nodes: 500,
            n_items: 1000,
            labelsets: 4,
            label_items: 20,
            label_fraction: 0.5,
            label_extra: 3,
            label_min_count: 5,
            label_dropout: 0.05,
            confuser_rate: 0.3,
            edge_communities: 10,
            edge_items: 40,
            block_coverage: 0.5,
            block_min: 2,
            block_max: 8,
            noise_items: 5,
            p_in_label: 0.08,
            p_out_label: 0.001,
            p_in_edge: 0.1,
            p_out_edge: 0.001,
            start: 1_000_000,
            segment_seconds: 86_400,
        }
    }
}

/// Generator output.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthData {
    pub log: EventLog,
    pub rules: Vec<LabelRule>,
    /// Label community per node; `None` for background nodes.
    pub label_community: Vec<Option<u32>>,
    pub edge_community: Vec<u32>,
    /// Edges within label communities.
    pub label_graph: EdgeSet,
    /// Edges within edge communities.
    pub formation_graph: EdgeSet,
    /// Segment boundaries `(b1, b2)` of the three generated segments.
    pub boundaries: (i64, i64),
}

const MIN_LABEL_VALUE: u32 = 5;

impl SynthSpec {
    fn validate(&self) -> Result<()> {
        if self.n_nodes < 10 {
            return Err(Error::invalid("synth needs at least 10 nodes"));
        }
        if self.n_items == 0 || self.edge_communities == 0 || self.edge_items == 0 {
            return Err(Error::invalid("synth needs items, edge communities and edge items"));
        }
        if self.block_min == 0 || self.block_min > self.block_max {
            return Err(Error::invalid("synth block values need 1 <= block_min <= block_max"));
        }
        if self.segment_seconds <= 0 {
            return Err(Error::invalid("segment_seconds must be positive"));
        }
        for p in [
            self.label_fraction,
            self.label_dropout,
            self.confuser_rate,
            self.block_coverage,
            self.p_in_label,
            self.p_out_label,
            self.p_in_edge,
            self.p_out_edge,
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid(format!("synth probability {p} outside [0, 1]")));
            }
        }
        Ok(())
    }

    /// Item id of the `k`-th label item of group `g`. Ids wrap when the item
    /// budget is too small for the layout.
    fn label_item(&self, g: usize, k: usize) -> u32 {
        ((g * self.label_items + k) % self.n_items) as u32
    }

    fn block_item(&self, c: usize, k: usize) -> u32 {
        ((self.labelsets * self.label_items + c * self.edge_items + k) % self.n_items) as u32
    }

    fn noise_pool(&self) -> std::ops::Range<usize> {
        let used = self.labelsets * self.label_items + self.edge_communities * self.edge_items;
        if used < self.n_items {
            used..self.n_items
        } else {
            0..self.n_items
        }
    }
}

pub fn synth_generate(seed: u64, spec: &SynthSpec) -> Result<SynthData> {
    spec.validate()?;
    let n = spec.n_nodes;
    let mut r = rng::rng(rng::derive(seed, 0x5e7));

    let n_labelled = (spec.label_fraction * n as f64).round() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut r);
    let mut label_community = vec![None; n];
    if spec.labelsets > 0 {
        for (k, &i) in order.iter().take(n_labelled).enumerate() {
            label_community[i] = Some((k % spec.labelsets) as u32);
        }
    }
    order.shuffle(&mut r);
    let mut edge_community = vec![0u32; n];
    for (k, &i) in order.iter().enumerate() {
        edge_community[i] = (k % spec.edge_communities) as u32;
    }

    let mut events = Vec::new();
    let noise = spec.noise_pool();
    for seg in 0..3i64 {
        let t0 = spec.start + seg * spec.segment_seconds;
        for i in 0..n {
            let mut emit = |item: u32, value: u32, r: &mut rng::Rng| {
                events.push(Event {
                    node: i as u32,
                    item,
                    value: f64::from(value),
                    timestamp: t0 + r.gen_range(0..spec.segment_seconds),
                });
            };
            // Edge-community block.
            let c = edge_community[i] as usize;
            let mut touched = 0;
            for k in 0..spec.edge_items {
                if r.gen_bool(spec.block_coverage) {
                    emit(spec.block_item(c, k), r.gen_range(spec.block_min..=spec.block_max), &mut r);
                    touched += 1;
                }
            }
            if touched == 0 {
                let k = r.gen_range(0..spec.edge_items);
                emit(spec.block_item(c, k), r.gen_range(spec.block_min..=spec.block_max), &mut r);
            }
            // Label group.
            if let Some(g) = label_community[i] {
                if spec.label_items > 0 && !r.gen_bool(spec.label_dropout) {
                    let want = (spec.label_min_count + spec.label_extra).min(spec.label_items);
                    let mut items: Vec<usize> = (0..spec.label_items).collect();
                    items.shuffle(&mut r);
                    for &k in items.iter().take(want) {
                        emit(spec.label_item(g as usize, k), r.gen_range(MIN_LABEL_VALUE..=MIN_LABEL_VALUE + 4), &mut r);
                    }
                }
            }
            // Sub-threshold activity on some label group.
            if spec.labelsets > 0 && spec.label_items > 0 && r.gen_bool(spec.confuser_rate) {
                let g = r.gen_range(0..spec.labelsets);
                let count = r.gen_range(1..=spec.label_min_count.max(1));
                for _ in 0..count {
                    let k = r.gen_range(0..spec.label_items);
                    emit(spec.label_item(g, k), r.gen_range(1..MIN_LABEL_VALUE), &mut r);
                }
            }
            for _ in 0..spec.noise_items {
                // Quadratic skew toward the front of the pool.
                let u: f64 = r.gen();
                let k = noise.start + ((u * u) * noise.len() as f64) as usize;
                emit(k.min(noise.end - 1) as u32, r.gen_range(1..=3), &mut r);
            }
        }
    }
    events.sort_by_key(|e| (e.timestamp, e.node, e.item));

    let rules = (0..spec.labelsets)
        .map(|g| {
            let items = (0..spec.label_items).map(|k| spec.label_item(g, k)).collect();
            let mut rule = LabelRule::new(format!("label-{g}"), items, spec.label_min_count.max(1), f64::from(MIN_LABEL_VALUE))?;
            rule.kind = LabelRuleKind::ItemThreshold;
            Ok(rule)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut gr = rng::rng(rng::derive(seed, 0xed9e));
    let mut label_edges = Vec::new();
    let mut formation_edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let same_label = label_community[u].is_some() && label_community[u] == label_community[v];
            let p = if same_label { spec.p_in_label } else { spec.p_out_label };
            if gr.gen_bool(p) {
                label_edges.push(Edge {
                    u: u as u32,
                    v: v as u32,
                    weight: 1.0,
                });
            }
            let p = if edge_community[u] == edge_community[v] {
                spec.p_in_edge
            } else {
                spec.p_out_edge
            };
            if gr.gen_bool(p) {
                formation_edges.push(Edge {
                    u: u as u32,
                    v: v as u32,
                    weight: 1.0,
                });
            }
        }
    }
    let label_graph = EdgeSet::new(n, false, label_edges, Provenance::explicit("synth:label"))?.0;
    let formation_graph = EdgeSet::new(n, false, formation_edges, Provenance::explicit("synth:formation"))?.0;

    Ok(SynthData {
        log: EventLog {
            events,
            ids: IdMap::identity(n),
        },
        rules,
        label_community,
        edge_community,
        label_graph,
        formation_graph,
        boundaries: (spec.start + spec.segment_seconds, spec.start + 2 * spec.segment_seconds),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Aggregation, AttributeMatrix};
    use crate::similarity::{sim, Measure};

    #[test]
    fn deterministic() {
        let spec = SynthSpec {
            n_nodes: 60,
            ..Default::default()
        };
        let a = synth_generate(1, &spec).unwrap();
        let b = synth_generate(1, &spec).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.log, synth_generate(2, &spec).unwrap().log);
    }

    #[test]
    fn zero_noise_two_communities_separate() {
        let spec = SynthSpec {
            n_nodes: 40,
            n_items: 200,
            labelsets: 2,
            label_fraction: 1.0,
            label_dropout: 0.0,
            confuser_rate: 0.0,
            edge_communities: 2,
            edge_items: 30,
            block_coverage: 1.0,
            // Block mass (30 × 3) exceeds any label-group overlap (8 × 9).
            block_min: 3,
            noise_items: 0,
            ..Default::default()
        };
        let d = synth_generate(3, &spec).unwrap();
        let m = AttributeMatrix::from_events(40, &d.log.events, Aggregation::Sum).unwrap();
        let mut min_within = f64::MAX;
        let mut max_cross = 0.0f64;
        for u in 0..40 {
            for v in u + 1..40 {
                let s = sim(Measure::Int, m.row(u), m.row(v)).unwrap();
                if d.edge_community[u] == d.edge_community[v] {
                    min_within = min_within.min(s);
                } else {
                    max_cross = max_cross.max(s);
                }
            }
        }
        assert!(min_within > max_cross, "{min_within} <= {max_cross}");
    }

    #[test]
    fn tiny_item_budget_still_covers_every_node() {
        let spec = SynthSpec {
            n_nodes: 10,
            n_items: 5,
            ..Default::default()
        };
        let d = synth_generate(0, &spec).unwrap();
        let mut seen = [false; 10];
        for e in &d.log.events {
            seen[e.node as usize] = true;
            assert!(e.item < 5);
        }
        assert!(seen.iter().all(|s| *s));
    }
}
