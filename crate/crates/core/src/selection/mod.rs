//! Model-selection statistics over per-config precision.

mod kendall;
mod report;

pub use kendall::{kendall_tau, tau_b};
pub use report::{
    cross_task_csv, match_mismatch_csv, node_difficulty_csv, parse_results_csv, read_results_csv, results_csv,
    selection_csv,
};

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::data::Role;
use crate::error::{Error, Result};
use crate::tasks::{Fallback, ModelConfig, PredictionBatch, Record, Task};

/// Precision of one partition's records: `#predicted-1 / #records` for CC
/// (every record is an oracle positive) and `TP / #predicted-1` for LP.
/// An empty denominator gives `(0, true)`.
pub fn precision<'a>(task: Task, records: impl IntoIterator<Item = &'a Record>) -> (f64, bool) {
    let (mut n, mut pred, mut tp) = (0usize, 0usize, 0usize);
    for r in records {
        n += 1;
        if r.predicted == 1 {
            pred += 1;
            if r.actual == 1 {
                tp += 1;
            }
        }
    }
    let (num, den) = match task {
        Task::Cc => (pred, n),
        Task::Lp => (tp, pred),
    };
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

/// Per-config summary used by every statistic.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationRecord {
    pub config_key: String,
    pub precision_validation: f64,
    pub precision_testing: f64,
    pub records_validation: usize,
    pub records_testing: usize,
    pub fallback_validation: usize,
    pub fallback_testing: usize,
    /// Precision had an empty denominator.
    pub empty_validation: bool,
    pub empty_testing: bool,
}

impl EvaluationRecord {
    pub fn from_batch(batch: &PredictionBatch) -> Result<EvaluationRecord> {
        let task = ModelConfig::parse_key(&batch.config_key, 0)?.task;
        let part = |role| {
            let recs: Vec<&Record> = batch.records_for(role).collect();
            let (p, empty) = precision(task, recs.iter().copied());
            let fallbacks = recs.iter().filter(|r| r.fallback != Fallback::None).count();
            (p, empty, recs.len(), fallbacks)
        };
        let (pv, ev, nv, fv) = part(Role::Validation);
        let (pt, et, nt, ft) = part(Role::Testing);
        Ok(EvaluationRecord {
            config_key: batch.config_key.clone(),
            precision_validation: pv,
            precision_testing: pt,
            records_validation: nv,
            records_testing: nt,
            fallback_validation: fv,
            fallback_testing: ft,
            empty_validation: ev,
            empty_testing: et,
        })
    }

    /// Shorthand for fixtures: only key and precisions.
    pub fn new(key: impl Into<String>, validation: f64, testing: f64) -> EvaluationRecord {
        EvaluationRecord {
            config_key: key.into(),
            precision_validation: validation,
            precision_testing: testing,
            records_validation: 0,
            records_testing: 0,
            fallback_validation: 0,
            fallback_testing: 0,
            empty_validation: false,
            empty_testing: false,
        }
    }
}

/// Descending by `score`, ties by ascending key.
fn order_by(records: &[EvaluationRecord], score: impl Fn(&EvaluationRecord) -> f64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..records.len()).collect();
    idx.sort_by(|&a, &b| {
        score(&records[b])
            .total_cmp(&score(&records[a]))
            .then_with(|| records[a].config_key.cmp(&records[b].config_key))
    });
    idx
}

/// The config with the highest validation precision; ties by key.
pub fn select_model(records: &[EvaluationRecord]) -> Result<&EvaluationRecord> {
    let best = order_by(records, |r| r.precision_validation);
    best.first()
        .map(|&i| &records[i])
        .ok_or_else(|| Error::invalid("cannot select from an empty record list"))
}

/// `1 − (position − 1)/(N − 1)` of `key` in the testing ordering.
fn testing_rank(records: &[EvaluationRecord], key: &str) -> Option<f64> {
    let order = order_by(records, |r| r.precision_testing);
    let pos = order.iter().position(|&i| records[i].config_key == key)?;
    let n = records.len();
    // (N − 1 − pos)/(N − 1) equals 1 − pos/(N − 1) but rounds once.
    Some(if n < 2 { 1.0 } else { (n - 1 - pos) as f64 / (n - 1) as f64 })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionReport {
    pub n_configs: usize,
    pub mu: f64,
    pub mu_top10: f64,
    pub delta_mu: f64,
    pub p1: f64,
    pub delta_p1: f64,
    pub selected_key: String,
    pub selected_rank: f64,
    pub tau: f64,
    pub tau_p: f64,
    pub tau10: f64,
    pub intersection10: usize,
    /// `k` actually used by the intersection (fewer configs than 10).
    pub intersection_k: usize,
    /// `Δp(1) ≤ 0.1 (p(1) − μ)`.
    pub bold_delta_p1: bool,
    /// `rank ≥ 0.9`.
    pub bold_rank: bool,
}

/// The selection battery for one (task, classifier) cell.
pub fn selection_stats(records: &[EvaluationRecord]) -> Result<SelectionReport> {
    let selected = select_model(records)?;
    let n = records.len();
    let mean = |f: &dyn Fn(&EvaluationRecord) -> f64, set: &[usize]| {
        compensated_sum(set.iter().map(|&i| f(&records[i]))) / set.len() as f64
    };
    let all: Vec<usize> = (0..n).collect();
    let by_test = order_by(records, |r| r.precision_testing);
    let mu = mean(&|r| r.precision_testing, &all);
    let mu_top10 = mean(&|r| r.precision_testing, &by_test[..n.min(10)]);
    let delta_mu = mean(&|r| r.precision_validation - r.precision_testing, &all);
    let p1 = records[by_test[0]].precision_testing;
    let delta_p1 = selected.precision_testing - p1;
    let selected_rank = testing_rank(records, &selected.config_key).expect("selected is present");

    let (tau, tau_p) = if n >= 2 {
        let x: Vec<f64> = records.iter().map(|r| r.precision_validation).collect();
        let y: Vec<f64> = records.iter().map(|r| r.precision_testing).collect();
        kendall_tau(&x, &y)?
    } else {
        (f64::NAN, f64::NAN)
    };
    let by_val = order_by(records, |r| r.precision_validation);
    let top: &[usize] = &by_val[..n.min(10)];
    let tau10 = if top.len() >= 2 {
        let x: Vec<f64> = top.iter().map(|&i| records[i].precision_validation).collect();
        let y: Vec<f64> = top.iter().map(|&i| records[i].precision_testing).collect();
        kendall_tau(&x, &y)?.0
    } else {
        f64::NAN
    };
    let (intersection10, intersection_k) = topk_intersection(records, 10);
    Ok(SelectionReport {
        n_configs: n,
        mu,
        mu_top10,
        delta_mu,
        p1,
        delta_p1,
        selected_key: selected.config_key.clone(),
        selected_rank,
        tau,
        tau_p,
        tau10,
        intersection10,
        intersection_k,
        bold_delta_p1: delta_p1 <= 0.1 * (p1 - mu),
        bold_rank: selected_rank >= 0.9,
    })
}

/// Neumaier summation; keeps hand-checkable means exact for short lists.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut c) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        c += if sum.abs() >= v.abs() { (sum - t) + v } else { (v - t) + sum };
        sum = t;
    }
    sum + c
}

/// Shared keys between the validation and testing top-`k`, and the `k`
/// used (capped by the record count).
pub fn topk_intersection(records: &[EvaluationRecord], k: usize) -> (usize, usize) {
    let k = k.min(records.len());
    let top = |f: fn(&EvaluationRecord) -> f64| -> BTreeSet<&str> {
        order_by(records, f)[..k].iter().map(|&i| records[i].config_key.as_str()).collect()
    };
    let a = top(|r| r.precision_validation);
    let b = top(|r| r.precision_testing);
    (a.intersection(&b).count(), k)
}

/// Grouping for [`match_mismatch`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupBy {
    Locality,
    Model,
}

impl GroupBy {
    pub fn as_str(self) -> &'static str {
        match self {
            GroupBy::Locality => "locality",
            GroupBy::Model => "model",
        }
    }

    fn group_of(self, key: &str) -> Result<String> {
        let cfg = ModelConfig::parse_key(key, 0)?;
        Ok(match self {
            GroupBy::Locality => cfg.locality.to_string(),
            // Model kind; explicit networks are told apart by name.
            GroupBy::Model => match cfg.network.name {
                Some(name) => format!("explicit:{name}"),
                None => format!("{:?}", cfg.network.model).to_lowercase(),
            },
        })
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Median absolute testing-precision difference over same-group pairs minus
/// the median over cross-group pairs.
pub fn match_mismatch(records: &[EvaluationRecord], group_by: GroupBy) -> Result<f64> {
    let groups: Vec<String> = records.iter().map(|r| group_by.group_of(&r.config_key)).collect::<Result<_>>()?;
    match_mismatch_groups(records, &groups)
}

/// [`match_mismatch`] with explicit group labels, one per record.
pub fn match_mismatch_groups<G: Eq>(records: &[EvaluationRecord], groups: &[G]) -> Result<f64> {
    let (mut matched, mut mismatched) = (Vec::new(), Vec::new());
    for a in 0..records.len() {
        for b in a + 1..records.len() {
            let d = (records[a].precision_testing - records[b].precision_testing).abs();
            if groups[a] == groups[b] {
                matched.push(d);
            } else {
                mismatched.push(d);
            }
        }
    }
    if mismatched.is_empty() {
        return Err(Error::invalid("match/mismatch needs at least two groups"));
    }
    if matched.is_empty() {
        return Err(Error::invalid("match/mismatch needs a group with two configs"));
    }
    Ok(median(matched) - median(mismatched))
}

/// One cell of the cross-task table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossCell {
    pub selected_key: String,
    pub evaluated_key: String,
    pub delta_p1: f64,
    pub rank: f64,
}

/// Which validation signal picks the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Selector {
    Cc,
    Lp,
    Average,
}

impl Selector {
    pub fn as_str(self) -> &'static str {
        match self {
            Selector::Cc => "cc",
            Selector::Lp => "lp",
            Selector::Average => "average",
        }
    }
}

/// Rows are selectors, columns evaluation tasks; `None` where the selected
/// network model has no config under the evaluation task.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossTaskTable {
    pub cells: BTreeMap<(Selector, Task), Option<CrossCell>>,
}

impl CrossTaskTable {
    pub fn get(&self, s: Selector, e: Task) -> Option<&CrossCell> {
        self.cells.get(&(s, e)).and_then(Option::as_ref)
    }
}

/// `network|locality`, the part of a key shared across tasks.
fn model_portion(key: &str) -> Result<String> {
    let cfg = ModelConfig::parse_key(key, 0)?;
    Ok(format!("{}|{}", cfg.network, cfg.locality))
}

/// Select on one task's validation precision (or the mean of both) and
/// evaluate the same network model and locality on each task's testing
/// ordering. Records should share one classifier.
pub fn cross_task(cc: &[EvaluationRecord], lp: &[EvaluationRecord]) -> Result<CrossTaskTable> {
    let index = |recs: &[EvaluationRecord]| -> Result<BTreeMap<String, usize>> {
        recs.iter().enumerate().map(|(i, r)| Ok((model_portion(&r.config_key)?, i))).collect()
    };
    let (cc_ix, lp_ix) = (index(cc)?, index(lp)?);
    let tasks: [(Task, &[EvaluationRecord], &BTreeMap<String, usize>); 2] = [(Task::Cc, cc, &cc_ix), (Task::Lp, lp, &lp_ix)];

    let mut picks: Vec<(Selector, Option<String>)> = Vec::new();
    picks.push((Selector::Cc, select_model(cc).ok().map(|r| model_portion(&r.config_key)).transpose()?));
    picks.push((Selector::Lp, select_model(lp).ok().map(|r| model_portion(&r.config_key)).transpose()?));
    let avg: Option<String> = cc_ix
        .iter()
        .filter_map(|(m, &i)| lp_ix.get(m).map(|&j| (m, (cc[i].precision_validation + lp[j].precision_validation) / 2.0)))
        .max_by(|a, b| a.1.total_cmp(&b.1).then_with(|| b.0.cmp(a.0)))
        .map(|(m, _)| m.clone());
    picks.push((Selector::Average, avg));

    let mut cells = BTreeMap::new();
    for (sel, portion) in &picks {
        for (task, recs, ix) in &tasks {
            let cell = portion.as_ref().and_then(|p| ix.get(p)).map(|&i| {
                let p1 = recs.iter().map(|r| r.precision_testing).fold(f64::NEG_INFINITY, f64::max);
                CrossCell {
                    selected_key: portion.clone().unwrap_or_default(),
                    evaluated_key: recs[i].config_key.clone(),
                    delta_p1: recs[i].precision_testing - p1,
                    rank: testing_rank(recs, &recs[i].config_key).expect("present"),
                }
            });
            cells.insert((*sel, *task), cell);
        }
    }
    Ok(CrossTaskTable { cells })
}

/// Per-node precision over the best configs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeDifficulty {
    pub node: u32,
    pub precision: f64,
    pub records: usize,
}

/// Union of the top-`top` configs by validation and by testing precision,
/// and per-node precision over those configs' testing-partition records.
/// Nodes without records are omitted. Batches must share one task.
pub fn node_difficulty(
    records: &[EvaluationRecord],
    batches: &[PredictionBatch],
    top: usize,
) -> Result<(BTreeSet<String>, Vec<NodeDifficulty>)> {
    let k = top.min(records.len());
    let mut chosen: BTreeSet<String> = BTreeSet::new();
    for f in [|r: &EvaluationRecord| r.precision_validation, |r: &EvaluationRecord| r.precision_testing] {
        for &i in &order_by(records, f)[..k] {
            chosen.insert(records[i].config_key.clone());
        }
    }
    let mut per_node: BTreeMap<u32, Vec<&Record>> = BTreeMap::new();
    let mut task = None;
    for b in batches.iter().filter(|b| chosen.contains(&b.config_key)) {
        let t = ModelConfig::parse_key(&b.config_key, 0)?.task;
        if task.is_some_and(|x| x != t) {
            return Err(Error::invalid("node difficulty batches mix tasks"));
        }
        task = Some(t);
        for r in b.records_for(Role::Testing) {
            per_node.entry(r.node).or_default().push(r);
        }
    }
    let out = per_node
        .into_iter()
        .map(|(node, recs)| NodeDifficulty {
            node,
            precision: precision(task.expect("records imply a task"), recs.iter().copied()).0,
            records: recs.len(),
        })
        .collect();
    Ok((chosen, out))
}
