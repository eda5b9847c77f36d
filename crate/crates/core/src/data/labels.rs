use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::matrix::AttributeMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LabelRuleKind {
    /// Items count when their activity reaches `min_value` (e.g. ≥ 5 plays).
    #[default]
    ItemThreshold,
    /// Any rated item of the set counts (floor of 1).
    ItemSetThreshold,
}

impl LabelRuleKind {
    pub fn default_min_value(self) -> f64 {
        match self {
            LabelRuleKind::ItemThreshold => 5.0,
            LabelRuleKind::ItemSetThreshold => 1.0,
        }
    }
}

/// A node is positive when at least `min_count` items of `items` have a row
/// value of at least `min_value`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelRule {
    pub name: String,
    #[serde(default)]
    pub kind: LabelRuleKind,
    pub items: Vec<u32>,
    pub min_count: usize,
    pub min_value: f64,
}

impl LabelRule {
    pub fn new(name: impl Into<String>, items: Vec<u32>, min_count: usize, min_value: f64) -> Result<Self> {
        if min_count == 0 {
            return Err(Error::invalid("label rule min_count must be at least 1"));
        }
        let mut items = items;
        items.sort_unstable();
        items.dedup();
        Ok(LabelRule {
            name: name.into(),
            kind: LabelRuleKind::ItemThreshold,
            items,
            min_count,
            min_value,
        })
    }

    pub fn applies(&self, row: &crate::sparse::SparseVec) -> bool {
        let mut hits = 0;
        for item in &self.items {
            // Absent items never count, even under a zero floor.
            let v = row.get(*item);
            if v > 0.0 && v >= self.min_value {
                hits += 1;
                if hits >= self.min_count {
                    return true;
                }
            }
        }
        false
    }
}

/// One binary labelset over all nodes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSet {
    pub name: String,
    pub values: Vec<u8>,
}

impl LabelSet {
    pub fn positives(&self) -> impl Iterator<Item = usize> + '_ {
        self.values.iter().enumerate().filter(|(_, v)| **v == 1).map(|(i, _)| i)
    }

    pub fn n_positive(&self) -> usize {
        self.values.iter().filter(|v| **v == 1).count()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSetCollection {
    pub n_nodes: usize,
    pub labelsets: Vec<LabelSet>,
}

impl LabelSetCollection {
    pub fn len(&self) -> usize {
        self.labelsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labelsets.is_empty()
    }

    pub fn get(&self, labelset: usize, node: usize) -> u8 {
        self.labelsets[labelset].values[node]
    }
}

/// Evaluate every rule against every row.
pub fn derive_labels(matrix: &AttributeMatrix, rules: &[LabelRule]) -> LabelSetCollection {
    let labelsets = rules
        .iter()
        .map(|rule| LabelSet {
            name: rule.name.clone(),
            values: matrix.rows().iter().map(|r| u8::from(rule.applies(r))).collect(),
        })
        .collect();
    LabelSetCollection {
        n_nodes: matrix.n_nodes(),
        labelsets,
    }
}

#[derive(Debug, Deserialize)]
struct RuleFile {
    #[serde(default)]
    labelset: Vec<RuleEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleEntry {
    name: String,
    #[serde(default)]
    kind: LabelRuleKind,
    items: Option<Vec<u32>>,
    items_file: Option<String>,
    #[serde(default = "default_min_count")]
    min_count: usize,
    min_value: Option<f64>,
}

fn default_min_count() -> usize {
    5
}

/// Load `[[labelset]]` entries from a TOML rule file.
///
/// `items_file` paths are resolved relative to the rule file and hold one item
/// id per line.
pub fn load_label_rules(path: &Path) -> Result<Vec<LabelRule>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let parsed: RuleFile = toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    parsed
        .labelset
        .into_iter()
        .map(|entry| {
            let mut items = entry.items.unwrap_or_default();
            if let Some(file) = &entry.items_file {
                let p = base.join(file);
                let list = fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
                for (n, line) in list.lines().enumerate() {
                    let line = line.trim();
                    if line.is_empty() {
                        continue;
                    }
                    items.push(line.parse().map_err(|_| Error::Parse {
                        path: p.clone(),
                        line: n + 1,
                        msg: format!("bad item id {line:?}"),
                    })?);
                }
            }
            let min_value = entry.min_value.unwrap_or(entry.kind.default_min_value());
            let mut rule = LabelRule::new(entry.name, items, entry.min_count, min_value)?;
            rule.kind = entry.kind;
            Ok(rule)
        })
        .collect()
}

/// Serialize rules in the format [`load_label_rules`] reads.
pub fn rules_to_toml(rules: &[LabelRule]) -> String {
    let mut s = String::new();
    for r in rules {
        let kind = match r.kind {
            LabelRuleKind::ItemThreshold => "item-threshold",
            LabelRuleKind::ItemSetThreshold => "item-set-threshold",
        };
        let items: Vec<String> = r.items.iter().map(u32::to_string).collect();
        s.push_str(&format!(
            "[[labelset]]\nname = {:?}\nkind = {:?}\nitems = [{}]\nmin_count = {}\nmin_value = {:?}\n\n",
            r.name,
            kind,
            items.join(", "),
            r.min_count,
            r.min_value
        ));
    }
    s
}
