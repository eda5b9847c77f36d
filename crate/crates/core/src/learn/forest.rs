use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::TrainingSet;
use crate::rng;
use crate::sparse::SparseVec;

/// Features examined per split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum FeatureFrac {
    Sqrt,
    All,
    Fraction(f64),
}

impl FeatureFrac {
    pub fn count(self, n_features: usize) -> usize {
        let k = match self {
            FeatureFrac::Sqrt => (n_features as f64).sqrt().floor() as usize,
            FeatureFrac::All => n_features,
            FeatureFrac::Fraction(f) => (f * n_features as f64).floor() as usize,
        };
        k.clamp(1, n_features.max(1))
    }
}

impl TryFrom<String> for FeatureFrac {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        match s.as_str() {
            "sqrt" => Ok(FeatureFrac::Sqrt),
            "all" => Ok(FeatureFrac::All),
            other => match other.parse::<f64>() {
                Ok(f) if f > 0.0 && f <= 1.0 => Ok(FeatureFrac::Fraction(f)),
                _ => Err(format!("feature_frac must be \"sqrt\", \"all\" or a number in (0, 1], got {other:?}")),
            },
        }
    }
}

impl From<FeatureFrac> for String {
    fn from(f: FeatureFrac) -> String {
        match f {
            FeatureFrac::Sqrt => "sqrt".into(),
            FeatureFrac::All => "all".into(),
            FeatureFrac::Fraction(x) => x.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RfParams {
    pub trees: usize,
    pub max_depth: usize,
    pub feature_frac: FeatureFrac,
    pub min_leaf: usize,
    pub bootstrap: bool,
}

impl Default for RfParams {
    fn default() -> Self {
        RfParams {
            trees: 50,
            max_depth: 16,
            feature_frac: FeatureFrac::Sqrt,
            min_leaf: 1,
            bootstrap: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Node {
    Leaf(u8),
    /// Go left when `x[feature] <= threshold`.
    Split {
        feature: u32,
        threshold: f64,
        left: u32,
        right: u32,
    },
}

/// A CART tree over column-space features.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, x: &SparseVec) -> u8 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf(c) => return c,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x.get(feature) <= threshold { left } else { right } as usize,
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(t: &Tree, at: usize) -> usize {
            match t.nodes[at] {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => 1 + go(t, left as usize).max(go(t, right as usize)),
            }
        }
        go(self, 0)
    }
}

/// Majority vote of bootstrap-trained trees; ties go to class 1.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomForest {
    trees: Vec<Tree>,
}

impl RandomForest {
    pub fn train(data: &TrainingSet, p: &RfParams, seed: u64) -> RandomForest {
        let n = data.len();
        let trees = (0..p.trees.max(1))
            .map(|t| {
                let mut r = rng::rng(rng::derive(seed, t as u64));
                let mut weight = vec![0u32; n];
                if p.bootstrap {
                    for _ in 0..n {
                        weight[r.gen_range(0..n)] += 1;
                    }
                } else {
                    weight.iter_mut().for_each(|w| *w = 1);
                }
                grow(data, &weight, p, &mut r)
            })
            .collect();
        RandomForest { trees }
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn predict(&self, x: &SparseVec) -> u8 {
        let pos = self.trees.iter().filter(|t| t.predict(x) == 1).count();
        u8::from(2 * pos >= self.trees.len())
    }
}

/// Gini impurity of a (negative, positive) weighted count, scaled by its
/// total: `n · gini = n − (a² + b²)/n`.
fn weighted_gini(c: [f64; 2]) -> f64 {
    let n = c[0] + c[1];
    if n == 0.0 {
        0.0
    } else {
        n - (c[0] * c[0] + c[1] * c[1]) / n
    }
}

#[derive(Debug, Clone, Copy)]
struct Best {
    impurity: f64,
    feature: u32,
    threshold: f64,
}

impl Best {
    fn beats(&self, other: &Option<Best>) -> bool {
        match other {
            None => true,
            Some(o) => (self.impurity, self.feature, self.threshold)
                .partial_cmp(&(o.impurity, o.feature, o.threshold))
                .is_some_and(|c| c.is_lt()),
        }
    }
}

fn grow(data: &TrainingSet, weight: &[u32], p: &RfParams, r: &mut rng::Rng) -> Tree {
    let samples: Vec<u32> = (0..data.len() as u32).filter(|&i| weight[i as usize] > 0).collect();
    let mut tree = Tree { nodes: Vec::new() };
    let k = p.feature_frac.count(data.n_features());
    build(data, weight, samples, 0, p, k, r, &mut tree);
    tree
}

#[allow(clippy::too_many_arguments)]
fn build(
    data: &TrainingSet,
    weight: &[u32],
    samples: Vec<u32>,
    depth: usize,
    p: &RfParams,
    k: usize,
    r: &mut rng::Rng,
    tree: &mut Tree,
) -> u32 {
    let at = tree.nodes.len() as u32;
    let mut counts = [0.0f64; 2];
    for &s in &samples {
        counts[data.y()[s as usize] as usize] += f64::from(weight[s as usize]);
    }
    let majority = u8::from(counts[1] >= counts[0]);
    tree.nodes.push(Node::Leaf(majority));
    let total = counts[0] + counts[1];
    if depth >= p.max_depth || counts[0] == 0.0 || counts[1] == 0.0 || total < (2 * p.min_leaf) as f64 {
        return at;
    }
    let Some(best) = best_split(data, weight, &samples, counts, p.min_leaf, k, r) else {
        return at;
    };
    let (left, right): (Vec<u32>, Vec<u32>) = samples
        .into_iter()
        .partition(|&s| data.x()[s as usize].get(best.feature) <= best.threshold);
    let l = build(data, weight, left, depth + 1, p, k, r, tree);
    let rr = build(data, weight, right, depth + 1, p, k, r, tree);
    tree.nodes[at as usize] = Node::Split {
        feature: best.feature,
        threshold: best.threshold,
        left: l,
        right: rr,
    };
    at
}

/// Search a seeded sample of `k` non-constant features among those present
/// at this node. Zero-gain splits are allowed, as in standard CART.
fn best_split(
    data: &TrainingSet,
    weight: &[u32],
    samples: &[u32],
    counts: [f64; 2],
    min_leaf: usize,
    k: usize,
    r: &mut rng::Rng,
) -> Option<Best> {
    // Nonzero (value, label, weight) lists per feature.
    let mut cols: HashMap<u32, Vec<(f64, u8, f64)>> = HashMap::new();
    for &s in samples {
        let (y, w) = (data.y()[s as usize], f64::from(weight[s as usize]));
        for (f, v) in data.x()[s as usize].iter() {
            cols.entry(f).or_default().push((v, y, w));
        }
    }
    let mut features: Vec<u32> = cols.keys().copied().collect();
    features.sort_unstable();
    features.shuffle(r);

    let total = counts[0] + counts[1];
    let mut best: Option<Best> = None;
    let mut visited = 0;
    for f in features {
        if visited == k {
            break;
        }
        let col = cols.get_mut(&f).expect("feature present");
        col.sort_by(|a, b| a.0.total_cmp(&b.0));
        let nz_w: f64 = col.iter().map(|c| c.2).sum();
        // Zeros sit left of every nonzero value.
        let mut left = counts;
        for c in col.iter() {
            left[c.1 as usize] -= c.2;
        }
        let has_zero = total - nz_w > 0.0;
        let constant = if has_zero { false } else { col.first().map(|c| c.0) == col.last().map(|c| c.0) };
        if constant {
            continue;
        }
        visited += 1;
        let mut prev = if has_zero { Some(0.0) } else { None };
        let mut i = 0;
        while i < col.len() {
            let v = col[i].0;
            if let Some(pv) = prev {
                let lw = left[0] + left[1];
                if lw >= min_leaf as f64 && total - lw >= min_leaf as f64 {
                    let right = [counts[0] - left[0], counts[1] - left[1]];
                    let cand = Best {
                        impurity: weighted_gini(left) + weighted_gini(right),
                        feature: f,
                        threshold: pv + (v - pv) / 2.0,
                    };
                    if cand.beats(&best) {
                        best = Some(cand);
                    }
                }
            }
            while i < col.len() && col[i].0 == v {
                left[col[i].1 as usize] += col[i].2;
                i += 1;
            }
            prev = Some(v);
        }
    }
    best
}
