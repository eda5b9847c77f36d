//! Intersection similarity and the similarity-space network models.
//!
//! For non-negative vectors `a`, `b`:
//!
//! * `INT(a, b)   = Σ_d min(a_d, b_d)`
//! * `INT-N(a, b) = Σ_d min(a_d, b_d) / Σ_d max(a_d, b_d)` (0 when both are empty)
//!
//! Network construction scores only co-supported pairs through an inverted
//! index over items, so the cost follows the posting-list overlap rather than
//! `|V|²`.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::AttributeMatrix;
use crate::error::{Error, Result};
use crate::graph::{Edge, EdgeSet, Provenance};
use crate::sparse::SparseVec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Measure {
    #[serde(rename = "int")]
    Int,
    #[serde(rename = "int-n")]
    IntN,
}

impl Measure {
    pub fn as_str(self) -> &'static str {
        match self {
            Measure::Int => "int",
            Measure::IntN => "int-n",
        }
    }

    pub fn parse(s: &str) -> Option<Measure> {
        match s {
            "int" => Some(Measure::Int),
            "int-n" => Some(Measure::IntN),
            _ => None,
        }
    }

    /// Similarity from the shared-minimum sum and the two row sums.
    #[inline]
    fn finish(self, min_sum: f64, sum_a: f64, sum_b: f64) -> f64 {
        match self {
            Measure::Int => min_sum,
            Measure::IntN => {
                let max_sum = sum_a + sum_b - min_sum;
                if max_sum > 0.0 {
                    min_sum / max_sum
                } else {
                    0.0
                }
            }
        }
    }
}

impl std::fmt::Display for Measure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Similarity of two non-negative sparse vectors.
pub fn sim(measure: Measure, a: &SparseVec, b: &SparseVec) -> Result<f64> {
    for v in a.values().iter().chain(b.values()) {
        if *v < 0.0 {
            return Err(Error::NegativeValue(*v));
        }
    }
    Ok(sim_unchecked(measure, a, b))
}

/// [`sim`] without the sign check, for vectors already validated by
/// [`AttributeMatrix`].
pub fn sim_unchecked(measure: Measure, a: &SparseVec, b: &SparseVec) -> f64 {
    match measure {
        Measure::Int => a.min_sum(b),
        Measure::IntN => {
            let (mut i, mut j) = (0, 0);
            let (ai, av, bi, bv) = (a.indices(), a.values(), b.indices(), b.values());
            let (mut lo, mut hi) = (0.0, 0.0);
            while i < ai.len() || j < bi.len() {
                let ord = match (ai.get(i), bi.get(j)) {
                    (Some(x), Some(y)) => x.cmp(y),
                    (Some(_), None) => Ordering::Less,
                    _ => Ordering::Greater,
                };
                match ord {
                    Ordering::Less => {
                        hi += av[i];
                        i += 1;
                    }
                    Ordering::Greater => {
                        hi += bv[j];
                        j += 1;
                    }
                    Ordering::Equal => {
                        lo += av[i].min(bv[j]);
                        hi += av[i].max(bv[j]);
                        i += 1;
                        j += 1;
                    }
                }
            }
            if hi > 0.0 {
                lo / hi
            } else {
                0.0
            }
        }
    }
}

/// `λ = round(density · pairs)`, rounding halves up, at least 1. `pairs` is
/// `n(n-1)` for directed models and half that otherwise.
pub fn lambda_from_density(n_nodes: usize, density: f64, directed: bool) -> Result<usize> {
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::invalid(format!("density must lie in (0, 1], got {density}")));
    }
    let n = n_nodes as f64;
    let pairs = if directed { n * (n - 1.0) } else { n * (n - 1.0) / 2.0 };
    Ok(((density * pairs + 0.5).floor() as usize).max(1))
}

/// Inverted item index over a matrix.
pub struct SimilarityIndex<'a> {
    matrix: &'a AttributeMatrix,
    /// Rows with items remapped to dense column ids (ascending item order).
    rows: Vec<Vec<(u32, f64)>>,
    /// Column → `(node, value)` postings, ascending node.
    postings: Vec<Vec<(u32, f64)>>,
    sums: Vec<f64>,
}

/// Reusable accumulator for [`SimilarityIndex::scores`].
pub struct Scratch {
    acc: Vec<f64>,
    touched: Vec<u32>,
}

impl<'a> SimilarityIndex<'a> {
    pub fn new(matrix: &'a AttributeMatrix) -> Self {
        let items: BTreeSet<u32> = matrix.item_dictionary();
        let col: HashMap<u32, u32> = items.iter().enumerate().map(|(c, &it)| (it, c as u32)).collect();
        let mut postings = vec![Vec::new(); items.len()];
        let rows: Vec<Vec<(u32, f64)>> = matrix
            .rows()
            .iter()
            .enumerate()
            .map(|(node, r)| {
                r.iter()
                    .map(|(it, v)| {
                        let c = col[&it];
                        postings[c as usize].push((node as u32, v));
                        (c, v)
                    })
                    .collect()
            })
            .collect();
        let sums = matrix.rows().iter().map(SparseVec::sum).collect();
        SimilarityIndex {
            matrix,
            rows,
            postings,
            sums,
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.matrix.n_nodes()
    }

    pub fn scratch(&self) -> Scratch {
        Scratch {
            acc: vec![0.0; self.n_nodes()],
            touched: Vec::new(),
        }
    }

    /// Every `j != i` (with `j > i` when `upper_only`) whose similarity to `i`
    /// is strictly positive, in ascending `j`.
    pub fn scores(&self, i: usize, measure: Measure, upper_only: bool, scratch: &mut Scratch) -> Vec<(u32, f64)> {
        let Scratch { acc, touched } = scratch;
        for &(c, a) in &self.rows[i] {
            for &(j, b) in &self.postings[c as usize] {
                if j as usize == i || (upper_only && (j as usize) < i) {
                    continue;
                }
                let slot = &mut acc[j as usize];
                if *slot == 0.0 {
                    touched.push(j);
                }
                *slot += a.min(b);
            }
        }
        touched.sort_unstable();
        let si = self.sums[i];
        let out = touched
            .iter()
            .map(|&j| {
                let m = acc[j as usize];
                acc[j as usize] = 0.0;
                (j, measure.finish(m, si, self.sums[j as usize]))
            })
            .filter(|(_, s)| *s > 0.0)
            .collect();
        touched.clear();
        out
    }
}

/// Directed k-nearest-neighbor network with `k = ⌊λ/|V|⌋`.
///
/// Each node links to its `k` most similar peers among strictly positive
/// similarities; ties go to the lower node id. Missing slots are summed into
/// the provenance shortfall.
pub fn knn_graph(matrix: &AttributeMatrix, measure: Measure, lambda: usize) -> Result<EdgeSet> {
    let n = matrix.n_nodes();
    if n == 0 || lambda < n {
        return Err(Error::invalid(format!("knn needs lambda >= n_nodes ({lambda} < {n})")));
    }
    let k = lambda / n;
    let index = SimilarityIndex::new(matrix);
    let per_node: Vec<Vec<Edge>> = (0..n)
        .into_par_iter()
        .map_init(
            || index.scratch(),
            |scratch, i| {
                let mut cand = index.scores(i, measure, false, scratch);
                let by_rank = |a: &(u32, f64), b: &(u32, f64)| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0));
                if cand.len() > k {
                    cand.select_nth_unstable_by(k - 1, by_rank);
                    cand.truncate(k);
                }
                cand.sort_by(by_rank);
                cand.into_iter()
                    .map(|(j, s)| Edge {
                        u: i as u32,
                        v: j,
                        weight: s,
                    })
                    .collect()
            },
        )
        .collect();
    let shortfall = per_node.iter().map(|e| k - e.len()).sum();
    let edges = per_node.into_iter().flatten().collect();
    let prov = Provenance {
        model: "knn".into(),
        measure: Some(measure.as_str().into()),
        lambda: Some(lambda),
        source: String::new(),
        shortfall,
    };
    Ok(EdgeSet::new(n, true, edges, prov)?.0)
}

#[derive(Clone, Copy)]
struct Cand {
    score: f64,
    u: u32,
    v: u32,
}

// Max-heap order puts the *worst* candidate on top.
impl Ord for Cand {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .score
            .total_cmp(&self.score)
            .then(self.u.cmp(&other.u))
            .then(self.v.cmp(&other.v))
    }
}

impl PartialOrd for Cand {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Cand {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Cand {}

fn push_bounded(heap: &mut BinaryHeap<Cand>, c: Cand, cap: usize) {
    if heap.len() < cap {
        heap.push(c);
    } else if let Some(worst) = heap.peek() {
        if c < *worst {
            heap.pop();
            heap.push(c);
        }
    }
}

const TH_CHUNK: usize = 128;

/// Undirected threshold network: the `λ` pairs with the largest positive
/// similarity, ties at the cutoff resolved by lexicographic `(i, j)`.
pub fn threshold_graph(matrix: &AttributeMatrix, measure: Measure, lambda: usize) -> Result<EdgeSet> {
    if lambda == 0 {
        return Err(Error::invalid("threshold model needs lambda >= 1"));
    }
    let n = matrix.n_nodes();
    let index = SimilarityIndex::new(matrix);
    let chunks: Vec<(BinaryHeap<Cand>, usize)> = (0..n.div_ceil(TH_CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut scratch = index.scratch();
            let mut heap = BinaryHeap::new();
            let mut positive = 0;
            for i in c * TH_CHUNK..((c + 1) * TH_CHUNK).min(n) {
                for (j, s) in index.scores(i, measure, true, &mut scratch) {
                    positive += 1;
                    push_bounded(&mut heap, Cand { score: s, u: i as u32, v: j }, lambda);
                }
            }
            (heap, positive)
        })
        .collect();
    let mut positive = 0;
    let mut heap = BinaryHeap::new();
    for (h, p) in chunks {
        positive += p;
        for c in h {
            push_bounded(&mut heap, c, lambda);
        }
    }
    let mut chosen = heap.into_vec();
    chosen.sort();
    let edges = chosen
        .into_iter()
        .map(|c| Edge {
            u: c.u,
            v: c.v,
            weight: c.score,
        })
        .collect();
    let prov = Provenance {
        model: "th".into(),
        measure: Some(measure.as_str().into()),
        lambda: Some(lambda),
        source: String::new(),
        shortfall: lambda.saturating_sub(positive),
    };
    Ok(EdgeSet::new(n, false, edges, prov)?.0)
}
