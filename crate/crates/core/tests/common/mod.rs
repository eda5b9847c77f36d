//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use netsel::data::AttributeMatrix;
use netsel::graph::{Edge, EdgeSet, Provenance};
use netsel::rng;
use netsel::selection::tau_b;
use netsel::similarity::Measure;
use netsel::sparse::SparseVec;
use rand::Rng as _;

/// Integer-valued sparse matrix with roughly `fill` of its cells set.
pub fn random_matrix(seed: u64, n: usize, items: usize, fill: f64) -> AttributeMatrix {
    let mut r = rng::rng(seed);
    let rows = (0..n)
        .map(|_| {
            let pairs = (0..items as u32)
                .filter_map(|d| if r.gen_bool(fill) { Some((d, f64::from(r.gen_range(1..10u32)))) } else { None })
                .collect();
            SparseVec::from_pairs(pairs)
        })
        .collect();
    AttributeMatrix::from_rows(rows).unwrap()
}

pub fn dense(m: &AttributeMatrix, items: usize) -> Vec<Vec<f64>> {
    (0..m.n_nodes())
        .map(|i| (0..items as u32).map(|d| m.row(i).get(d)).collect())
        .collect()
}

/// Direct double-loop similarity over dense rows.
pub fn dense_sim(measure: Measure, a: &[f64], b: &[f64]) -> f64 {
    let mut lo = 0.0;
    let mut hi = 0.0;
    for (x, y) in a.iter().zip(b) {
        lo += x.min(*y);
        hi += x.max(*y);
    }
    match measure {
        Measure::Int => lo,
        Measure::IntN if hi == 0.0 => 0.0,
        Measure::IntN => lo / hi,
    }
}

/// Tau-b by enumerating every pair.
pub fn kendall_brute(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    let (mut s, mut tx, mut ty) = (0i64, 0i64, 0i64);
    for i in 0..n {
        for j in i + 1..n {
            let dx = x[i].partial_cmp(&x[j]).unwrap() as i64;
            let dy = y[i].partial_cmp(&y[j]).unwrap() as i64;
            s += dx * dy;
            tx += i64::from(dx == 0);
            ty += i64::from(dy == 0);
        }
    }
    let n0 = (n * (n - 1) / 2) as i64;
    tau_b(s, n0, tx, ty)
}

pub fn undirected(n: usize, pairs: &[(u32, u32)]) -> EdgeSet {
    let edges = pairs.iter().map(|&(u, v)| Edge { u, v, weight: 1.0 }).collect();
    EdgeSet::new(n, false, edges, Provenance::explicit("fixture")).unwrap().0
}

/// Two 5-cliques on 0..5 and 5..10 joined by the edge 4–5.
pub fn two_cliques() -> EdgeSet {
    let mut pairs = Vec::new();
    for base in [0u32, 5] {
        for a in base..base + 5 {
            for b in a + 1..base + 5 {
                pairs.push((a, b));
            }
        }
    }
    pairs.push((4, 5));
    undirected(10, &pairs)
}

/// Erdős–Rényi graph with edge probability `p`.
pub fn random_graph(seed: u64, n: usize, p: f64) -> EdgeSet {
    let mut r = rng::rng(seed);
    let mut pairs = Vec::new();
    for a in 0..n as u32 {
        for b in a + 1..n as u32 {
            if r.gen_bool(p) {
                pairs.push((a, b));
            }
        }
    }
    undirected(n, &pairs)
}
