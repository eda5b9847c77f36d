//! Louvain community detection.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::graph::EdgeSet;
use crate::rng;

/// Per-node community ids (dense, numbered by first appearance in node
/// order) and the modularity of the assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct CommunityAssignment {
    pub labels: Vec<u32>,
    pub modularity: f64,
}

impl CommunityAssignment {
    pub fn n_communities(&self) -> usize {
        self.labels.iter().max().map_or(0, |m| *m as usize + 1)
    }

    /// Members of each community in ascending node order.
    pub fn members(&self) -> Vec<Vec<u32>> {
        let mut out = vec![Vec::new(); self.n_communities()];
        for (i, &c) in self.labels.iter().enumerate() {
            out[c as usize].push(i as u32);
        }
        out
    }

    /// `node<TAB>community` rows under a `# modularity=` header.
    pub fn write_tsv(&self, path: &Path) -> Result<()> {
        let mut s = format!("# modularity={}\n", self.modularity);
        for (i, c) in self.labels.iter().enumerate() {
            s.push_str(&format!("{i}\t{c}\n"));
        }
        fs::write(path, s).map_err(|e| Error::io(path, e))
    }

    pub fn read_tsv(path: &Path) -> Result<CommunityAssignment> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let bad = |line: usize, msg: &str| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg: msg.into(),
        };
        let mut modularity = 0.0;
        let mut labels = Vec::new();
        for (n, line) in text.lines().enumerate() {
            if let Some(rest) = line.strip_prefix("# modularity=") {
                modularity = rest.trim().parse().map_err(|_| bad(n + 1, "bad modularity"))?;
                continue;
            }
            let (node, c) = line.split_once('\t').ok_or_else(|| bad(n + 1, "expected node, community"))?;
            let node: usize = node.parse().map_err(|_| bad(n + 1, "bad node"))?;
            if node != labels.len() {
                return Err(bad(n + 1, "nodes must be listed in order"));
            }
            labels.push(c.trim().parse().map_err(|_| bad(n + 1, "bad community"))?);
        }
        Ok(CommunityAssignment { labels, modularity })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LouvainOptions {
    pub resolution: f64,
    pub min_gain: f64,
}

impl Default for LouvainOptions {
    fn default() -> Self {
        LouvainOptions {
            resolution: 1.0,
            min_gain: 1e-7,
        }
    }
}

/// Modularity of the flattened assignment before and after one
/// move-and-aggregate phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseRecord {
    pub phase: usize,
    pub before: f64,
    pub after: f64,
    pub communities: usize,
}

/// `Q = Σ_c (e_c/m − (d_c/2m)²)` over the symmetrized, unit-weight view of
/// `g`. Zero for an edgeless graph.
pub fn modularity(g: &EdgeSet, labels: &[u32]) -> f64 {
    let m = g.und_len();
    if m == 0 {
        return 0.0;
    }
    let k = labels.iter().max().map_or(0, |c| *c as usize + 1);
    let mut intra = vec![0usize; k];
    let mut degree = vec![0usize; k];
    for i in 0..g.n_nodes() {
        let ci = labels[i];
        degree[ci as usize] += g.und_degree(i);
        for &j in g.und(i) {
            if (j as usize) > i && labels[j as usize] == ci {
                intra[ci as usize] += 1;
            }
        }
    }
    let m = m as f64;
    intra
        .iter()
        .zip(&degree)
        .map(|(&e, &d)| e as f64 / m - (d as f64 / (2.0 * m)).powi(2))
        .sum()
}

pub fn louvain(g: &EdgeSet, seed: u64) -> CommunityAssignment {
    louvain_with(g, seed, LouvainOptions::default(), |_| {})
}

/// Two-phase Louvain over the symmetrized view of `g` with unit edge weights.
/// `observer` sees every phase that moved at least one node.
pub fn louvain_with(
    g: &EdgeSet,
    seed: u64,
    opts: LouvainOptions,
    mut observer: impl FnMut(&PhaseRecord),
) -> CommunityAssignment {
    let n = g.n_nodes();
    let mut flat: Vec<u32> = (0..n as u32).collect();
    let mut level = Level::from_graph(g);
    let mut r = rng::rng(seed);
    let mut before = modularity(g, &flat);
    let mut phase = 0;
    while let Some(comm) = level.local_moves(opts, &mut r) {
        for c in flat.iter_mut() {
            *c = comm[*c as usize];
        }
        let after = modularity(g, &flat);
        let communities = comm.iter().max().map_or(0, |c| *c as usize + 1);
        observer(&PhaseRecord {
            phase,
            before,
            after,
            communities,
        });
        before = after;
        phase += 1;
        level = level.aggregate(&comm, communities);
    }
    let labels = renumber(&flat);
    let modularity = modularity(g, &labels);
    CommunityAssignment { labels, modularity }
}

fn renumber(labels: &[u32]) -> Vec<u32> {
    let mut map = HashMap::new();
    labels
        .iter()
        .map(|c| {
            let next = map.len() as u32;
            *map.entry(*c).or_insert(next)
        })
        .collect()
}

/// Weighted graph at one aggregation level. `self_w[i]` is the diagonal
/// entry `A_ii` (twice the internal weight), so `k_i = Σ_j A_ij`.
struct Level {
    adj: Vec<Vec<(u32, f64)>>,
    self_w: Vec<f64>,
    k: Vec<f64>,
}

impl Level {
    fn from_graph(g: &EdgeSet) -> Level {
        let adj: Vec<Vec<(u32, f64)>> = (0..g.n_nodes()).map(|i| g.und(i).iter().map(|&j| (j, 1.0)).collect()).collect();
        let k = adj.iter().map(|a| a.len() as f64).collect();
        Level {
            self_w: vec![0.0; adj.len()],
            adj,
            k,
        }
    }

    /// Run local-move passes to convergence. Returns the dense community of
    /// each level node, or `None` when no node moved.
    fn local_moves(&self, opts: LouvainOptions, r: &mut rng::Rng) -> Option<Vec<u32>> {
        let n = self.adj.len();
        let m2: f64 = self.k.iter().sum();
        if m2 == 0.0 {
            return None;
        }
        let m = m2 / 2.0;
        let mut comm: Vec<usize> = (0..n).collect();
        let mut tot = self.k.clone();
        let mut w_to = vec![0.0; n];
        let mut seen: Vec<usize> = Vec::new();
        let mut order: Vec<usize> = (0..n).collect();
        let mut any = false;
        loop {
            order.shuffle(r);
            let mut moved = false;
            for &i in &order {
                let ci = comm[i];
                let ki = self.k[i];
                for &(j, w) in &self.adj[i] {
                    let c = comm[j as usize];
                    if w_to[c] == 0.0 {
                        seen.push(c);
                    }
                    w_to[c] += w;
                }
                tot[ci] -= ki;
                let gain = |c: usize, w: f64| w - opts.resolution * tot[c] * ki / m2;
                let stay = gain(ci, w_to[ci]);
                let (mut best, mut best_gain) = (ci, stay);
                for &c in &seen {
                    let gc = gain(c, w_to[c]);
                    if gc > best_gain {
                        best = c;
                        best_gain = gc;
                    }
                }
                if best != ci && (best_gain - stay) / m <= opts.min_gain {
                    best = ci;
                }
                tot[best] += ki;
                if best != ci {
                    comm[i] = best;
                    moved = true;
                }
                for &c in &seen {
                    w_to[c] = 0.0;
                }
                seen.clear();
            }
            if !moved {
                break;
            }
            any = true;
        }
        any.then(|| renumber(&comm.iter().map(|&c| c as u32).collect::<Vec<_>>()))
    }

    fn aggregate(&self, comm: &[u32], k: usize) -> Level {
        let mut self_w = vec![0.0; k];
        let mut maps: Vec<HashMap<u32, f64>> = vec![HashMap::new(); k];
        for (i, nbrs) in self.adj.iter().enumerate() {
            let ci = comm[i];
            self_w[ci as usize] += self.self_w[i];
            for &(j, w) in nbrs {
                let cj = comm[j as usize];
                if cj == ci {
                    self_w[ci as usize] += w;
                } else {
                    *maps[ci as usize].entry(cj).or_insert(0.0) += w;
                }
            }
        }
        let adj: Vec<Vec<(u32, f64)>> = maps
            .into_iter()
            .map(|m| {
                let mut v: Vec<(u32, f64)> = m.into_iter().collect();
                v.sort_by_key(|p| p.0);
                v
            })
            .collect();
        let kk = adj
            .iter()
            .zip(&self_w)
            .map(|(a, s)| s + a.iter().map(|p| p.1).sum::<f64>())
            .collect();
        Level { adj, self_w, k: kk }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Edge, Provenance};

    fn und(n: usize, pairs: &[(u32, u32)]) -> EdgeSet {
        let edges = pairs.iter().map(|&(u, v)| Edge { u, v, weight: 1.0 }).collect();
        EdgeSet::new(n, false, edges, Provenance::default()).unwrap().0
    }

    fn clique(nodes: std::ops::Range<u32>) -> Vec<(u32, u32)> {
        let v: Vec<u32> = nodes.collect();
        let mut out = Vec::new();
        for (a, &u) in v.iter().enumerate() {
            for &w in &v[a + 1..] {
                out.push((u, w));
            }
        }
        out
    }

    #[test]
    fn modularity_examples() {
        let mut p = clique(0..3);
        p.extend(clique(3..6));
        let g = und(6, &p);
        assert_eq!(modularity(&g, &[0, 0, 0, 1, 1, 1]), 0.5);
        assert_eq!(modularity(&g, &[0; 6]), 0.0);
        let k = und(4, &clique(0..4));
        assert!(modularity(&k, &[0, 1, 2, 3]) < 0.0);
        assert_eq!(modularity(&und(3, &[]), &[0, 1, 2]), 0.0);
    }

    #[test]
    fn two_cliques_with_bridge() {
        let mut p = clique(0..5);
        p.extend(clique(5..10));
        p.push((4, 5));
        let g = und(10, &p);
        for seed in 0..5 {
            let a = louvain(&g, seed);
            assert_eq!(a.labels, vec![0, 0, 0, 0, 0, 1, 1, 1, 1, 1]);
            // Exhaustive check over all 2-partitions.
            let best = (0u32..1 << 10)
                .map(|mask| {
                    let l: Vec<u32> = (0..10).map(|i| (mask >> i) & 1).collect();
                    modularity(&g, &l)
                })
                .fold(f64::MIN, f64::max);
            assert_eq!(a.modularity, best);
        }
    }

    #[test]
    fn edgeless_is_singletons() {
        let a = louvain(&und(4, &[]), 0);
        assert_eq!(a.labels, vec![0, 1, 2, 3]);
        assert_eq!(a.modularity, 0.0);
    }

    #[test]
    fn single_clique_one_community() {
        let a = louvain(&und(6, &clique(0..6)), 3);
        assert_eq!(a.labels, vec![0; 6]);
    }

    #[test]
    fn phases_never_lose_modularity() {
        let mut p = Vec::new();
        for b in 0..6u32 {
            p.extend(clique(b * 4..b * 4 + 4));
            p.push((b * 4, ((b + 1) % 6) * 4 + 1));
        }
        let g = und(24, &p);
        let mut phases = Vec::new();
        let a = louvain_with(&g, 9, LouvainOptions::default(), |r| phases.push(*r));
        assert!(!phases.is_empty());
        for r in &phases {
            assert!(r.after >= r.before, "{r:?}");
        }
        assert_eq!(modularity(&g, &a.labels), a.modularity);
        assert_eq!(a.n_communities(), 6);
    }

    #[test]
    fn tsv_roundtrip() {
        let a = CommunityAssignment {
            labels: vec![0, 0, 1],
            modularity: 0.1 + 0.2,
        };
        let f = tempfile::NamedTempFile::new().unwrap();
        a.write_tsv(f.path()).unwrap();
        assert_eq!(CommunityAssignment::read_tsv(f.path()).unwrap(), a);
    }
}
