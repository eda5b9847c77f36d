use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::TrainingSet;
use crate::rng;
use crate::sparse::SparseVec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmParams {
    pub reg: f64,
    pub epochs: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams { reg: 1e-4, epochs: 10 }
    }
}

/// Primal linear SVM. The bias is the weight of a constant feature appended
/// to every L2-normalized instance, so it is regularized with the rest.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSvm {
    /// `n_features` weights followed by the bias.
    w: Vec<f64>,
}

fn normalized(x: &SparseVec) -> SparseVec {
    let n = x.l2_norm();
    if n > 0.0 {
        x.scaled(1.0 / n)
    } else {
        x.clone()
    }
}

impl LinearSvm {
    /// Pegasos: one seeded shuffle per epoch, step `1/(reg·t)`, projection
    /// onto the `1/√reg` ball. At each epoch end both the current iterate and
    /// the running average of all iterates are scored; the returned weights
    /// are the lowest-objective candidate seen, or zero if none beat it.
    pub fn train(data: &TrainingSet, p: &SvmParams, seed: u64) -> LinearSvm {
        let d = data.n_features();
        let xs: Vec<SparseVec> = data.x().iter().map(normalized).collect();
        let ys: Vec<f64> = data.y().iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect();
        let n = xs.len();
        let lambda = p.reg;
        let radius = 1.0 / lambda.sqrt();

        // w_t = scale · v. The iterate sum is Σ_t w_t = v · s_sum + u, where
        // s_sum is the running sum of scales and u absorbs each update made
        // partway through.
        let mut v = vec![0.0; d + 1];
        let mut u = vec![0.0; d + 1];
        let mut scale = 1.0;
        let mut s_sum = 0.0;
        let mut sq = 0.0; // ‖v‖²
        let mut best = LinearSvm { w: vec![0.0; d + 1] };
        let mut best_obj = best.objective(&xs, &ys, lambda);
        let mut order: Vec<usize> = (0..n).collect();
        let mut r = rng::rng(seed);
        let mut t = 0usize;
        for _ in 0..p.epochs {
            order.shuffle(&mut r);
            for &k in &order {
                t += 1;
                let eta = 1.0 / (lambda * t as f64);
                let (x, y) = (&xs[k], ys[k]);
                let margin = y * scale * (dot(&v, x) + v[d]);
                let shrink = 1.0 - eta * lambda;
                if shrink <= 0.0 {
                    // Only at t = 1, where v is still zero.
                    scale = 1.0;
                } else {
                    scale *= shrink;
                }
                if margin < 1.0 {
                    let c = eta * y / scale;
                    let mut add = |i: usize, delta: f64| {
                        let old = v[i];
                        v[i] += delta;
                        u[i] -= delta * s_sum;
                        sq += v[i] * v[i] - old * old;
                    };
                    for (i, xi) in x.iter() {
                        add(i as usize, c * xi);
                    }
                    add(d, c);
                }
                let norm = scale * sq.max(0.0).sqrt();
                if norm > radius {
                    scale *= radius / norm;
                }
                s_sum += scale;
                if scale < 1e-100 {
                    for (vi, ui) in v.iter_mut().zip(u.iter_mut()) {
                        *ui += *vi * s_sum;
                        *vi *= scale;
                    }
                    sq = v.iter().map(|e| e * e).sum();
                    scale = 1.0;
                    s_sum = 0.0;
                }
            }
            let current = LinearSvm {
                w: v.iter().map(|e| e * scale).collect(),
            };
            let average = LinearSvm {
                w: v.iter().zip(&u).map(|(vi, ui)| (vi * s_sum + ui) / t as f64).collect(),
            };
            for cand in [average, current] {
                let obj = cand.objective(&xs, &ys, lambda);
                if obj < best_obj {
                    best_obj = obj;
                    best = cand;
                }
            }
            // Refresh the running norm against drift.
            sq = v.iter().map(|e| e * e).sum();
        }
        best
    }

    /// `reg/2·‖w‖² + mean hinge loss` over already normalized instances.
    fn objective(&self, xs: &[SparseVec], ys: &[f64], reg: f64) -> f64 {
        let d = self.w.len() - 1;
        let norm2: f64 = self.w.iter().map(|e| e * e).sum();
        let hinge: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| (1.0 - y * (dot(&self.w, x) + self.w[d])).max(0.0))
            .sum();
        reg / 2.0 * norm2 + hinge / xs.len().max(1) as f64
    }

    /// Objective on raw training data, normalizing as training does.
    pub fn training_objective(&self, data: &TrainingSet, reg: f64) -> f64 {
        let xs: Vec<SparseVec> = data.x().iter().map(normalized).collect();
        let ys: Vec<f64> = data.y().iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect();
        self.objective(&xs, &ys, reg)
    }

    /// Objective of the all-zero weight vector, which is always 1.
    pub fn zero_objective() -> f64 {
        1.0
    }

    pub fn weights(&self) -> &[f64] {
        &self.w[..self.w.len() - 1]
    }

    pub fn bias(&self) -> f64 {
        self.w[self.w.len() - 1]
    }

    /// Decision value on a column-space vector.
    pub fn decision(&self, x: &SparseVec) -> f64 {
        dot(&self.w, &normalized(x)) + self.bias()
    }

    /// Class for a column-space vector; a zero decision value maps to 1.
    pub fn predict(&self, x: &SparseVec) -> u8 {
        u8::from(self.decision(x) >= 0.0)
    }
}

fn dot(w: &[f64], x: &SparseVec) -> f64 {
    x.iter().filter(|(i, _)| (*i as usize) < w.len() - 1).map(|(i, v)| w[i as usize] * v).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn separable() -> TrainingSet {
        let mut rows = Vec::new();
        for k in 0..5 {
            let t = 1.0 + k as f64;
            rows.push((k, SparseVec::from_pairs(vec![(0, 3.0 + t), (1, 1.0)]), 1));
            rows.push((10 + k, SparseVec::from_pairs(vec![(0, 1.0), (1, 3.0 + t)]), 0));
        }
        TrainingSet::new(rows)
    }

    #[test]
    fn separable_fixture_fits() {
        let data = separable();
        let m = LinearSvm::train(&data, &SvmParams::default(), 1);
        for (x, y) in data.x().iter().zip(data.y()) {
            assert_eq!(m.predict(x), *y);
        }
        assert!(m.training_objective(&data, 1e-4) <= LinearSvm::zero_objective());
    }

    #[test]
    fn deterministic_per_seed() {
        let data = separable();
        let a = LinearSvm::train(&data, &SvmParams::default(), 7);
        let b = LinearSvm::train(&data, &SvmParams::default(), 7);
        assert_eq!(a, b);
    }

    #[test]
    fn empty_input_is_bias_sign() {
        let m = LinearSvm::train(&separable(), &SvmParams::default(), 3);
        assert_eq!(m.predict(&SparseVec::new()), u8::from(m.bias() >= 0.0));
    }
}
