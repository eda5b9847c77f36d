//! Sorted sparse vectors with non-negative entries.

use serde::{Deserialize, Serialize};

/// A sparse vector keyed by `u32` index, sorted ascending, with no stored zeros.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseVec {
    idx: Vec<u32>,
    val: Vec<f64>,
}

impl SparseVec {
    pub fn new() -> Self {
        Self::default()
    }

    /// Build from unsorted `(index, value)` pairs. Duplicate indices are summed
    /// and zero results are dropped.
    pub fn from_pairs(mut pairs: Vec<(u32, f64)>) -> Self {
        pairs.sort_by_key(|p| p.0);
        let mut idx = Vec::with_capacity(pairs.len());
        let mut val: Vec<f64> = Vec::with_capacity(pairs.len());
        for (i, v) in pairs {
            if idx.last() == Some(&i) {
                *val.last_mut().unwrap() += v;
            } else {
                idx.push(i);
                val.push(v);
            }
        }
        let mut out = SparseVec { idx, val };
        out.retain_nonzero();
        out
    }

    /// Build from pairs already sorted by strictly increasing index.
    ///
    /// Panics in debug builds if the order is violated.
    pub fn from_sorted(idx: Vec<u32>, val: Vec<f64>) -> Self {
        debug_assert_eq!(idx.len(), val.len());
        debug_assert!(idx.windows(2).all(|w| w[0] < w[1]));
        let mut out = SparseVec { idx, val };
        out.retain_nonzero();
        out
    }

    fn retain_nonzero(&mut self) {
        if self.val.iter().all(|v| *v != 0.0) {
            return;
        }
        let (idx, val): (Vec<u32>, Vec<f64>) = self
            .idx
            .iter()
            .zip(&self.val)
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, v)| (*i, *v))
            .unzip();
        self.idx = idx;
        self.val = val;
    }

    pub fn nnz(&self) -> usize {
        self.idx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.idx.is_empty()
    }

    pub fn indices(&self) -> &[u32] {
        &self.idx
    }

    pub fn values(&self) -> &[f64] {
        &self.val
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.idx.iter().copied().zip(self.val.iter().copied())
    }

    pub fn get(&self, i: u32) -> f64 {
        match self.idx.binary_search(&i) {
            Ok(p) => self.val[p],
            Err(_) => 0.0,
        }
    }

    pub fn sum(&self) -> f64 {
        self.val.iter().sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.val.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Element-wise minimum; only indices present in both survive.
    pub fn min_with(&self, other: &SparseVec) -> SparseVec {
        let (mut a, mut b) = (0, 0);
        let mut idx = Vec::new();
        let mut val = Vec::new();
        while a < self.idx.len() && b < other.idx.len() {
            match self.idx[a].cmp(&other.idx[b]) {
                std::cmp::Ordering::Less => a += 1,
                std::cmp::Ordering::Greater => b += 1,
                std::cmp::Ordering::Equal => {
                    idx.push(self.idx[a]);
                    val.push(self.val[a].min(other.val[b]));
                    a += 1;
                    b += 1;
                }
            }
        }
        SparseVec::from_sorted(idx, val)
    }

    /// Sum of element-wise minima over the shared support.
    pub fn min_sum(&self, other: &SparseVec) -> f64 {
        let (mut a, mut b) = (0, 0);
        let mut s = 0.0;
        while a < self.idx.len() && b < other.idx.len() {
            match self.idx[a].cmp(&other.idx[b]) {
                std::cmp::Ordering::Less => a += 1,
                std::cmp::Ordering::Greater => b += 1,
                std::cmp::Ordering::Equal => {
                    s += self.val[a].min(other.val[b]);
                    a += 1;
                    b += 1;
                }
            }
        }
        s
    }

    pub fn scaled(&self, c: f64) -> SparseVec {
        SparseVec::from_sorted(self.idx.clone(), self.val.iter().map(|v| v * c).collect())
    }

    pub fn min_value(&self) -> Option<f64> {
        self.val.iter().copied().reduce(f64::min)
    }
}

impl FromIterator<(u32, f64)> for SparseVec {
    fn from_iter<T: IntoIterator<Item = (u32, f64)>>(iter: T) -> Self {
        SparseVec::from_pairs(iter.into_iter().collect())
    }
}
