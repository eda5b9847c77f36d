use std::collections::BTreeSet;

use crate::sparse::SparseVec;

/// Labelled instances over a dictionary fixed at assembly time.
///
/// Instances are stored in ascending key order whatever order they arrive
/// in, with item ids remapped to dense column ids `0..dictionary.len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    dictionary: Vec<u32>,
    x: Vec<SparseVec>,
    y: Vec<u8>,
}

impl TrainingSet {
    /// `(key, features, label)` triples; keys only fix the canonical order.
    pub fn new(mut rows: Vec<(u64, SparseVec, u8)>) -> TrainingSet {
        rows.sort_by_key(|r| r.0);
        let dict: BTreeSet<u32> = rows.iter().flat_map(|r| r.1.indices().iter().copied()).collect();
        let dictionary: Vec<u32> = dict.into_iter().collect();
        let mut x = Vec::with_capacity(rows.len());
        let mut y = Vec::with_capacity(rows.len());
        for (_, v, label) in rows {
            let idx = v
                .indices()
                .iter()
                .map(|it| dictionary.binary_search(it).expect("item in dictionary") as u32)
                .collect();
            x.push(SparseVec::from_sorted(idx, v.values().to_vec()));
            y.push(u8::from(label != 0));
        }
        TrainingSet { dictionary, x, y }
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dictionary(&self) -> &[u32] {
        &self.dictionary
    }

    pub fn n_features(&self) -> usize {
        self.dictionary.len()
    }

    /// Instances in column space.
    pub fn x(&self) -> &[SparseVec] {
        &self.x
    }

    pub fn y(&self) -> &[u8] {
        &self.y
    }

    pub fn n_positive(&self) -> usize {
        self.y.iter().filter(|&&l| l == 1).count()
    }

    /// The only class present, if there is exactly one.
    pub fn single_class(&self) -> Option<u8> {
        let p = self.n_positive();
        match (p, self.len() - p) {
            (0, 0) => None,
            (_, 0) => Some(1),
            (0, _) => Some(0),
            _ => None,
        }
    }

    /// Map an item-space vector into column space, dropping unknown items.
    pub fn project(&self, v: &SparseVec) -> SparseVec {
        let mut idx = Vec::new();
        let mut val = Vec::new();
        for (it, x) in v.iter() {
            if let Ok(c) = self.dictionary.binary_search(&it) {
                idx.push(c as u32);
                val.push(x);
            }
        }
        SparseVec::from_sorted(idx, val)
    }
}
