//! Supervised learners for the two tasks: a Pegasos-style linear SVM and a
//! random forest of Gini CART trees, both trained from scratch.

mod dataset;
mod ensemble;
mod forest;
mod svm;

pub use dataset::TrainingSet;
pub use ensemble::ensemble_vote;
pub use forest::{FeatureFrac, RandomForest, RfParams, Tree};
pub use svm::{LinearSvm, SvmParams};

use serde::{Deserialize, Serialize};

use crate::sparse::SparseVec;

/// Pairwise link features: the element-wise minimum of the two endpoint
/// vectors. Its sum is the INT similarity of the pair.
pub fn edge_features(a: &SparseVec, b: &SparseVec) -> SparseVec {
    a.min_with(b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ClassifierKind {
    #[serde(rename = "svm")]
    LinearSvm,
    #[serde(rename = "rf")]
    RandomForest,
}

impl ClassifierKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ClassifierKind::LinearSvm => "svm",
            ClassifierKind::RandomForest => "rf",
        }
    }

    pub fn parse(s: &str) -> Option<ClassifierKind> {
        match s {
            "svm" => Some(ClassifierKind::LinearSvm),
            "rf" => Some(ClassifierKind::RandomForest),
            _ => None,
        }
    }
}

impl std::fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearnParams {
    pub svm: SvmParams,
    pub rf: RfParams,
}

/// A trained model. Immutable after training.
#[derive(Debug, Clone, PartialEq)]
pub enum Classifier {
    /// Single-class training data: always predicts that class.
    Constant(u8),
    Svm(LinearSvm),
    Forest(RandomForest),
}

impl Classifier {
    /// Predict a label for a raw (item-space) vector; items outside the
    /// training dictionary are dropped.
    pub fn predict(&self, data: &TrainingSet, x: &SparseVec) -> u8 {
        match self {
            Classifier::Constant(c) => *c,
            Classifier::Svm(m) => m.predict(&data.project(x)),
            Classifier::Forest(m) => m.predict(&data.project(x)),
        }
    }
}

/// A classifier bundled with the dictionary it was trained over.
#[derive(Debug, Clone, PartialEq)]
pub struct Trained {
    pub data: TrainingSet,
    pub model: Classifier,
}

impl Trained {
    pub fn predict(&self, x: &SparseVec) -> u8 {
        self.model.predict(&self.data, x)
    }
}

/// Train `kind` on `data`. `None` when the set is empty (untrainable); a
/// single-class set gives [`Classifier::Constant`].
pub fn train(kind: ClassifierKind, params: &LearnParams, data: TrainingSet, seed: u64) -> Option<Trained> {
    if data.is_empty() {
        return None;
    }
    let model = if let Some(c) = data.single_class() {
        Classifier::Constant(c)
    } else {
        match kind {
            ClassifierKind::LinearSvm => Classifier::Svm(LinearSvm::train(&data, &params.svm, seed)),
            ClassifierKind::RandomForest => Classifier::Forest(RandomForest::train(&data, &params.rf, seed)),
        }
    };
    Some(Trained { data, model })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(p: &[(u32, f64)]) -> SparseVec {
        SparseVec::from_pairs(p.to_vec())
    }

    #[test]
    fn edge_feature_examples() {
        let a = v(&[(1, 3.0), (2, 1.0)]);
        let b = v(&[(1, 2.0), (3, 5.0)]);
        assert_eq!(edge_features(&a, &b), v(&[(1, 2.0)]));
        assert!(edge_features(&v(&[(1, 1.0)]), &v(&[(2, 1.0)])).is_empty());
        assert_eq!(edge_features(&a, &a), a);
    }

    #[test]
    fn empty_is_untrainable_single_class_is_constant() {
        assert!(train(ClassifierKind::LinearSvm, &LearnParams::default(), TrainingSet::new(vec![]), 0).is_none());
        let data = TrainingSet::new(vec![(0, v(&[(1, 1.0)]), 1), (1, v(&[(2, 1.0)]), 1)]);
        let t = train(ClassifierKind::RandomForest, &LearnParams::default(), data, 0).unwrap();
        assert_eq!(t.model, Classifier::Constant(1));
        assert_eq!(t.predict(&v(&[(99, 4.0)])), 1);
    }
}
