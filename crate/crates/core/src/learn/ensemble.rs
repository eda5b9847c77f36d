use crate::data::AttributeMatrix;
use crate::similarity::{sim_unchecked, Measure};
use crate::sparse::SparseVec;

/// Majority vote of the `knn` members most similar to `query`.
///
/// Members are `(node, prediction)` pairs; the prediction is the member
/// classifier's output on the test instance. Similarity ties go to the lower
/// node id, vote ties to class 1.
pub fn ensemble_vote(
    members: &[(u32, u8)],
    query: &SparseVec,
    measure: Measure,
    knn: usize,
    member_attrs: &AttributeMatrix,
) -> u8 {
    let mut ranked: Vec<(f64, u32, u8)> = members
        .iter()
        .map(|&(node, pred)| (sim_unchecked(measure, query, member_attrs.row(node as usize)), node, pred))
        .collect();
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let top = &ranked[..knn.min(ranked.len())];
    let pos = top.iter().filter(|m| m.2 == 1).count();
    u8::from(2 * pos >= top.len())
}
