//! Exact k-nearest-neighbor ground truth and recall.

use crate::exec::{self, Execution};
use crate::graph::NodeId;
use crate::metric::Metric;

/// Exact `k` nearest points of `q` among `(id, vector)` pairs, closest
/// first, ties broken by lower id. Returns fewer than `k` ids (with a
/// warning) when there are fewer points.
pub fn exact_knn<'a, I>(q: &[f32], k: usize, points: I, metric: Metric) -> Vec<NodeId>
where
    I: IntoIterator<Item = (NodeId, &'a [f32])>,
{
    let mut scored: Vec<(f32, NodeId)> = points.into_iter().map(|(id, x)| (metric.eval(q, x), id)).collect();
    if k > scored.len() {
        log::warn!("exact_knn: k={k} exceeds {} points, truncating", scored.len());
    }
    let k = k.min(scored.len());
    let cmp = |a: &(f32, NodeId), b: &(f32, NodeId)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k == 0 {
        return Vec::new();
    }
    if k < scored.len() {
        scored.select_nth_unstable_by(k - 1, cmp);
        scored.truncate(k);
    }
    scored.sort_unstable_by(cmp);
    scored.into_iter().map(|(_, id)| id).collect()
}

/// Exact neighbors for a dense dataset where position `i` is `NodeId(i)`.
pub fn exact_knn_dense(q: &[f32], k: usize, data: &[Vec<f32>], metric: Metric) -> Vec<NodeId> {
    exact_knn(q, k, data.iter().enumerate().map(|(i, x)| (NodeId(i as u32), x.as_slice())), metric)
}

/// Ground truth for a batch of queries against `(id, vector)` points.
pub fn ground_truth(
    queries: &[Vec<f32>],
    k: usize,
    points: &[(NodeId, Vec<f32>)],
    metric: Metric,
    exec: Execution,
) -> Vec<Vec<NodeId>> {
    exec::map(exec, queries, |q| exact_knn(q, k, points.iter().map(|(id, x)| (*id, x.as_slice())), metric))
}

/// `|result ∩ truth| / |truth|`. Only the first `|truth|` results count.
pub fn recall(result: &[NodeId], truth: &[NodeId]) -> f64 {
    if truth.is_empty() {
        return 1.0;
    }
    let head = &result[..result.len().min(truth.len())];
    let hits = head.iter().filter(|id| truth.contains(id)).count();
    hits as f64 / truth.len() as f64
}

/// Mean recall over paired result and truth lists.
pub fn mean_recall(results: &[Vec<NodeId>], truths: &[Vec<NodeId>]) -> f64 {
    assert_eq!(results.len(), truths.len(), "result and truth counts differ");
    if truths.is_empty() {
        return 0.0;
    }
    results.iter().zip(truths).map(|(r, t)| recall(r, t)).sum::<f64>() / truths.len() as f64
}
