//! α-RNG neighbor selection and bounded neighbor insertion.

use rustc_hash::FxHashSet;

use crate::error::Result;
use crate::graph::{Graph, NodeId};
use crate::metric::Metric;

/// Read access to stored vectors, so pruning can run against the arena or
/// against plain in-memory data in tests and static tooling.
pub trait VectorSource {
    fn distance_to(&self, metric: Metric, q: &[f32], id: NodeId) -> f32;
    fn load(&self, id: NodeId, out: &mut Vec<f32>);
}

impl VectorSource for Graph {
    #[inline]
    fn distance_to(&self, metric: Metric, q: &[f32], id: NodeId) -> f32 {
        debug_assert_eq!(metric, self.metric());
        Graph::distance_to(self, q, id)
    }

    fn load(&self, id: NodeId, out: &mut Vec<f32>) {
        self.load_vector(id, out)
    }
}

impl VectorSource for [Vec<f32>] {
    #[inline]
    fn distance_to(&self, metric: Metric, q: &[f32], id: NodeId) -> f32 {
        metric.eval(q, &self[id.index()])
    }

    fn load(&self, id: NodeId, out: &mut Vec<f32>) {
        out.clear();
        out.extend_from_slice(&self[id.index()]);
    }
}

fn dedup_excluding(anchor: NodeId, candidates: &[NodeId]) -> Vec<NodeId> {
    let mut seen = FxHashSet::default();
    candidates
        .iter()
        .copied()
        .filter(|&c| c != anchor && seen.insert(c))
        .collect()
}

/// Selects at most `max_degree` out-neighbors for `anchor` from
/// `candidates`.
///
/// Candidates are visited in ascending `(distance to anchor, id)` order. Each
/// selected `p` removes every remaining `p'` with
/// `alpha * d(p', p) < d(p', anchor)`, where `d` is the Euclidean distance
/// for L2 (the stored score is squared, so `alpha` is squared to match). When
/// there are no more than `max_degree` distinct candidates they are returned
/// as given.
pub fn robust_prune<S: VectorSource + ?Sized>(
    store: &S,
    metric: Metric,
    anchor_vec: &[f32],
    anchor: NodeId,
    candidates: &[NodeId],
    alpha: f32,
    max_degree: usize,
) -> Vec<NodeId> {
    let unique = dedup_excluding(anchor, candidates);
    if unique.len() <= max_degree {
        return unique;
    }
    let mut pool: Vec<(f32, NodeId)> = unique
        .into_iter()
        .map(|c| (store.distance_to(metric, anchor_vec, c), c))
        .collect();
    pool.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let factor = metric.prune_factor(alpha);
    let mut pruned = vec![false; pool.len()];
    let mut selected = Vec::with_capacity(max_degree);
    let mut buf = Vec::with_capacity(anchor_vec.len());
    for i in 0..pool.len() {
        if pruned[i] {
            continue;
        }
        let p = pool[i].1;
        selected.push(p);
        if selected.len() >= max_degree {
            break;
        }
        store.load(p, &mut buf);
        for j in i + 1..pool.len() {
            if !pruned[j] && factor * store.distance_to(metric, &buf, pool[j].1) < pool[j].0 {
                pruned[j] = true;
            }
        }
    }
    selected
}

/// Merges `new` into `N(v)`, pruning with [`robust_prune`] when the union
/// would exceed the degree bound. The whole read-modify-write happens under
/// `v`'s exclusive adjacency lock. Returns whether `N(v)` changed.
pub fn add_neighbors(graph: &Graph, alpha: f32, v: NodeId, new: &[NodeId]) -> Result<bool> {
    if new.iter().all(|&u| u == v) {
        return Ok(false);
    }
    let anchor = graph.vector(v);
    let bound = graph.max_degree();
    graph.update_neighbors(v, |current| {
        let mut union = current.to_vec();
        for &u in new {
            if u != v && !union.contains(&u) {
                union.push(u);
            }
        }
        if union.len() == current.len() {
            return None;
        }
        if union.len() <= bound {
            Some(union)
        } else {
            Some(robust_prune(graph, graph.metric(), &anchor, v, &union, alpha, bound))
        }
    })
}
