//! Neighborhood consolidation around deleted nodes.
//!
//! `consolidate` never holds two adjacency locks: it snapshots `N(v)`,
//! gathers grand-neighbors under shared locks, then rewrites `N(v)` under
//! its exclusive lock, keeping any entries that appeared in between.

use crate::error::Result;
use crate::exec::{self, Execution};
use crate::graph::{Graph, NodeId, SlotStatus};
use crate::prune::robust_prune;

/// Rewires `N(v)` around the non-live members of `dead`, which must come
/// from a snapshot of `N(v)`.
fn rewire(graph: &Graph, alpha: f32, v: NodeId, dead: &[NodeId]) -> Result<bool> {
    if dead.is_empty() {
        return Ok(false);
    }
    let mut gathered = Vec::new();
    for &w in dead {
        graph.with_neighbors(w, |n| gathered.extend(n.iter().copied().filter(|&u| u != v && graph.is_live(u))));
    }
    let anchor = graph.vector(v);
    let metric = graph.metric();
    let max_degree = graph.max_degree();
    graph.update_neighbors(v, |current| {
        let mut candidates: Vec<NodeId> = current
            .iter()
            .copied()
            .filter(|&u| match graph.status(u) {
                SlotStatus::Live => true,
                SlotStatus::Empty => false,
                // Tombstones that showed up after the snapshot wait for the
                // next consolidation.
                _ => !dead.contains(&u),
            })
            .collect();
        candidates.extend(gathered);
        Some(robust_prune(graph, metric, &anchor, v, &candidates, alpha, max_degree))
    })
}

/// Replaces every non-live out-neighbor `w` of `v` by the live out-neighbors
/// of `w`, pruning back to `R` when needed. Returns whether `N(v)` changed.
pub fn consolidate(graph: &Graph, alpha: f32, v: NodeId) -> Result<bool> {
    let dead: Vec<NodeId> = graph.read_neighbors(v).into_iter().filter(|&u| !graph.is_live(u)).collect();
    rewire(graph, alpha, v, &dead)
}

/// Consolidates `v` and credits one consolidation to each tombstoned
/// out-neighbor it had. Returns the number of tombstones credited.
pub fn clean_consolidate(graph: &Graph, alpha: f32, v: NodeId) -> Result<usize> {
    let snapshot = graph.read_neighbors(v);
    let tombstones: Vec<NodeId> = snapshot.iter().copied().filter(|&u| graph.is_tombstoned(u)).collect();
    if tombstones.is_empty() {
        return Ok(0);
    }
    let dead: Vec<NodeId> = snapshot.into_iter().filter(|&u| !graph.is_live(u)).collect();
    rewire(graph, alpha, v, &dead)?;
    for &w in &tombstones {
        graph.increment_consolidations(w);
    }
    Ok(tombstones.len())
}

/// Global pass used by the Fresh baseline: consolidates every live node,
/// then frees every tombstone. Returns the number of slots freed.
pub fn global_consolidate_baseline(graph: &Graph, alpha: f32, exec: Execution) -> Result<usize> {
    let live = graph.live_ids();
    let outcomes = exec::map(exec, &live, |&v| consolidate(graph, alpha, v));
    for outcome in outcomes {
        outcome?;
    }
    let mut freed = 0;
    for v in graph.allocated_ids() {
        if graph.status(v) == SlotStatus::Tombstoned && graph.release_to_empty(v) {
            freed += 1;
        }
    }
    Ok(freed)
}
