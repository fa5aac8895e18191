//! Best-first beam search.
//!
//! The frontier and the best-`L` set are one bounded candidate pool sorted
//! by `(distance, NodeId)`, each entry carrying an expanded flag. The search
//! stops once every pool entry has been expanded.

use std::cmp::Ordering;

use rustc_hash::FxHashMap;

use crate::bridge::{guided_bridge_build, BridgeReport};
use crate::consolidate::clean_consolidate;
use crate::error::Result;
use crate::graph::{Graph, NodeId, SlotStatus};
use crate::params::IndexParams;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Candidate {
    pub id: NodeId,
    pub dist: f32,
}

#[inline]
fn order(a: &Candidate, b: &Candidate) -> Ordering {
    a.dist.total_cmp(&b.dist).then(a.id.cmp(&b.id))
}

/// Bounded pool of the best candidates seen so far.
#[derive(Clone, Debug)]
pub struct Beam {
    entries: Vec<(Candidate, bool)>,
    width: usize,
    /// Every entry before this index has been expanded.
    cursor: usize,
}

impl Beam {
    pub fn new(width: usize) -> Self {
        let width = width.max(1);
        Self { entries: Vec::with_capacity(width + 1), width, cursor: 0 }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Distance of the worst retained entry, if the pool is full.
    pub fn admission_bound(&self) -> Option<f32> {
        (self.entries.len() == self.width).then(|| self.entries[self.width - 1].0.dist)
    }

    /// Inserts `c` if it beats the worst entry or the pool has room. The
    /// caller guarantees `c.id` is not already present.
    pub fn insert(&mut self, c: Candidate) -> bool {
        if self.entries.len() == self.width && order(&c, &self.entries[self.width - 1].0) != Ordering::Less {
            return false;
        }
        let pos = self.entries.partition_point(|(e, _)| order(e, &c) == Ordering::Less);
        self.entries.insert(pos, (c, false));
        self.entries.truncate(self.width);
        if pos < self.cursor {
            self.cursor = pos;
        }
        true
    }

    /// Closest entry not yet expanded, which is then flagged as expanded.
    pub fn next_unexpanded(&mut self) -> Option<Candidate> {
        while self.cursor < self.entries.len() {
            let i = self.cursor;
            self.cursor += 1;
            if !self.entries[i].1 {
                self.entries[i].1 = true;
                return Some(self.entries[i].0);
            }
        }
        None
    }

    pub fn iter(&self) -> impl Iterator<Item = Candidate> + '_ {
        self.entries.iter().map(|(c, _)| *c)
    }

    pub fn into_candidates(self) -> Vec<Candidate> {
        self.entries.into_iter().map(|(c, _)| c).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TreeNode {
    pub parent: Option<NodeId>,
    pub depth: u32,
    /// Whether the search expanded this node (as opposed to only seeing it).
    pub explored: bool,
}

/// Parent and depth of every node a single search reached.
#[derive(Clone, Debug, Default)]
pub struct SearchTree {
    nodes: FxHashMap<NodeId, TreeNode>,
}

impl SearchTree {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_root(&mut self, id: NodeId) -> bool {
        if self.nodes.contains_key(&id) {
            return false;
        }
        self.nodes.insert(id, TreeNode { parent: None, depth: 0, explored: false });
        true
    }

    /// Records `parent = π(child)` unless `child` already has a record.
    pub fn record_child(&mut self, parent: NodeId, child: NodeId) -> bool {
        let Some(depth) = self.depth(parent) else {
            return false;
        };
        match self.nodes.entry(child) {
            std::collections::hash_map::Entry::Occupied(_) => false,
            std::collections::hash_map::Entry::Vacant(slot) => {
                slot.insert(TreeNode { parent: Some(parent), depth: depth + 1, explored: false });
                true
            }
        }
    }

    pub fn mark_explored(&mut self, id: NodeId) {
        if let Some(n) = self.nodes.get_mut(&id) {
            n.explored = true;
        }
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.nodes.contains_key(&id)
    }

    pub fn is_explored(&self, id: NodeId) -> bool {
        self.nodes.get(&id).is_some_and(|n| n.explored)
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.nodes.get(&id).and_then(|n| n.parent)
    }

    pub fn depth(&self, id: NodeId) -> Option<u32> {
        self.nodes.get(&id).map(|n| n.depth)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, &TreeNode)> + '_ {
        self.nodes.iter().map(|(id, n)| (*id, n))
    }
}

/// Side effects of a clean search, for instrumentation.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CleanupEvents {
    /// Nodes whose neighborhood was consolidated, in order.
    pub consolidated: Vec<NodeId>,
    pub marked_replaceable: Vec<NodeId>,
    pub bridge: BridgeReport,
}

#[derive(Clone, Debug, Default)]
pub struct SearchResult {
    /// Final pool, ascending by `(dist, id)`.
    pub best: Vec<Candidate>,
    /// Expanded nodes in expansion order.
    pub visited: Vec<NodeId>,
    pub tree: SearchTree,
    pub events: CleanupEvents,
}

fn seed(graph: &Graph, q: &[f32], start: &[NodeId], beam: &mut Beam, tree: &mut SearchTree) {
    for &s in start {
        if s.index() < graph.capacity() && graph.status(s) != SlotStatus::Empty && tree.add_root(s) {
            beam.insert(Candidate { id: s, dist: graph.distance_to(q, s) });
        }
    }
}

/// Plain best-first search from `start` with pool width `width`.
pub fn greedy_beam_search(graph: &Graph, q: &[f32], width: usize, start: &[NodeId]) -> SearchResult {
    let mut beam = Beam::new(width);
    let mut tree = SearchTree::new();
    let mut visited = Vec::new();
    let mut nbuf = Vec::with_capacity(graph.max_degree());
    seed(graph, q, start, &mut beam, &mut tree);

    while let Some(w) = beam.next_unexpanded() {
        visited.push(w.id);
        tree.mark_explored(w.id);
        nbuf.clear();
        graph.with_neighbors(w.id, |n| nbuf.extend_from_slice(n));
        for &u in &nbuf {
            if graph.status(u) == SlotStatus::Empty || !tree.record_child(w.id, u) {
                continue;
            }
            beam.insert(Candidate { id: u, dist: graph.distance_to(q, u) });
        }
    }
    SearchResult { best: beam.into_candidates(), visited, tree, events: CleanupEvents::default() }
}

/// Best-first search that also cleans up around tombstones it meets and,
/// unless `performance_sensitive`, builds bridges over its search tree.
///
/// * An explored tombstone with enough consolidations becomes replaceable.
/// * A live node with a tombstoned, not yet expanded out-neighbor is
///   consolidated on the spot.
/// * Performance-sensitive searches keep tombstones out of the pool, so
///   their out-neighbors are never expanded.
pub fn clean_dynamic_beam_search(
    graph: &Graph,
    params: &IndexParams,
    q: &[f32],
    width: usize,
    start: &[NodeId],
    performance_sensitive: bool,
) -> Result<SearchResult> {
    let mut beam = Beam::new(width);
    let mut tree = SearchTree::new();
    let mut visited = Vec::new();
    let mut events = CleanupEvents::default();
    let mut nbuf = Vec::with_capacity(graph.max_degree());
    seed(graph, q, start, &mut beam, &mut tree);

    while let Some(w) = beam.next_unexpanded() {
        visited.push(w.id);
        tree.mark_explored(w.id);
        let w_tombstoned = graph.is_tombstoned(w.id);
        if w_tombstoned && graph.try_mark_replaceable(w.id, params.eagerness) {
            events.marked_replaceable.push(w.id);
        }

        nbuf.clear();
        graph.with_neighbors(w.id, |n| nbuf.extend_from_slice(n));
        let mut tombstoned_child = false;
        for &u in &nbuf {
            if tree.is_explored(u) || graph.status(u) == SlotStatus::Empty {
                continue;
            }
            let u_tombstoned = graph.is_tombstoned(u);
            tombstoned_child |= u_tombstoned;
            if !tree.record_child(w.id, u) || (performance_sensitive && u_tombstoned) {
                continue;
            }
            beam.insert(Candidate { id: u, dist: graph.distance_to(q, u) });
        }

        if tombstoned_child && !w_tombstoned && clean_consolidate(graph, params.alpha, w.id)? > 0 {
            events.consolidated.push(w.id);
        }
    }

    if !performance_sensitive {
        events.bridge = guided_bridge_build(graph, params.alpha, &params.bridge, &tree, graph.live_count())?;
    }
    Ok(SearchResult { best: beam.into_candidates(), visited, tree, events })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::Metric;
    use crate::params::ReusePriority;

    fn c(id: u32, dist: f32) -> Candidate {
        Candidate { id: NodeId(id), dist }
    }

    #[test]
    fn beam_keeps_best_sorted_with_id_tiebreak() {
        let mut b = Beam::new(3);
        assert!(b.insert(c(5, 2.0)));
        assert!(b.insert(c(2, 1.0)));
        assert!(b.insert(c(9, 2.0)));
        assert!(b.insert(c(1, 2.0)));
        let ids: Vec<u32> = b.iter().map(|x| x.id.0).collect();
        assert_eq!(ids, vec![2, 1, 5]);
        assert!(!b.insert(c(7, 3.0)));
        assert!(!b.insert(c(6, 2.0)));
        assert_eq!(b.admission_bound(), Some(2.0));
    }

    #[test]
    fn beam_cursor_rewinds_on_better_insert() {
        let mut b = Beam::new(4);
        b.insert(c(1, 1.0));
        b.insert(c(2, 2.0));
        assert_eq!(b.next_unexpanded().unwrap().id, NodeId(1));
        b.insert(c(3, 0.5));
        assert_eq!(b.next_unexpanded().unwrap().id, NodeId(3));
        assert_eq!(b.next_unexpanded().unwrap().id, NodeId(2));
        assert!(b.next_unexpanded().is_none());
    }

    #[test]
    fn tree_first_explorer_wins() {
        let mut t = SearchTree::new();
        t.add_root(NodeId(0));
        assert!(t.record_child(NodeId(0), NodeId(1)));
        assert!(t.record_child(NodeId(1), NodeId(2)));
        assert!(!t.record_child(NodeId(0), NodeId(2)));
        assert_eq!(t.depth(NodeId(2)), Some(2));
        assert_eq!(t.parent(NodeId(2)), Some(NodeId(1)));
        assert!(!t.record_child(NodeId(42), NodeId(3)));
    }

    #[test]
    fn single_node_graph() {
        let g = Graph::new(2, 4, 4, Metric::L2, ReusePriority::FreshFirst).unwrap();
        let s = g.acquire_slot(&[1.0, 1.0]).unwrap().id;
        let r = greedy_beam_search(&g, &[5.0, 5.0], 8, &[s]);
        assert_eq!(r.visited, vec![s]);
        assert_eq!(r.best.len(), 1);
        assert_eq!(r.best[0].id, s);
    }

    #[test]
    fn empty_start_gives_empty_result() {
        let g = Graph::new(2, 4, 4, Metric::L2, ReusePriority::FreshFirst).unwrap();
        let r = greedy_beam_search(&g, &[0.0, 0.0], 8, &[]);
        assert!(r.best.is_empty() && r.visited.is_empty());
    }
}
