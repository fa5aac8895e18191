//! Guided bridge building: after a training search or an insert search,
//! cousins at selected depths of the search tree are linked to each other so
//! that later searches have more diverse paths through the region.

use std::fmt;
use std::str::FromStr;

use crate::error::{IndexError, Result};
use crate::graph::{Graph, NodeId};
use crate::prune::add_neighbors;
use crate::search::SearchTree;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum BridgePredicate {
    /// Both endpoints must sit at the same tree depth.
    #[default]
    SameDepth,
    AlwaysTrue,
}

impl FromStr for BridgePredicate {
    type Err = IndexError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "same-depth" => Ok(BridgePredicate::SameDepth),
            "all" | "always" => Ok(BridgePredicate::AlwaysTrue),
            other => Err(IndexError::InvalidArgument(format!("unknown bridge predicate '{other}'"))),
        }
    }
}

impl fmt::Display for BridgePredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BridgePredicate::SameDepth => "same-depth",
            BridgePredicate::AlwaysTrue => "all",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub enum DepthSelection {
    /// Derived from the current index size, see [`default_depth_set`].
    #[default]
    Auto,
    Fixed(Vec<u32>),
}

impl FromStr for DepthSelection {
    type Err = IndexError;

    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(DepthSelection::Auto);
        }
        let depths = s
            .split(',')
            .map(|t| t.trim().parse::<u32>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| IndexError::InvalidArgument(format!("bad depth list '{s}': {e}")))?;
        Ok(DepthSelection::Fixed(depths))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BridgeConfig {
    pub enabled: bool,
    pub depths: DepthSelection,
    pub predicate: BridgePredicate,
    /// Hard cap on ordered pairs examined per search.
    pub max_pairs_per_query: usize,
}

impl Default for BridgeConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            depths: DepthSelection::Auto,
            predicate: BridgePredicate::SameDepth,
            max_pairs_per_query: 256,
        }
    }
}

impl BridgeConfig {
    pub fn disabled() -> Self {
        Self { enabled: false, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if let DepthSelection::Fixed(depths) = &self.depths {
            if self.enabled && depths.is_empty() {
                return Err(IndexError::InvalidArgument("bridge depth set must be nonempty".into()));
            }
            if depths.contains(&0) {
                return Err(IndexError::InvalidArgument("bridge depths must be >= 1".into()));
            }
        }
        Ok(())
    }

    /// Depth set for an index currently holding `n` points.
    pub fn depth_set(&self, n: usize) -> Vec<u32> {
        match &self.depths {
            DepthSelection::Auto => default_depth_set(n),
            DepthSelection::Fixed(d) => d.clone(),
        }
    }
}

/// `{⌊log2 n⌋ + 2, ⌊log2 n⌋ + 3, ⌊log2 n⌋ + 4}`.
pub fn default_depth_set(n: usize) -> Vec<u32> {
    let log = n.max(1).ilog2();
    vec![log + 2, log + 3, log + 4]
}

pub fn heuristic_predicate(v: NodeId, w: NodeId, tree: &SearchTree, predicate: BridgePredicate) -> bool {
    match predicate {
        BridgePredicate::AlwaysTrue => true,
        BridgePredicate::SameDepth => match (tree.depth(v), tree.depth(w)) {
            (Some(a), Some(b)) => a == b,
            _ => false,
        },
    }
}

/// Ordered candidate pairs in `(depth, v, w)` order, truncated to `cap`.
/// Every recorded tree node takes part, expanded or not.
pub fn bridge_pairs(
    tree: &SearchTree,
    depths: &[u32],
    predicate: BridgePredicate,
    cap: usize,
) -> Vec<(NodeId, NodeId)> {
    let mut nodes: Vec<(u32, NodeId)> = tree
        .iter()
        .filter(|(_, n)| depths.contains(&n.depth))
        .map(|(id, n)| (n.depth, id))
        .collect();
    nodes.sort_unstable();

    let mut pairs = Vec::new();
    match predicate {
        BridgePredicate::SameDepth => {
            for bucket in nodes.chunk_by(|a, b| a.0 == b.0) {
                for &(_, v) in bucket {
                    for &(_, w) in bucket {
                        if v != w {
                            if pairs.len() == cap {
                                return pairs;
                            }
                            pairs.push((v, w));
                        }
                    }
                }
            }
        }
        BridgePredicate::AlwaysTrue => {
            for &(_, v) in &nodes {
                for &(_, w) in &nodes {
                    if v != w {
                        if pairs.len() == cap {
                            return pairs;
                        }
                        pairs.push((v, w));
                    }
                }
            }
        }
    }
    pairs
}

/// What one bridge-building pass did.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BridgeReport {
    pub pairs_considered: usize,
    /// `(v, w)` pairs whose `add_neighbors(v, {w})` call changed `N(v)`.
    pub changed: Vec<(NodeId, NodeId)>,
}

/// Links cousins of `tree` whose depths fall in the configured set.
/// Pairs touching a node that is no longer live are skipped.
pub fn guided_bridge_build(
    graph: &Graph,
    alpha: f32,
    cfg: &BridgeConfig,
    tree: &SearchTree,
    index_size: usize,
) -> Result<BridgeReport> {
    let mut report = BridgeReport::default();
    if !cfg.enabled {
        return Ok(report);
    }
    let depths = cfg.depth_set(index_size);
    let pairs = bridge_pairs(tree, &depths, cfg.predicate, cfg.max_pairs_per_query);
    report.pairs_considered = pairs.len();
    for (v, w) in pairs {
        if !graph.is_live(v) || !graph.is_live(w) {
            continue;
        }
        if add_neighbors(graph, alpha, v, &[w])? {
            report.changed.push((v, w));
        }
    }
    Ok(report)
}
