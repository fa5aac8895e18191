//! Public index: insert, delete, search and static builds, dispatched on the
//! engine mode.

use std::fmt;
use std::str::FromStr;

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::consolidate::global_consolidate_baseline;
use crate::error::{IndexError, Result};
use crate::exec::{self, Execution};
use crate::graph::{ArenaStats, Graph, NodeId, SlotStatus};
use crate::params::IndexParams;
use crate::prune::{add_neighbors, robust_prune};
use crate::search::{clean_dynamic_beam_search, greedy_beam_search, Candidate, SearchResult};

/// Largest sample used to pick the medoid start node.
const MEDOID_SAMPLE: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Hash)]
pub enum EngineMode {
    /// Bridge building, clean search and semi-lazy slot reuse.
    #[default]
    CleANN,
    /// Plain inserts; tombstones are never cleaned.
    Naive,
    /// Plain inserts plus a periodic global consolidation pass.
    Fresh,
    /// Plain inserts; the caller rebuilds the whole index between rounds.
    Rebuild,
}

impl EngineMode {
    pub(crate) fn to_byte(self) -> u8 {
        match self {
            EngineMode::CleANN => 0,
            EngineMode::Naive => 1,
            EngineMode::Fresh => 2,
            EngineMode::Rebuild => 3,
        }
    }

    pub(crate) fn from_byte(b: u8) -> Option<Self> {
        Some(match b {
            0 => EngineMode::CleANN,
            1 => EngineMode::Naive,
            2 => EngineMode::Fresh,
            3 => EngineMode::Rebuild,
            _ => return None,
        })
    }
}

impl FromStr for EngineMode {
    type Err = IndexError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cleann" => Ok(EngineMode::CleANN),
            "naive" => Ok(EngineMode::Naive),
            "fresh" => Ok(EngineMode::Fresh),
            "rebuild" => Ok(EngineMode::Rebuild),
            other => Err(IndexError::InvalidArgument(format!("unknown engine '{other}'"))),
        }
    }
}

impl fmt::Display for EngineMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EngineMode::CleANN => "cleann",
            EngineMode::Naive => "naive",
            EngineMode::Fresh => "fresh",
            EngineMode::Rebuild => "rebuild",
        })
    }
}

/// What an insert did, for tests and diagnostics.
#[derive(Clone, Debug)]
pub struct InsertTrace {
    pub id: NodeId,
    pub reused: bool,
    /// Out-neighbors the slot still carried from its previous occupant.
    pub retained: Vec<NodeId>,
    /// Candidate set handed to pruning.
    pub candidates: Vec<NodeId>,
    pub search: SearchResult,
}

/// A concurrent dynamic graph index. All methods take `&self` and may be
/// called from many threads at once.
pub struct Index {
    graph: Graph,
    params: IndexParams,
    engine: EngineMode,
}

impl Index {
    pub fn new(dim: usize, params: IndexParams, engine: EngineMode) -> Result<Self> {
        params.validate()?;
        let graph = Graph::new(dim, params.capacity, params.max_degree, params.metric, params.reuse)?;
        Ok(Self { graph, params, engine })
    }

    pub(crate) fn from_parts(graph: Graph, params: IndexParams, engine: EngineMode) -> Self {
        Self { graph, params, engine }
    }

    pub fn params(&self) -> &IndexParams {
        &self.params
    }

    pub fn engine(&self) -> EngineMode {
        self.engine
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn dim(&self) -> usize {
        self.graph.dim()
    }

    /// Number of live points.
    pub fn len(&self) -> usize {
        self.graph.live_count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn start(&self) -> Option<NodeId> {
        self.graph.start()
    }

    fn start_ids(&self) -> Vec<NodeId> {
        self.graph.start().into_iter().collect()
    }

    pub fn insert(&self, x: &[f32]) -> Result<NodeId> {
        self.insert_traced(x).map(|t| t.id)
    }

    pub fn insert_traced(&self, x: &[f32]) -> Result<InsertTrace> {
        let acquired = self.graph.acquire_slot(x)?;
        let id = acquired.id;
        let retained = if acquired.reused { self.graph.read_neighbors(id) } else { Vec::new() };
        if self.graph.init_start(id) {
            return Ok(InsertTrace {
                id,
                reused: acquired.reused,
                retained,
                candidates: Vec::new(),
                search: SearchResult::default(),
            });
        }
        let start = self.start_ids();
        let search = match self.engine {
            EngineMode::CleANN => {
                clean_dynamic_beam_search(&self.graph, &self.params, x, self.params.insert_beam, &start, false)?
            }
            _ => greedy_beam_search(&self.graph, x, self.params.insert_beam, &start),
        };
        let candidates: Vec<NodeId> = search
            .visited
            .iter()
            .chain(&retained)
            .copied()
            .filter(|&u| u != id && self.graph.status(u) != SlotStatus::Empty)
            .collect();
        self.link(id, x, &candidates, self.params.alpha)?;
        Ok(InsertTrace { id, reused: acquired.reused, retained, candidates, search })
    }

    /// Sets `N(id)` from `candidates` and adds the reverse edges.
    fn link(&self, id: NodeId, x: &[f32], candidates: &[NodeId], alpha: f32) -> Result<()> {
        let chosen = robust_prune(
            &self.graph,
            self.params.metric,
            x,
            id,
            candidates,
            alpha,
            self.params.max_degree,
        );
        self.graph.write_neighbors(id, chosen.clone())?;
        for w in chosen {
            if self.graph.status(w) != SlotStatus::Empty {
                add_neighbors(&self.graph, alpha, w, &[id])?;
            }
        }
        Ok(())
    }

    /// Marks `v` deleted. Touches only `v`'s consolidation counter.
    pub fn delete(&self, v: NodeId) -> Result<()> {
        self.graph.delete(v)
    }

    /// `k` closest live points to `q`, closest first. `k` is clamped to the
    /// search beam width.
    pub fn search(&self, q: &[f32], k: usize, performance_sensitive: bool) -> Result<Vec<Candidate>> {
        self.search_traced(q, k, performance_sensitive).map(|(best, _)| best)
    }

    pub fn search_traced(
        &self,
        q: &[f32],
        k: usize,
        performance_sensitive: bool,
    ) -> Result<(Vec<Candidate>, SearchResult)> {
        self.graph.check_dim(q)?;
        let width = self.params.search_beam;
        let k = if k > width {
            log::warn!("k={k} exceeds search beam width {width}; clamping");
            width
        } else {
            k
        };
        let start = self.start_ids();
        let result = match self.engine {
            EngineMode::CleANN => {
                clean_dynamic_beam_search(&self.graph, &self.params, q, width, &start, performance_sensitive)?
            }
            _ => greedy_beam_search(&self.graph, q, width, &start),
        };
        let mut best: Vec<Candidate> = result
            .best
            .iter()
            .filter(|c| self.graph.is_live(c.id))
            .map(|c| Candidate { id: c.id, dist: self.graph.distance_to(q, c.id) })
            .collect();
        best.sort_by(|a, b| a.dist.total_cmp(&b.dist).then(a.id.cmp(&b.id)));
        best.truncate(k);
        Ok((best, result))
    }

    /// Global consolidation: rewires every live node around tombstones and
    /// frees the tombstoned slots. Returns the number of slots freed.
    pub fn consolidate_all(&self, exec: Execution) -> Result<usize> {
        global_consolidate_baseline(&self.graph, self.params.alpha, exec)
    }

    pub fn stats(&self) -> ArenaStats {
        self.graph.stats()
    }

    /// Quiescent invariant check; empty when consistent.
    pub fn audit(&self) -> Vec<String> {
        self.graph.audit()
    }

    /// Builds an index over `data` in one or two passes. Slot `i` holds
    /// `data[i]`; the medoid becomes the start node and points are linked in
    /// a seeded random order. With two passes the first uses `alpha = 1`.
    pub fn build_static(
        data: &[Vec<f32>],
        params: IndexParams,
        engine: EngineMode,
        passes: usize,
        seed: u64,
        exec: Execution,
    ) -> Result<Self> {
        let Some(first) = data.first() else {
            return Err(IndexError::InvalidArgument("cannot build an index over no points".into()));
        };
        if !(1..=2).contains(&passes) {
            return Err(IndexError::InvalidArgument(format!("passes must be 1 or 2, got {passes}")));
        }
        let params = IndexParams { capacity: params.capacity.max(data.len()), ..params };
        let index = Index::new(first.len(), params, engine)?;
        for x in data {
            let a = index.graph.acquire_slot(x)?;
            debug_assert!(!a.reused);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let start = NodeId(medoid(data, index.params.metric, &mut rng, exec) as u32);
        index.graph.set_start(start)?;

        let mut order: Vec<u32> = (0..data.len() as u32).collect();
        order.shuffle(&mut rng);
        let start_ids = [start];
        for pass in 0..passes {
            let alpha = if passes == 2 && pass == 0 { 1.0 } else { index.params.alpha };
            for &p in &order {
                let p = NodeId(p);
                if p == start && pass == 0 {
                    continue;
                }
                let x = &data[p.index()];
                let search = greedy_beam_search(&index.graph, x, index.params.insert_beam, &start_ids);
                let mut candidates = search.visited;
                candidates.extend(index.graph.read_neighbors(p));
                index.link(p, x, &candidates, alpha)?;
            }
        }
        Ok(index)
    }
}

/// Point minimizing the summed distance to a sample of at most
/// `MEDOID_SAMPLE` points (all points when fewer).
fn medoid(data: &[Vec<f32>], metric: crate::metric::Metric, rng: &mut ChaCha8Rng, exec: Execution) -> usize {
    let sample: Vec<usize> = if data.len() <= MEDOID_SAMPLE {
        (0..data.len()).collect()
    } else {
        let mut s = index::sample(rng, data.len(), MEDOID_SAMPLE).into_vec();
        s.sort_unstable();
        s
    };
    let costs = exec::map(exec, &sample, |&i| {
        sample.iter().map(|&j| metric.eval(&data[i], &data[j]) as f64).sum::<f64>()
    });
    let best = costs
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1).then(a.0.cmp(&b.0)))
        .map(|(i, _)| i)
        .unwrap_or(0);
    sample[best]
}
