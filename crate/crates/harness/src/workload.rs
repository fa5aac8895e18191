//! Sliding-window experiment driver.
//!
//! Each round inserts the next batch of the data stream and, depending on
//! the protocol, deletes the oldest points of the window. Searches follow
//! the updates (or run mixed in with them) and recall is measured against
//! exact ground truth over the current window.

use std::collections::VecDeque;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use anyhow::{bail, Context};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxHasher;

use cleann_core::oracle::{ground_truth, mean_recall};
use cleann_core::{EngineMode, Executor, Index, IndexError, IndexParams, NodeId};

use crate::report::{RoundMetrics, SCHEMA_VERSION};
use crate::training::{generate_training_queries, mean_nn_distance, TrainingConfig};
use crate::truth::{hash_vectors, TruthCache};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Protocol {
    /// Insert a batch and delete as many of the oldest points, then search.
    #[default]
    BatchedUpdate,
    /// Insert a batch, never delete, then search.
    BatchedInsert,
    /// Inserts, deletes and both kinds of search all run concurrently.
    MixedUpdate,
}

impl FromStr for Protocol {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "batched-update" => Ok(Protocol::BatchedUpdate),
            "batched-insert" => Ok(Protocol::BatchedInsert),
            "mixed-update" => Ok(Protocol::MixedUpdate),
            other => Err(format!("unknown protocol '{other}'")),
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Protocol::BatchedUpdate => "batched-update",
            Protocol::BatchedInsert => "batched-insert",
            Protocol::MixedUpdate => "mixed-update",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Training {
    /// No training searches.
    Off,
    /// Perturbed copies of the test queries.
    #[default]
    InDistribution,
    /// Same, with the noise variance scaled by 1000.
    OutOfDistribution,
}

impl FromStr for Training {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "off" | "none" => Ok(Training::Off),
            "in-distribution" | "in" => Ok(Training::InDistribution),
            "ood" | "out-of-distribution" => Ok(Training::OutOfDistribution),
            other => Err(format!("unknown training mode '{other}'")),
        }
    }
}

#[derive(Clone, Debug)]
pub struct WorkloadConfig {
    pub engine: EngineMode,
    pub protocol: Protocol,
    pub window_size: usize,
    /// Batch size as a fraction of the window.
    pub batch_fraction: f64,
    /// Absolute batch size; overrides `batch_fraction`.
    pub batch_size: Option<usize>,
    pub rounds: usize,
    pub threads: usize,
    pub k: usize,
    pub seed: u64,
    /// Measure recall every this many rounds (and on the last round).
    pub eval_every: usize,
    pub training: Training,
    pub train: TrainingConfig,
    /// Arena capacity as a multiple of the window for engines that free or
    /// reuse slots. Engines that never free slots get room for every insert.
    pub capacity_factor: f64,
    /// Index parameters; `capacity` is derived and ignored here.
    pub params: IndexParams,
    /// Passes for the initial build and for every rebuild.
    pub build_passes: usize,
    pub truth_cache: Option<PathBuf>,
    /// Keep a timestamped log of every operation.
    pub record_history: bool,
}

impl Default for WorkloadConfig {
    fn default() -> Self {
        Self {
            engine: EngineMode::CleANN,
            protocol: Protocol::BatchedUpdate,
            window_size: 5_000,
            batch_fraction: 0.01,
            batch_size: None,
            rounds: 50,
            threads: 1,
            k: 10,
            seed: 0,
            eval_every: 1,
            training: Training::InDistribution,
            train: TrainingConfig::default(),
            capacity_factor: 1.2,
            params: IndexParams::default(),
            build_passes: 2,
            truth_cache: None,
            record_history: false,
        }
    }
}

impl WorkloadConfig {
    pub fn validate(&self) -> anyhow::Result<()> {
        if !(self.batch_fraction > 0.0 && self.batch_fraction <= 1.0) {
            bail!("batch fraction must be in (0, 1], got {}", self.batch_fraction);
        }
        if self.rounds < 1 {
            bail!("rounds must be >= 1");
        }
        if self.window_size < 1 || self.k < 1 || self.eval_every < 1 {
            bail!("window size, k and eval interval must be >= 1");
        }
        if self.batch_size == Some(0) {
            bail!("batch size must be >= 1");
        }
        if self.capacity_factor < 1.0 {
            bail!("capacity factor must be >= 1.0");
        }
        IndexParams { capacity: self.capacity(), ..self.params.clone() }.validate().context("index parameters")?;
        Ok(())
    }

    pub fn batch_len(&self) -> usize {
        self.batch_size.unwrap_or_else(|| ((self.batch_fraction * self.window_size as f64).round() as usize).max(1))
    }

    fn capacity(&self) -> usize {
        let total_inserts = self.window_size + self.rounds * self.batch_len();
        match (self.engine, self.protocol) {
            (_, Protocol::BatchedInsert) | (EngineMode::Naive | EngineMode::Rebuild, _) => total_inserts,
            _ => ((self.window_size as f64 * self.capacity_factor).ceil() as usize).min(total_inserts),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OpKind {
    Insert { point: usize },
    Delete,
    TrainSearch,
    TestSearch,
}

/// One completed operation. Times are nanoseconds since the run started.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OpRecord {
    pub kind: OpKind,
    /// Inserted or deleted slot.
    pub id: Option<NodeId>,
    /// Ids a search returned.
    pub returned: Vec<NodeId>,
    pub start_ns: u64,
    pub end_ns: u64,
}

#[derive(Debug, Default)]
pub struct RunOutput {
    pub metrics: Vec<RoundMetrics>,
    /// Why the run ended before the last round, if it did.
    pub stopped_early: Option<String>,
    pub history: Vec<OpRecord>,
    /// Quiescent invariant check at the end of the run.
    pub audit: Vec<String>,
    /// Largest `peak_slots / window_size` seen.
    pub max_peak_ratio: f64,
    /// Slot-to-point mapping at the end of the run.
    pub final_points: Vec<(NodeId, usize)>,
    /// Live slots of the final index.
    pub live_ids: Vec<NodeId>,
}

#[derive(Clone, Copy)]
enum Op {
    Insert(usize),
    Delete(NodeId),
    Search { query: usize, training: bool },
}

enum Outcome {
    Inserted(NodeId, usize),
    Deleted,
    Searched(Vec<NodeId>),
    Full,
}

struct Runner<'a> {
    cfg: &'a WorkloadConfig,
    data: &'a [Vec<f32>],
    queries: &'a [Vec<f32>],
    exec: Executor,
    index: Option<Index>,
    /// Live window as `(slot, point)` in insertion order. Slots are
    /// meaningless for the rebuild engine between rebuilds.
    window: VecDeque<(NodeId, usize)>,
    cursor: usize,
    base: Instant,
    history: Vec<OpRecord>,
    nn: f32,
    cache: Option<TruthCache>,
    data_hash: u64,
}

impl<'a> Runner<'a> {
    fn params(&self) -> IndexParams {
        IndexParams { capacity: self.cfg.capacity(), ..self.cfg.params.clone() }
    }

    fn build(&self, points: &[usize]) -> anyhow::Result<Index> {
        let vectors: Vec<Vec<f32>> = points.iter().map(|&p| self.data[p].clone()).collect();
        let exec = self.exec.execution();
        let index = self.exec.install(|| {
            Index::build_static(&vectors, self.params(), self.cfg.engine, self.cfg.build_passes, self.cfg.seed, exec)
        })?;
        Ok(index)
    }

    fn now(&self) -> u64 {
        self.base.elapsed().as_nanos() as u64
    }

    fn run_ops(&self, index: &Index, ops: &[Op], train: &[Vec<f32>]) -> anyhow::Result<Vec<(Outcome, u64, u64)>> {
        let k = self.cfg.k;
        let results = self.exec.map(ops, |op| {
            let start = self.now();
            let outcome = match *op {
                Op::Insert(p) => match index.insert(&self.data[p]) {
                    Ok(id) => Ok(Outcome::Inserted(id, p)),
                    Err(IndexError::CapacityExhausted { .. }) => Ok(Outcome::Full),
                    Err(e) => Err(e),
                },
                Op::Delete(v) => index.delete(v).map(|_| Outcome::Deleted),
                Op::Search { query, training } => {
                    let q = if training { &train[query] } else { &self.queries[query] };
                    index.search(q, k, !training).map(|r| Outcome::Searched(r.into_iter().map(|c| c.id).collect()))
                }
            };
            outcome.map(|o| (o, start, self.now()))
        });
        Ok(results.into_iter().collect::<Result<Vec<_>, _>>()?)
    }

    fn record(&mut self, ops: &[Op], outcomes: &[(Outcome, u64, u64)]) {
        if !self.cfg.record_history {
            return;
        }
        for (op, (outcome, start_ns, end_ns)) in ops.iter().zip(outcomes) {
            let (kind, id, returned) = match (op, outcome) {
                (Op::Insert(p), Outcome::Inserted(id, _)) => (OpKind::Insert { point: *p }, Some(*id), Vec::new()),
                (Op::Delete(v), _) => (OpKind::Delete, Some(*v), Vec::new()),
                (Op::Search { training, .. }, Outcome::Searched(ids)) => {
                    (if *training { OpKind::TrainSearch } else { OpKind::TestSearch }, None, ids.clone())
                }
                _ => continue,
            };
            self.history.push(OpRecord { kind, id, returned, start_ns: *start_ns, end_ns: *end_ns });
        }
    }

    fn truth(&self, points: &[usize]) -> anyhow::Result<Vec<Vec<u32>>> {
        let compute = || {
            let pts: Vec<(NodeId, Vec<f32>)> = points.iter().map(|&p| (NodeId(p as u32), self.data[p].clone())).collect();
            let exec = self.exec.execution();
            self.exec
                .install(|| ground_truth(self.queries, self.cfg.k, &pts, self.cfg.params.metric, exec))
                .into_iter()
                .map(|row| row.into_iter().map(|id| id.0).collect())
                .collect()
        };
        match &self.cache {
            None => Ok(compute()),
            Some(cache) => {
                let mut h = FxHasher::default();
                (self.data_hash, hash_vectors(self.queries), self.cfg.k, self.cfg.params.metric.to_string()).hash(&mut h);
                points.hash(&mut h);
                Ok(cache.get_or_compute(h.finish(), compute)?)
            }
        }
    }

    fn training_queries(&self, round: usize) -> Vec<Vec<f32>> {
        let cfg = match self.cfg.training {
            Training::Off => return Vec::new(),
            Training::InDistribution => self.cfg.train,
            Training::OutOfDistribution => TrainingConfig { out_of_distribution: true, ..self.cfg.train },
        };
        generate_training_queries(self.queries, &cfg, self.nn, self.cfg.seed ^ (round as u64).wrapping_mul(0x9e37_79b9))
    }
}

/// Runs the configured sliding-window experiment over `data` (the stream;
/// the first `window_size` points form the initial index) and `queries`.
/// `on_round` sees each round's metrics as soon as they are ready.
pub fn run_sliding_window(
    cfg: &WorkloadConfig,
    data: &[Vec<f32>],
    queries: &[Vec<f32>],
    mut on_round: impl FnMut(&RoundMetrics),
) -> anyhow::Result<RunOutput> {
    cfg.validate()?;
    if data.len() < cfg.window_size {
        bail!("dataset has {} points, fewer than the window size {}", data.len(), cfg.window_size);
    }
    let cache = cfg.truth_cache.as_ref().map(TruthCache::new).transpose()?;
    let mut run = Runner {
        cfg,
        data,
        queries,
        exec: Executor::new(cfg.threads),
        index: None,
        window: VecDeque::new(),
        cursor: cfg.window_size,
        base: Instant::now(),
        history: Vec::new(),
        nn: mean_nn_distance(&data[..cfg.window_size], cfg.seed),
        data_hash: if cache.is_some() { hash_vectors(data) } else { 0 },
        cache,
    };
    let initial: Vec<usize> = (0..cfg.window_size).collect();
    let index = run.build(&initial)?;
    run.window = initial.iter().map(|&p| (NodeId(p as u32), p)).collect();
    run.index = Some(index);

    let mut out = RunOutput::default();
    let batch = cfg.batch_len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed);

    for round in 1..=cfg.rounds {
        if run.cursor + batch > data.len() {
            out.stopped_early = Some(format!("dataset exhausted before round {round}"));
            break;
        }
        let round_start = Instant::now();
        let inserts: Vec<usize> = (run.cursor..run.cursor + batch).collect();
        run.cursor += batch;
        let deleting = cfg.protocol != Protocol::BatchedInsert;
        let victims: Vec<(NodeId, usize)> =
            if deleting { run.window.drain(..batch.min(run.window.len())).collect() } else { Vec::new() };
        let train = run.training_queries(round);
        let evaluate = cfg.protocol != Protocol::MixedUpdate && (round % cfg.eval_every == 0 || round == cfg.rounds);

        let mut metrics = RoundMetrics {
            schema_version: SCHEMA_VERSION,
            engine: cfg.engine.to_string(),
            protocol: cfg.protocol.to_string(),
            seed: cfg.seed,
            round,
            ..Default::default()
        };

        let mut full = false;
        if cfg.engine == EngineMode::Rebuild {
            // Only the window is tracked between rebuilds.
            run.window.extend(inserts.iter().map(|&p| (NodeId(u32::MAX), p)));
            if evaluate {
                let t = Instant::now();
                let points: Vec<usize> = run.window.iter().map(|&(_, p)| p).collect();
                let index = run.build(&points)?;
                run.window = points.iter().enumerate().map(|(i, &p)| (NodeId(i as u32), p)).collect();
                run.index = Some(index);
                let secs = t.elapsed().as_secs_f64();
                metrics.insert_qps = inserts.len() as f64 / secs;
                metrics.delete_qps = victims.len() as f64 / secs;
            }
        } else {
            let index = run.index.take().expect("index present");
            let mut ops: Vec<Op> = Vec::new();
            for i in 0..inserts.len().max(victims.len()) {
                if let Some(&p) = inserts.get(i) {
                    ops.push(Op::Insert(p));
                }
                if let Some(&(v, _)) = victims.get(i) {
                    ops.push(Op::Delete(v));
                }
            }
            if cfg.protocol == Protocol::MixedUpdate {
                ops.extend((0..train.len()).map(|query| Op::Search { query, training: true }));
                ops.extend((0..queries.len()).map(|query| Op::Search { query, training: false }));
                ops.shuffle(&mut rng);
            }
            let t = Instant::now();
            let outcomes = run.run_ops(&index, &ops, &train)?;
            let secs = t.elapsed().as_secs_f64();
            run.record(&ops, &outcomes);
            let mut searches = 0;
            for (outcome, _, _) in &outcomes {
                match outcome {
                    Outcome::Inserted(id, p) => run.window.push_back((*id, *p)),
                    Outcome::Full => full = true,
                    Outcome::Searched(_) => searches += 1,
                    Outcome::Deleted => {}
                }
            }
            metrics.insert_qps = inserts.len() as f64 / secs;
            metrics.delete_qps = victims.len() as f64 / secs;
            if cfg.protocol == Protocol::MixedUpdate {
                metrics.search_qps = searches as f64 / secs;
            }
            run.index = Some(index);
        }

        if cfg.protocol != Protocol::MixedUpdate {
            let index = run.index.take().expect("index present");
            let mut ops: Vec<Op> = (0..train.len()).map(|query| Op::Search { query, training: true }).collect();
            let first_test = ops.len();
            ops.extend((0..queries.len()).map(|query| Op::Search { query, training: false }));
            let t = Instant::now();
            let (consolidated, outcomes) = if cfg.engine == EngineMode::Fresh {
                let exec = run.exec.execution();
                run.exec.join(|| index.consolidate_all(exec), || run.run_ops(&index, &ops, &train))
            } else {
                (Ok(0), run.run_ops(&index, &ops, &train))
            };
            consolidated?;
            let outcomes = outcomes?;
            metrics.search_qps = ops.len() as f64 / t.elapsed().as_secs_f64();
            run.record(&ops, &outcomes);

            if evaluate {
                let mut slot_point = rustc_hash::FxHashMap::default();
                for &(v, p) in &run.window {
                    slot_point.insert(v, p as u32);
                }
                let points: Vec<usize> = run.window.iter().map(|&(_, p)| p).collect();
                let truth = run.truth(&points)?;
                let results: Vec<Vec<NodeId>> = outcomes[first_test..]
                    .iter()
                    .map(|(o, _, _)| match o {
                        Outcome::Searched(ids) => ids.iter().filter_map(|v| slot_point.get(v).map(|&p| NodeId(p))).collect(),
                        _ => Vec::new(),
                    })
                    .collect();
                let truth: Vec<Vec<NodeId>> = truth.into_iter().map(|r| r.into_iter().map(NodeId).collect()).collect();
                metrics.recall_at_k = Some(mean_recall(&results, &truth));
            }
            run.index = Some(index);
        }

        let index = run.index.as_ref().expect("index present");
        let stats = index.stats();
        metrics.live_nodes = if cfg.engine == EngineMode::Rebuild { run.window.len() } else { stats.live };
        metrics.tombstones = stats.tombstoned;
        metrics.replaceable = stats.replaceable;
        metrics.peak_slots = stats.peak_slots;
        metrics.elapsed_secs = round_start.elapsed().as_secs_f64();
        out.max_peak_ratio = out.max_peak_ratio.max(stats.peak_slots as f64 / cfg.window_size as f64);
        log::info!(
            "round {round}: recall={:?} live={} tombstones={} peak={}",
            metrics.recall_at_k,
            metrics.live_nodes,
            metrics.tombstones,
            metrics.peak_slots
        );
        on_round(&metrics);
        out.metrics.push(metrics);
        if full {
            out.stopped_early = Some(format!("slot arena exhausted in round {round}"));
            break;
        }
    }

    let index = run.index.as_ref().expect("index present");
    out.audit = index.audit();
    out.live_ids = index.graph().live_ids();
    out.final_points = run.window.iter().copied().collect();
    out.history = std::mem::take(&mut run.history);
    Ok(out)
}
