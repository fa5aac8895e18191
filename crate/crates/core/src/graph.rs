//! Slot arena holding vectors, adjacency lists and per-node lifecycle state.
//!
//! Lock contract:
//! * each adjacency list sits behind its own reader-writer lock;
//! * each consolidation counter `H(v)` sits behind its own mutex;
//! * the free-slot pool (empty + replaceable slots) sits behind one mutex.
//!
//! No code path holds two adjacency locks at once. The only nesting is
//! `H(v)` then the pool (in `mark_replaceable`), so there is no lock cycle.
//!
//! Vectors are stored as `f32` bit patterns in relaxed atomics. A reader
//! racing with slot reuse may observe a mix of old and new coordinates; the
//! index tolerates that the same way it tolerates a stale adjacency list.

use std::collections::VecDeque;
use std::fmt;
use std::sync::atomic::{AtomicU32, AtomicU64, AtomicU8, AtomicUsize, Ordering};

use parking_lot::{Mutex, RwLock};

use crate::error::{IndexError, Result};
use crate::metric::Metric;
use crate::params::ReusePriority;

/// Index of a slot in the arena.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

impl From<u32> for NodeId {
    fn from(v: u32) -> Self {
        NodeId(v)
    }
}

const NO_START: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum SlotStatus {
    Empty = 0,
    Live = 1,
    Tombstoned = 2,
    Replaceable = 3,
}

impl SlotStatus {
    pub(crate) fn from_byte(b: u8) -> Option<Self> {
        Some(match b {
            0 => SlotStatus::Empty,
            1 => SlotStatus::Live,
            2 => SlotStatus::Tombstoned,
            3 => SlotStatus::Replaceable,
            _ => return None,
        })
    }
}

/// Lock-free bit vector of tombstone flags.
pub(crate) struct TombstoneBits(Box<[AtomicU64]>);

impl TombstoneBits {
    fn new(n: usize) -> Self {
        TombstoneBits((0..n.div_ceil(64)).map(|_| AtomicU64::new(0)).collect())
    }

    #[inline]
    fn get(&self, i: usize) -> bool {
        self.0[i / 64].load(Ordering::Acquire) & (1 << (i % 64)) != 0
    }

    #[inline]
    fn set(&self, i: usize) {
        self.0[i / 64].fetch_or(1 << (i % 64), Ordering::AcqRel);
    }

    #[inline]
    fn clear(&self, i: usize) {
        self.0[i / 64].fetch_and(!(1 << (i % 64)), Ordering::AcqRel);
    }
}

pub(crate) struct SlotPool {
    /// Slots at or above this index have never been handed out.
    pub(crate) next_fresh: usize,
    /// Slots returned to `Empty` by global consolidation.
    pub(crate) recycled: Vec<NodeId>,
    pub(crate) replaceable: VecDeque<NodeId>,
    pub(crate) priority: ReusePriority,
}

impl SlotPool {
    fn take_empty(&mut self, capacity: usize) -> Option<NodeId> {
        if let Some(id) = self.recycled.pop() {
            return Some(id);
        }
        if self.next_fresh < capacity {
            let id = NodeId(self.next_fresh as u32);
            self.next_fresh += 1;
            return Some(id);
        }
        None
    }
}

/// Slot handed out by [`Graph::acquire_slot`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Acquired {
    pub id: NodeId,
    /// True when the slot previously held a deleted point and still carries
    /// that point's out-neighbors.
    pub reused: bool,
}

/// Monotone operation counters used by tests and the harness.
#[derive(Default)]
pub struct OpCounters {
    /// Number of `H` entries written by deletes.
    pub delete_h_touches: AtomicU64,
    /// Number of adjacency lists written (any operation).
    pub adjacency_writes: AtomicU64,
    /// Number of slots handed out that were replaceable.
    pub reused_slots: AtomicU64,
    /// Number of slots moved to the replaceable set.
    pub marked_replaceable: AtomicU64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ArenaStats {
    pub live: usize,
    pub tombstoned: usize,
    pub replaceable: usize,
    pub edges: usize,
    /// High-water mark of slots ever handed out.
    pub peak_slots: usize,
    pub capacity: usize,
}

pub struct Graph {
    dim: usize,
    capacity: usize,
    max_degree: usize,
    metric: Metric,
    pub(crate) vectors: Box<[AtomicU32]>,
    pub(crate) status: Box<[AtomicU8]>,
    pub(crate) tombstones: TombstoneBits,
    pub(crate) adjacency: Box<[RwLock<Vec<NodeId>>]>,
    pub(crate) consolidations: Box<[Mutex<Option<u32>>]>,
    pub(crate) pool: Mutex<SlotPool>,
    pub(crate) start: AtomicU32,
    live: AtomicUsize,
    counters: OpCounters,
}

impl Graph {
    pub fn new(
        dim: usize,
        capacity: usize,
        max_degree: usize,
        metric: Metric,
        priority: ReusePriority,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(IndexError::InvalidArgument("dimension must be >= 1".into()));
        }
        if capacity == 0 || capacity >= NO_START as usize {
            return Err(IndexError::InvalidArgument("capacity must be in [1, u32::MAX)".into()));
        }
        if max_degree == 0 {
            return Err(IndexError::InvalidArgument("max_degree must be >= 1".into()));
        }
        Ok(Self {
            dim,
            capacity,
            max_degree,
            metric,
            vectors: (0..dim * capacity).map(|_| AtomicU32::new(0)).collect(),
            status: (0..capacity).map(|_| AtomicU8::new(SlotStatus::Empty as u8)).collect(),
            tombstones: TombstoneBits::new(capacity),
            adjacency: (0..capacity).map(|_| RwLock::new(Vec::new())).collect(),
            consolidations: (0..capacity).map(|_| Mutex::new(None)).collect(),
            pool: Mutex::new(SlotPool {
                next_fresh: 0,
                recycled: Vec::new(),
                replaceable: VecDeque::new(),
                priority,
            }),
            start: AtomicU32::new(NO_START),
            live: AtomicUsize::new(0),
            counters: OpCounters::default(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn counters(&self) -> &OpCounters {
        &self.counters
    }

    pub fn reuse_priority(&self) -> ReusePriority {
        self.pool.lock().priority
    }

    /// Number of live points.
    pub fn live_count(&self) -> usize {
        self.live.load(Ordering::Relaxed)
    }

    #[inline]
    fn check_id(&self, v: NodeId) -> Result<()> {
        if v.index() < self.capacity {
            Ok(())
        } else {
            Err(IndexError::InvalidArgument(format!("{v} out of range (capacity {})", self.capacity)))
        }
    }

    #[inline]
    pub fn status(&self, v: NodeId) -> SlotStatus {
        SlotStatus::from_byte(self.status[v.index()].load(Ordering::Acquire)).expect("valid status byte")
    }

    #[inline]
    fn set_status(&self, v: NodeId, s: SlotStatus) {
        self.status[v.index()].store(s as u8, Ordering::Release);
    }

    #[inline]
    pub fn is_live(&self, v: NodeId) -> bool {
        self.status(v) == SlotStatus::Live
    }

    #[inline]
    pub fn is_tombstoned(&self, v: NodeId) -> bool {
        self.tombstones.get(v.index())
    }

    /// Entry point of every search, if the index has one.
    pub fn start(&self) -> Option<NodeId> {
        match self.start.load(Ordering::Acquire) {
            NO_START => None,
            s => Some(NodeId(s)),
        }
    }

    pub fn set_start(&self, v: NodeId) -> Result<()> {
        self.check_id(v)?;
        self.start.store(v.0, Ordering::Release);
        Ok(())
    }

    /// Installs `v` as the start node if none is set yet.
    pub fn init_start(&self, v: NodeId) -> bool {
        self.start
            .compare_exchange(NO_START, v.0, Ordering::AcqRel, Ordering::Acquire)
            .is_ok()
    }

    #[inline]
    fn is_pinned(&self, v: NodeId) -> bool {
        self.start.load(Ordering::Acquire) == v.0
    }

    #[inline]
    fn stored(&self, v: NodeId) -> &[AtomicU32] {
        let i = v.index() * self.dim;
        &self.vectors[i..i + self.dim]
    }

    /// Score between `q` and the vector stored at `v`.
    #[inline]
    pub fn distance_to(&self, q: &[f32], v: NodeId) -> f32 {
        self.metric.eval_stored(q, self.stored(v))
    }

    pub fn load_vector(&self, v: NodeId, out: &mut Vec<f32>) {
        out.clear();
        out.extend(self.stored(v).iter().map(|a| f32::from_bits(a.load(Ordering::Relaxed))));
    }

    pub fn vector(&self, v: NodeId) -> Vec<f32> {
        let mut out = Vec::with_capacity(self.dim);
        self.load_vector(v, &mut out);
        out
    }

    pub(crate) fn write_vector(&self, v: NodeId, x: &[f32]) {
        for (slot, &val) in self.stored(v).iter().zip(x) {
            slot.store(val.to_bits(), Ordering::Relaxed);
        }
    }

    pub fn check_dim(&self, x: &[f32]) -> Result<()> {
        if x.len() == self.dim {
            Ok(())
        } else {
            Err(IndexError::DimensionMismatch { expected: self.dim, got: x.len() })
        }
    }

    /// Picks an empty or replaceable slot for `x`, writes the vector and
    /// marks the slot live. A reused slot keeps its old out-neighbors.
    pub fn acquire_slot(&self, x: &[f32]) -> Result<Acquired> {
        self.check_dim(x)?;
        let mut pool = self.pool.lock();
        let picked = match pool.priority {
            ReusePriority::FreshFirst => pool
                .take_empty(self.capacity)
                .map(|id| (id, false))
                .or_else(|| pool.replaceable.pop_front().map(|id| (id, true))),
            ReusePriority::ReusedFirst => pool
                .replaceable
                .pop_front()
                .map(|id| (id, true))
                .or_else(|| pool.take_empty(self.capacity).map(|id| (id, false))),
        };
        let Some((id, reused)) = picked else {
            return Err(IndexError::CapacityExhausted { capacity: self.capacity });
        };
        debug_assert_eq!(
            self.status(id),
            if reused { SlotStatus::Replaceable } else { SlotStatus::Empty }
        );
        self.write_vector(id, x);
        if reused {
            self.tombstones.clear(id.index());
            self.counters.reused_slots.fetch_add(1, Ordering::Relaxed);
        }
        self.set_status(id, SlotStatus::Live);
        self.live.fetch_add(1, Ordering::Relaxed);
        Ok(Acquired { id, reused })
    }

    /// Tombstones a live node. Only `H(v)` is touched.
    pub fn delete(&self, v: NodeId) -> Result<()> {
        self.check_id(v)?;
        let mut h = self.consolidations[v.index()].lock();
        if self.status(v) != SlotStatus::Live {
            return Err(IndexError::InvalidOperation {
                node: v,
                reason: format!("delete requires a live node, found {:?}", self.status(v)),
            });
        }
        self.tombstones.set(v.index());
        *h = Some(0);
        self.set_status(v, SlotStatus::Tombstoned);
        self.live.fetch_sub(1, Ordering::Relaxed);
        self.counters.delete_h_touches.fetch_add(1, Ordering::Relaxed);
        Ok(())
    }

    /// Current consolidation count `H(v)`; `None` for live or replaceable
    /// nodes.
    pub fn consolidation_count(&self, v: NodeId) -> Option<u32> {
        *self.consolidations[v.index()].lock()
    }

    /// Adds one to `H(v)` unless it is absent. Returns the new value.
    pub fn increment_consolidations(&self, v: NodeId) -> Option<u32> {
        let mut h = self.consolidations[v.index()].lock();
        if let Some(count) = h.as_mut() {
            *count += 1;
        }
        *h
    }

    /// Moves a tombstone with `H(v) >= threshold` into the replaceable set.
    pub fn mark_replaceable(&self, v: NodeId, threshold: u32) -> Result<()> {
        self.check_id(v)?;
        let mut h = self.consolidations[v.index()].lock();
        let status = self.status(v);
        if status != SlotStatus::Tombstoned {
            return Err(IndexError::ContractViolation {
                node: v,
                reason: format!("mark_replaceable requires a tombstone, found {status:?}"),
            });
        }
        match *h {
            Some(count) if count >= threshold => {}
            other => {
                return Err(IndexError::ContractViolation {
                    node: v,
                    reason: format!("consolidation count {other:?} below threshold {threshold}"),
                })
            }
        }
        if self.is_pinned(v) {
            return Err(IndexError::ContractViolation {
                node: v,
                reason: "the start node is never reused".into(),
            });
        }
        self.make_replaceable_locked(v, &mut h);
        Ok(())
    }

    /// Search-path variant of [`mark_replaceable`](Self::mark_replaceable):
    /// quietly does nothing when the conditions do not hold.
    pub(crate) fn try_mark_replaceable(&self, v: NodeId, threshold: u32) -> bool {
        let mut h = self.consolidations[v.index()].lock();
        let ready = matches!(*h, Some(count) if count >= threshold)
            && self.status(v) == SlotStatus::Tombstoned
            && !self.is_pinned(v);
        if ready {
            self.make_replaceable_locked(v, &mut h);
        }
        ready
    }

    fn make_replaceable_locked(&self, v: NodeId, h: &mut Option<u32>) {
        *h = None;
        self.set_status(v, SlotStatus::Replaceable);
        self.pool.lock().replaceable.push_back(v);
        self.counters.marked_replaceable.fetch_add(1, Ordering::Relaxed);
    }

    /// Physically frees a tombstone: clears its edges and returns the slot
    /// to the empty pool. Used by the global consolidation baseline only.
    pub(crate) fn release_to_empty(&self, v: NodeId) -> bool {
        if self.is_pinned(v) {
            return false;
        }
        let mut h = self.consolidations[v.index()].lock();
        if self.status(v) != SlotStatus::Tombstoned {
            return false;
        }
        *h = None;
        self.adjacency[v.index()].write().clear();
        self.counters.adjacency_writes.fetch_add(1, Ordering::Relaxed);
        self.tombstones.clear(v.index());
        self.set_status(v, SlotStatus::Empty);
        self.pool.lock().recycled.push(v);
        true
    }

    /// Snapshot of `N(v)` taken under the shared lock.
    pub fn read_neighbors(&self, v: NodeId) -> Vec<NodeId> {
        self.adjacency[v.index()].read().clone()
    }

    /// Runs `f` on `N(v)` while holding the shared lock.
    #[inline]
    pub fn with_neighbors<R>(&self, v: NodeId, f: impl FnOnce(&[NodeId]) -> R) -> R {
        f(&self.adjacency[v.index()].read())
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.adjacency[v.index()].read().len()
    }

    fn validate_list(&self, v: NodeId, list: &[NodeId]) -> Result<()> {
        let violation = |reason: String| Err(IndexError::InvariantViolation { node: v, reason });
        if list.len() > self.max_degree {
            return violation(format!("degree {} exceeds bound {}", list.len(), self.max_degree));
        }
        if list.contains(&v) {
            return violation("self loop".into());
        }
        if let Some(bad) = list.iter().find(|u| u.index() >= self.capacity) {
            return violation(format!("neighbor {bad} out of range"));
        }
        let mut sorted = list.to_vec();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return violation("duplicate neighbor".into());
        }
        Ok(())
    }

    /// Replaces `N(v)` atomically under the exclusive lock.
    pub fn write_neighbors(&self, v: NodeId, list: Vec<NodeId>) -> Result<()> {
        self.check_id(v)?;
        self.validate_list(v, &list)?;
        *self.adjacency[v.index()].write() = list;
        self.counters.adjacency_writes.fetch_add(1, Ordering::Relaxed);
        Ok(())
    }

    /// Read-modify-write of `N(v)` under the exclusive lock. `f` returns
    /// `None` to leave the list untouched. Returns whether a write happened.
    pub fn update_neighbors(
        &self,
        v: NodeId,
        f: impl FnOnce(&[NodeId]) -> Option<Vec<NodeId>>,
    ) -> Result<bool> {
        self.check_id(v)?;
        let mut guard = self.adjacency[v.index()].write();
        match f(&guard) {
            Some(list) => {
                self.validate_list(v, &list)?;
                *guard = list;
                self.counters.adjacency_writes.fetch_add(1, Ordering::Relaxed);
                Ok(true)
            }
            None => Ok(false),
        }
    }

    /// Writes one slot's full state while loading a snapshot. Not safe to
    /// call while other threads use the graph.
    pub(crate) fn restore_slot(
        &self,
        v: NodeId,
        status: SlotStatus,
        x: &[f32],
        list: Vec<NodeId>,
        h: Option<u32>,
    ) -> Result<()> {
        self.check_id(v)?;
        self.validate_list(v, &list)?;
        self.write_vector(v, x);
        *self.adjacency[v.index()].write() = list;
        *self.consolidations[v.index()].lock() = h;
        if matches!(status, SlotStatus::Tombstoned | SlotStatus::Replaceable) {
            self.tombstones.set(v.index());
        } else {
            self.tombstones.clear(v.index());
        }
        let was_live = self.is_live(v);
        self.set_status(v, status);
        match (was_live, status == SlotStatus::Live) {
            (false, true) => {
                self.live.fetch_add(1, Ordering::Relaxed);
            }
            (true, false) => {
                self.live.fetch_sub(1, Ordering::Relaxed);
            }
            _ => {}
        }
        Ok(())
    }

    pub(crate) fn restore_pool(&self, next_fresh: usize, recycled: Vec<NodeId>, replaceable: Vec<NodeId>) {
        let mut pool = self.pool.lock();
        pool.next_fresh = next_fresh;
        pool.recycled = recycled;
        pool.replaceable = replaceable.into();
    }

    pub(crate) fn pool_lists(&self) -> (usize, Vec<NodeId>, Vec<NodeId>) {
        let pool = self.pool.lock();
        (pool.next_fresh, pool.recycled.clone(), pool.replaceable.iter().copied().collect())
    }

    pub fn replaceable_ids(&self) -> Vec<NodeId> {
        self.pool.lock().replaceable.iter().copied().collect()
    }

    /// Slots that are currently allocated (not `Empty`).
    pub fn allocated_ids(&self) -> Vec<NodeId> {
        (0..self.capacity as u32)
            .map(NodeId)
            .filter(|&v| self.status(v) != SlotStatus::Empty)
            .collect()
    }

    pub fn live_ids(&self) -> Vec<NodeId> {
        (0..self.capacity as u32).map(NodeId).filter(|&v| self.is_live(v)).collect()
    }

    pub fn stats(&self) -> ArenaStats {
        let peak_slots = self.pool.lock().next_fresh;
        let mut stats = ArenaStats { peak_slots, capacity: self.capacity, ..Default::default() };
        for v in (0..peak_slots as u32).map(NodeId) {
            match self.status(v) {
                SlotStatus::Empty => continue,
                SlotStatus::Live => stats.live += 1,
                SlotStatus::Tombstoned => stats.tombstoned += 1,
                SlotStatus::Replaceable => stats.replaceable += 1,
            }
            stats.edges += self.degree(v);
        }
        stats
    }

    /// Quiescent audit of every arena invariant. Returns one message per
    /// violation; an empty list means the arena is consistent.
    pub fn audit(&self) -> Vec<String> {
        let mut problems = Vec::new();
        let pool = self.pool.lock();
        let in_pool: rustc_hash::FxHashSet<NodeId> = pool.replaceable.iter().copied().collect();
        if in_pool.len() != pool.replaceable.len() {
            problems.push("replaceable set holds duplicates".to_string());
        }
        for v in (0..self.capacity as u32).map(NodeId) {
            let status = self.status(v);
            let h = *self.consolidations[v.index()].lock();
            let bit = self.is_tombstoned(v);
            let list = self.adjacency[v.index()].read().clone();
            if v.index() >= pool.next_fresh && status != SlotStatus::Empty {
                problems.push(format!("{v} allocated beyond high-water mark"));
            }
            if let Err(e) = self.validate_list(v, &list) {
                problems.push(e.to_string());
            }
            match status {
                SlotStatus::Empty | SlotStatus::Live => {
                    if bit {
                        problems.push(format!("{v} is {status:?} but carries a tombstone bit"));
                    }
                    if h.is_some() {
                        problems.push(format!("{v} is {status:?} but has H = {h:?}"));
                    }
                }
                SlotStatus::Tombstoned => {
                    if !bit || h.is_none() {
                        problems.push(format!("{v} tombstoned with bit={bit}, H={h:?}"));
                    }
                }
                SlotStatus::Replaceable => {
                    if !bit || h.is_some() {
                        problems.push(format!("{v} replaceable with bit={bit}, H={h:?}"));
                    }
                }
            }
            if (status == SlotStatus::Replaceable) != in_pool.contains(&v) {
                problems.push(format!("{v} status {status:?} disagrees with replaceable set"));
            }
            if status == SlotStatus::Empty && !list.is_empty() {
                problems.push(format!("{v} is empty but has out-edges"));
            }
        }
        problems
    }
}
