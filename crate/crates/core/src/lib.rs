//! Concurrent, fully dynamic graph index for approximate nearest neighbor
//! search.
//!
//! The [`Index`] supports concurrent inserts, deletes and searches. Deletes
//! only mark a tombstone; searches that pass a tombstone consolidate the
//! neighborhoods around it, and once a tombstone has been consolidated often
//! enough its slot is reused by a later insert. Inserts and training
//! searches also add bridge edges between cousins in their search tree.
//!
//! The `Naive`, `Fresh` and `Rebuild` engine modes provide the baselines the
//! benchmark harness compares against.

pub mod bridge;
pub mod consolidate;
pub mod error;
pub mod exec;
pub mod graph;
pub mod index;
pub mod metric;
pub mod oracle;
pub mod params;
pub mod prune;
pub mod search;
pub mod snapshot;

pub use bridge::{BridgeConfig, BridgePredicate, DepthSelection};
pub use error::{IndexError, Result};
pub use exec::{Execution, Executor};
pub use graph::{ArenaStats, Graph, NodeId, SlotStatus};
pub use index::{EngineMode, Index, InsertTrace};
pub use metric::{distance, Metric};
pub use params::{IndexParams, ReusePriority};
pub use search::{Candidate, SearchResult, SearchTree};
