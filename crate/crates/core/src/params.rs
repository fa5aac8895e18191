use std::fmt;
use std::str::FromStr;

use crate::bridge::BridgeConfig;
use crate::error::{IndexError, Result};
use crate::metric::Metric;

/// Which kind of free slot `acquire_slot` hands out first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ReusePriority {
    /// Never-used (or emptied) slots before replaceable ones.
    #[default]
    FreshFirst,
    /// Replaceable slots before never-used ones.
    ReusedFirst,
}

impl FromStr for ReusePriority {
    type Err = IndexError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fresh-first" | "fresh" => Ok(ReusePriority::FreshFirst),
            "reused-first" | "reused" => Ok(ReusePriority::ReusedFirst),
            other => Err(IndexError::InvalidArgument(format!("unknown reuse priority '{other}'"))),
        }
    }
}

impl fmt::Display for ReusePriority {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReusePriority::FreshFirst => "fresh-first",
            ReusePriority::ReusedFirst => "reused-first",
        })
    }
}

/// Index hyperparameters.
#[derive(Clone, Debug, PartialEq)]
pub struct IndexParams {
    /// Out-degree bound `R`.
    pub max_degree: usize,
    /// Search beam width `L`.
    pub search_beam: usize,
    /// Insert beam width `L_I`.
    pub insert_beam: usize,
    /// Sparsity factor used by robust pruning.
    pub alpha: f32,
    /// Eagerness threshold `C`: consolidations a tombstone receives before
    /// its slot may be reused.
    pub eagerness: u32,
    pub bridge: BridgeConfig,
    pub metric: Metric,
    /// Number of slots in the arena.
    pub capacity: usize,
    pub reuse: ReusePriority,
}

impl Default for IndexParams {
    fn default() -> Self {
        Self {
            max_degree: 64,
            search_beam: 75,
            insert_beam: 64,
            alpha: 1.2,
            eagerness: 7,
            bridge: BridgeConfig::default(),
            metric: Metric::L2,
            capacity: 100_000,
            reuse: ReusePriority::FreshFirst,
        }
    }
}

impl IndexParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(IndexError::InvalidArgument(msg.to_string()));
        if self.max_degree < 1 {
            return bad("max_degree (R) must be >= 1");
        }
        if self.search_beam < 1 || self.insert_beam < 1 {
            return bad("beam widths (L, L_I) must be >= 1");
        }
        if !(self.alpha >= 1.0) || !self.alpha.is_finite() {
            return bad("alpha must be a finite value >= 1.0");
        }
        if self.capacity < 1 || self.capacity >= u32::MAX as usize {
            return bad("capacity must be in [1, u32::MAX)");
        }
        self.bridge.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_conventional_settings() {
        let p = IndexParams::default();
        assert_eq!((p.max_degree, p.search_beam, p.insert_beam), (64, 75, 64));
        assert_eq!(p.alpha, 1.2);
        assert_eq!(p.eagerness, 7);
        p.validate().unwrap();
    }

    #[test]
    fn rejects_out_of_range() {
        let mut p = IndexParams { alpha: 0.9, ..Default::default() };
        assert!(p.validate().is_err());
        p.alpha = 1.0;
        p.max_degree = 0;
        assert!(p.validate().is_err());
        p.max_degree = 8;
        p.search_beam = 0;
        assert!(p.validate().is_err());
    }
}
