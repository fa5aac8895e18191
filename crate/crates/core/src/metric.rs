//! Distance functions. Every metric is expressed as a score where smaller
//! means closer, so search and pruning code can minimize uniformly.
//!
//! * `L2` is the *squared* Euclidean distance.
//! * `InnerProduct` is the negated dot product (no normalization).
//! * `Cosine` is the negated cosine similarity; a zero vector on either side
//!   scores `+inf` so it is never preferred.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU32, Ordering};

use crate::error::{IndexError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum Metric {
    #[default]
    L2,
    InnerProduct,
    Cosine,
}

impl Metric {
    pub(crate) fn to_byte(self) -> u8 {
        match self {
            Metric::L2 => 0,
            Metric::InnerProduct => 1,
            Metric::Cosine => 2,
        }
    }

    pub(crate) fn from_byte(b: u8) -> Option<Self> {
        match b {
            0 => Some(Metric::L2),
            1 => Some(Metric::InnerProduct),
            2 => Some(Metric::Cosine),
            _ => None,
        }
    }

    /// Multiplier applied to `d(p', p)` in the pruning test so that `alpha`
    /// acts on the Euclidean distance even though L2 scores are squared.
    #[inline]
    pub fn prune_factor(self, alpha: f32) -> f32 {
        match self {
            Metric::L2 => alpha * alpha,
            Metric::InnerProduct | Metric::Cosine => alpha,
        }
    }

    /// Score between two equal-length vectors. Lengths are only checked in
    /// debug builds; use [`distance`] at API boundaries.
    #[inline]
    pub fn eval(self, x: &[f32], y: &[f32]) -> f32 {
        debug_assert_eq!(x.len(), y.len());
        self.eval_with(x, |i| y[i])
    }

    /// Score between a plain query and a vector stored as `f32` bit patterns.
    #[inline]
    pub(crate) fn eval_stored(self, q: &[f32], stored: &[AtomicU32]) -> f32 {
        debug_assert_eq!(q.len(), stored.len());
        self.eval_with(q, |i| f32::from_bits(stored[i].load(Ordering::Relaxed)))
    }

    #[inline(always)]
    fn eval_with(self, q: &[f32], y: impl Fn(usize) -> f32) -> f32 {
        let n = q.len();
        match self {
            Metric::L2 => {
                let mut acc = [0.0f32; 4];
                let chunks = n / 4;
                for c in 0..chunks {
                    for (lane, slot) in acc.iter_mut().enumerate() {
                        let i = c * 4 + lane;
                        let d = q[i] - y(i);
                        *slot += d * d;
                    }
                }
                for i in chunks * 4..n {
                    let d = q[i] - y(i);
                    acc[0] += d * d;
                }
                (acc[0] + acc[1]) + (acc[2] + acc[3])
            }
            Metric::InnerProduct => {
                let mut acc = [0.0f32; 4];
                let chunks = n / 4;
                for c in 0..chunks {
                    for (lane, slot) in acc.iter_mut().enumerate() {
                        let i = c * 4 + lane;
                        *slot += q[i] * y(i);
                    }
                }
                for i in chunks * 4..n {
                    acc[0] += q[i] * y(i);
                }
                -((acc[0] + acc[1]) + (acc[2] + acc[3]))
            }
            Metric::Cosine => {
                let (mut dot, mut nq, mut ny) = (0.0f32, 0.0f32, 0.0f32);
                for (i, &a) in q.iter().enumerate() {
                    let b = y(i);
                    dot += a * b;
                    nq += a * a;
                    ny += b * b;
                }
                if nq == 0.0 || ny == 0.0 {
                    return f32::INFINITY;
                }
                -(dot / (nq.sqrt() * ny.sqrt()))
            }
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::L2 => "l2",
            Metric::InnerProduct => "ip",
            Metric::Cosine => "cosine",
        })
    }
}

impl FromStr for Metric {
    type Err = IndexError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l2" => Ok(Metric::L2),
            "ip" | "inner-product" | "innerproduct" => Ok(Metric::InnerProduct),
            "cosine" | "cos" => Ok(Metric::Cosine),
            other => Err(IndexError::InvalidArgument(format!("unknown metric '{other}'"))),
        }
    }
}

/// Checked distance between two vectors under `metric`.
pub fn distance(x: &[f32], y: &[f32], metric: Metric) -> Result<f32> {
    if x.len() != y.len() {
        return Err(IndexError::DimensionMismatch { expected: x.len(), got: y.len() });
    }
    if x.is_empty() {
        return Err(IndexError::InvalidArgument("vectors must have dimension >= 1".into()));
    }
    Ok(metric.eval(x, y))
}
