//! Clustered synthetic data: uniform seeds in the unit hypercube, each
//! followed by a Gaussian cluster around it, plus optional uniform
//! background points.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Order {
    /// Uniformly shuffled.
    #[default]
    Random,
    /// Each seed and its cluster appear contiguously.
    Clustered,
}

impl FromStr for Order {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "random" => Ok(Order::Random),
            "clustered" => Ok(Order::Clustered),
            other => Err(format!("unknown order '{other}' (expected random or clustered)")),
        }
    }
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Order::Random => "random",
            Order::Clustered => "clustered",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum QueryKind {
    /// Drawn from the same clusters as the data.
    #[default]
    InDistribution,
    /// Uniform in the hypercube.
    Uniform,
}

impl FromStr for QueryKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "in-distribution" | "in" => Ok(QueryKind::InDistribution),
            "uniform" | "ood" => Ok(QueryKind::Uniform),
            other => Err(format!("unknown query kind '{other}'")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthConfig {
    pub n: usize,
    pub clusters: usize,
    pub cluster_size: usize,
    pub dim: usize,
    /// Per-coordinate standard deviation of a cluster.
    pub spread: f32,
    pub order: Order,
    pub queries: usize,
    pub query_kind: QueryKind,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n: 10_000,
            clusters: 100,
            cluster_size: 100,
            dim: 16,
            spread: 0.03,
            order: Order::Random,
            queries: 100,
            query_kind: QueryKind::InDistribution,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Synth {
    pub data: Vec<Vec<f32>>,
    pub queries: Vec<Vec<f32>>,
}

pub fn generate(cfg: &SynthConfig) -> Synth {
    assert!(cfg.dim >= 1 && cfg.clusters >= 1, "dim and clusters must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let noise = Normal::new(0.0f32, cfg.spread.max(0.0)).expect("finite spread");
    let uniform_point = |rng: &mut ChaCha8Rng| (0..cfg.dim).map(|_| rng.random::<f32>()).collect::<Vec<f32>>();
    let seeds: Vec<Vec<f32>> = (0..cfg.clusters).map(|_| uniform_point(&mut rng)).collect();
    let around = |rng: &mut ChaCha8Rng, c: &[f32]| c.iter().map(|&x| x + noise.sample(rng)).collect::<Vec<f32>>();

    // Groups are whole clusters (seed first), then background points.
    let mut groups: Vec<Vec<Vec<f32>>> = Vec::new();
    let mut total = 0;
    'outer: for c in &seeds {
        let mut group = Vec::with_capacity(cfg.cluster_size + 1);
        for j in 0..=cfg.cluster_size {
            if total == cfg.n {
                if !group.is_empty() {
                    groups.push(group);
                }
                break 'outer;
            }
            group.push(if j == 0 { c.clone() } else { around(&mut rng, c) });
            total += 1;
        }
        groups.push(group);
    }
    while total < cfg.n {
        groups.push(vec![uniform_point(&mut rng)]);
        total += 1;
    }

    let data = match cfg.order {
        Order::Clustered => {
            groups.shuffle(&mut rng);
            groups.into_iter().flatten().collect()
        }
        Order::Random => {
            let mut all: Vec<Vec<f32>> = groups.into_iter().flatten().collect();
            all.shuffle(&mut rng);
            all
        }
    };

    let queries = (0..cfg.queries)
        .map(|_| match cfg.query_kind {
            QueryKind::InDistribution => {
                let c = &seeds[rng.random_range(0..seeds.len())];
                around(&mut rng, c)
            }
            QueryKind::Uniform => uniform_point(&mut rng),
        })
        .collect();
    Synth { data, queries }
}
