#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cleann_core::{Index, Metric, NodeId};

/// Gaussian-ish clusters: uniform centers in `[0, 100)^dim`, points at
/// centre plus the sum of three uniform offsets (spread ~`spread`).
pub fn clustered(n: usize, dim: usize, clusters: usize, spread: f32, seed: u64) -> Vec<Vec<f32>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers: Vec<Vec<f32>> =
        (0..clusters).map(|_| (0..dim).map(|_| rng.random_range(0.0..100.0)).collect()).collect();
    (0..n)
        .map(|_| {
            let c = &centers[rng.random_range(0..clusters)];
            c.iter()
                .map(|&x| x + spread * (0..3).map(|_| rng.random_range(-1.0f32..1.0)).sum::<f32>())
                .collect()
        })
        .collect()
}

/// Data and queries drawn from the same clusters.
pub fn clustered_split(
    n: usize,
    nq: usize,
    dim: usize,
    clusters: usize,
    spread: f32,
    seed: u64,
) -> (Vec<Vec<f32>>, Vec<Vec<f32>>) {
    let mut all = clustered(n + nq, dim, clusters, spread, seed);
    let queries = all.split_off(n);
    (all, queries)
}

pub fn uniform(n: usize, dim: usize, seed: u64) -> Vec<Vec<f32>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| (0..dim).map(|_| rng.random_range(0.0..1.0)).collect()).collect()
}

/// Live points of an index as `(id, vector)` pairs.
pub fn live_points(index: &Index) -> Vec<(NodeId, Vec<f32>)> {
    let g = index.graph();
    g.live_ids().into_iter().map(|v| (v, g.vector(v))).collect()
}

/// Mean recall@k of `index` over `queries`, against its current live set.
pub fn index_recall(index: &Index, queries: &[Vec<f32>], k: usize, metric: Metric) -> f64 {
    let points = live_points(index);
    let truth = cleann_core::oracle::ground_truth(queries, k, &points, metric, cleann_core::Execution::Parallel);
    let results: Vec<Vec<NodeId>> = queries
        .iter()
        .map(|q| index.search(q, k, true).unwrap().into_iter().map(|c| c.id).collect())
        .collect();
    cleann_core::oracle::mean_recall(&results, &truth)
}
