//! Training-query synthesis: resampled test queries plus Gaussian noise
//! scaled by the dataset's typical nearest-neighbor distance.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Largest sample used to estimate the mean 1-NN distance.
const NN_SAMPLE: usize = 1_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainingConfig {
    /// Queries generated per batch as a fraction of the test set.
    pub fraction: f64,
    /// Fixed count; overrides `fraction` when set.
    pub count: Option<usize>,
    /// Multiplier on the noise standard deviation.
    pub noise_scale: f32,
    /// Scale the noise variance by 1000.
    pub out_of_distribution: bool,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self { fraction: 0.02, count: None, noise_scale: 1.0, out_of_distribution: false }
    }
}

impl TrainingConfig {
    pub fn batch_len(&self, test_len: usize) -> usize {
        self.count.unwrap_or_else(|| (self.fraction * test_len as f64).ceil() as usize)
    }
}

/// Mean Euclidean distance from each point of a sample (at most 1,000
/// points) to its nearest other sample point.
pub fn mean_nn_distance(data: &[Vec<f32>], seed: u64) -> f32 {
    if data.len() < 2 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sample: Vec<&Vec<f32>> = index::sample(&mut rng, data.len(), data.len().min(NN_SAMPLE))
        .into_iter()
        .map(|i| &data[i])
        .collect();
    let total: f64 = sample
        .iter()
        .enumerate()
        .map(|(i, a)| {
            sample
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, b)| a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum::<f32>())
                .fold(f32::INFINITY, f32::min)
                .sqrt() as f64
        })
        .sum();
    (total / sample.len() as f64) as f32
}

/// Samples `cfg.batch_len(test.len())` test queries with replacement and
/// perturbs each with isotropic Gaussian noise. The per-coordinate
/// deviation is `noise_scale * nn / sqrt(dim)`, so the expected noise norm
/// is about `noise_scale * nn`.
pub fn generate_training_queries(test: &[Vec<f32>], cfg: &TrainingConfig, nn: f32, seed: u64) -> Vec<Vec<f32>> {
    if test.is_empty() {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = test[0].len();
    let mut sigma = cfg.noise_scale * nn / (dim as f32).sqrt();
    if cfg.out_of_distribution {
        sigma *= 1000f32.sqrt();
    }
    let noise = (sigma > 0.0).then(|| Normal::new(0.0f32, sigma).expect("finite sigma"));
    (0..cfg.batch_len(test.len()))
        .map(|_| {
            let q = &test[rng.random_range(0..test.len())];
            match &noise {
                Some(n) => q.iter().map(|&x| x + n.sample(&mut rng)).collect(),
                None => q.clone(),
            }
        })
        .collect()
}
