//! Seeded input builders shared by the benchmarks.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use gdc_screen_core::Dataset;

pub fn normal_values(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| rng.sample(StandardNormal)).collect()
}

/// n × p standard-normal dataset with balanced labels over `k` classes and a
/// class-dependent shift of 1.5·(class+1) on coordinate class % p, the shape
/// used by marginal screening.
pub fn shifted_dataset(n: usize, p: usize, k: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels: Vec<usize> = (0..n).map(|i| i % k).collect();
    let mut features = Vec::with_capacity(n * p);
    for &y in &labels {
        let base = features.len();
        for _ in 0..p {
            features.push(rng.sample::<f64, _>(StandardNormal));
        }
        features[base + y % p] += 1.5 * (y as f64 + 1.0);
    }
    Dataset::from_parts(features, p, labels).unwrap()
}
