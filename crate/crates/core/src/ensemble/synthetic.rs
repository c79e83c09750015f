//! Synthetic score caches for exercising pruning without optics.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::ScoreCache;
use crate::data::SplitTag;
use crate::Result;

/// Pool of `networks` noisy classifiers. Network `k` adds a margin of
/// `skill[k]` to the true class on top of unit-variance noise, and each
/// network has its own fixed confusion bias per class. Scores are clipped
/// to `[−bound, bound]`.
pub fn score_cache(
    seed: u64,
    samples: usize,
    skill: &[f64],
    classes: usize,
    bound: f64,
    split: SplitTag,
) -> Result<ScoreCache> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = skill.len();
    let bias: Vec<f64> = (0..n * classes)
        .map(|_| 0.5 * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let labels: Vec<u8> = (0..samples).map(|s| (s % classes) as u8).collect();
    let mut scores = Vec::with_capacity(samples * n * classes);
    for &label in &labels {
        for (k, q) in skill.iter().enumerate() {
            for c in 0..classes {
                let mut z: f64 = rng.sample(StandardNormal);
                z += bias[k * classes + c];
                if c == usize::from(label) {
                    z += q;
                }
                scores.push(z.clamp(-bound, bound) as f32);
            }
        }
    }
    ScoreCache::new(
        split,
        classes,
        (0..n).map(|k| format!("net{k:03}")).collect(),
        labels,
        scores,
    )
}
