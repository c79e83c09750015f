//! Synthetic CIFAR-layout datasets for tests and offline runs.
//!
//! Each class owns a left-right symmetric template made of a few smooth
//! blobs. A sample is the template at random contrast and small vertical
//! offset, buried under smooth clutter and pixel noise, then written as
//! (nearly) gray RGB bytes.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::cifar::{IMAGE_SIDE, RECORD_BYTES, TEST_FILE, TRAIN_FILES};
use crate::Result;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SyntheticConfig {
    pub records_per_file: usize,
    pub seed: u64,
    /// Amplitude of the class template relative to mid-gray.
    pub signal: f64,
    /// Standard deviation of per-pixel noise.
    pub noise: f64,
    /// Amplitude of random smooth background structure.
    pub clutter: f64,
}

impl SyntheticConfig {
    /// 600 images: five 100-record training batches and a 100-record test
    /// batch.
    pub fn fixture() -> Self {
        Self {
            records_per_file: 100,
            seed: 0x5eed,
            signal: 0.35,
            noise: 0.12,
            clutter: 0.25,
        }
    }
}

const BLOBS_PER_CLASS: usize = 4;
const CLUTTER_BLOBS: usize = 5;

struct Blob {
    x: f64,
    y: f64,
    sigma: f64,
    weight: f64,
}

fn blob_field(blobs: &[Blob], mirror: bool) -> Vec<f64> {
    let n = IMAGE_SIDE;
    let mut out = vec![0.0; n * n];
    for row in 0..n {
        for col in 0..n {
            let (x, y) = (col as f64, row as f64);
            let mut v = 0.0;
            for b in blobs {
                let g = |bx: f64| {
                    (-((x - bx).powi(2) + (y - b.y).powi(2)) / (2.0 * b.sigma * b.sigma)).exp()
                };
                v += b.weight * g(b.x);
                if mirror {
                    v += b.weight * g(n as f64 - 1.0 - b.x);
                }
            }
            out[row * n + col] = v;
        }
    }
    let peak = out.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        out.iter_mut().for_each(|v| *v /= peak);
    }
    out
}

fn templates(seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7e3d_1a2b);
    (0..10)
        .map(|_| {
            let blobs: Vec<Blob> = (0..BLOBS_PER_CLASS)
                .map(|_| Blob {
                    x: rng.gen_range(3.0..15.5),
                    y: rng.gen_range(3.0..29.0),
                    sigma: rng.gen_range(1.5..4.5),
                    weight: if rng.gen_bool(0.5) { 1.0 } else { -1.0 },
                })
                .collect();
            blob_field(&blobs, true)
        })
        .collect()
}

/// `count` records as raw CIFAR bytes, labels cycling through a seeded
/// shuffle.
pub fn generate_records(cfg: &SyntheticConfig, stream: u64, count: usize) -> Vec<u8> {
    let templates = templates(cfg.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(crate::seed::derive(cfg.seed, stream));
    let n = IMAGE_SIDE;
    let mut out = Vec::with_capacity(count * RECORD_BYTES);
    for _ in 0..count {
        let label = rng.gen_range(0..10u8);
        let t = &templates[label as usize];
        let contrast = cfg.signal * rng.gen_range(0.6..1.4);
        let shift: i64 = rng.gen_range(-2..=2);
        let base = rng.gen_range(0.35..0.65);
        let clutter: Vec<Blob> = (0..CLUTTER_BLOBS)
            .map(|_| Blob {
                x: rng.gen_range(0.0..32.0),
                y: rng.gen_range(0.0..32.0),
                sigma: rng.gen_range(2.0..6.0),
                weight: rng.gen_range(-1.0..1.0),
            })
            .collect();
        let clutter = blob_field(&clutter, false);
        let tint = [
            rng.gen_range(-0.05..0.05),
            rng.gen_range(-0.05..0.05),
            rng.gen_range(-0.05..0.05),
        ];

        let mut gray = vec![0.0; n * n];
        for row in 0..n {
            let src = row as i64 - shift;
            for col in 0..n {
                let tv = if (0..n as i64).contains(&src) {
                    t[src as usize * n + col]
                } else {
                    0.0
                };
                gray[row * n + col] = base
                    + contrast * tv
                    + cfg.clutter * clutter[row * n + col]
                    + cfg.noise * rng.sample::<f64, _>(StandardNormal);
            }
        }
        out.push(label);
        for tint in tint {
            out.extend(gray.iter().map(|g| ((g + tint).clamp(0.0, 1.0) * 255.0).round() as u8));
        }
    }
    out
}

/// Writes the six batch files into `dir`.
pub fn write_cifar_dir(dir: &Path, cfg: &SyntheticConfig) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for (i, name) in TRAIN_FILES.iter().chain([&TEST_FILE]).enumerate() {
        std::fs::write(
            dir.join(name),
            generate_records(cfg, i as u64, cfg.records_per_file),
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{load_cifar10_with, CifarLayout};

    #[test]
    fn fixture_loads_with_expected_sizes() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = SyntheticConfig::fixture();
        write_cifar_dir(dir.path(), &cfg).unwrap();
        let layout = CifarLayout {
            records_per_file: Some(100),
            validation_size: 100,
        };
        let s = load_cifar10_with(dir.path(), &layout).unwrap();
        assert_eq!(s.sizes(), (400, 100, 100));
        let again = load_cifar10_with(dir.path(), &layout).unwrap();
        assert_eq!(s.train("t"), again.train("t"));
        let mut seen = [false; 10];
        for r in s.train("t") {
            seen[r.label as usize] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }
}
