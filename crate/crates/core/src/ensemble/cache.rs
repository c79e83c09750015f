//! Per-sample, per-network class scores.
//!
//! File layout after the shared `magic ‖ version` header, little-endian:
//!
//! ```text
//! u8 split (0 train, 1 validation, 2 test)
//! u32 n_samples, u32 n_networks, u32 classes
//! n_networks × str network identity
//! n_samples × u8 label
//! n_samples × n_networks × classes f32 scores, row-major
//! 32-byte SHA-256 of everything before it
//! ```

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::data::{LabeledImage, SplitTag};
use crate::format::{Reader, Writer};
use crate::network::{Bench, D2nnModel, DEGENERATE_THRESHOLD};
use crate::{Error, Result};

pub const CACHE_MAGIC: &[u8; 4] = b"D2SC";
pub const CACHE_VERSION: u32 = 1;

/// Scores `z[s, k, c]` of every network on every sample of one split, held
/// at the single precision of the file format.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreCache {
    split: SplitTag,
    classes: usize,
    networks: Vec<String>,
    labels: Vec<u8>,
    scores: Vec<f32>,
}

impl ScoreCache {
    pub fn new(
        split: SplitTag,
        classes: usize,
        networks: Vec<String>,
        labels: Vec<u8>,
        scores: Vec<f32>,
    ) -> Result<Self> {
        if classes == 0 {
            return Err(Error::invalid("score cache needs at least one class"));
        }
        let unique: HashSet<&String> = networks.iter().collect();
        if unique.len() != networks.len() {
            return Err(Error::invalid("network identities in a score cache must be unique"));
        }
        if scores.len() != labels.len() * networks.len() * classes {
            return Err(Error::invalid(format!(
                "{} scores for {} samples × {} networks × {classes} classes",
                scores.len(),
                labels.len(),
                networks.len()
            )));
        }
        if let Some(l) = labels.iter().find(|l| usize::from(**l) >= classes) {
            return Err(Error::invalid(format!("label {l} out of range")));
        }
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::NonFinite("score cache".into()));
        }
        Ok(Self {
            split,
            classes,
            networks,
            labels,
            scores,
        })
    }

    pub fn split(&self) -> SplitTag {
        self.split
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn n_samples(&self) -> usize {
        self.labels.len()
    }

    pub fn n_networks(&self) -> usize {
        self.networks.len()
    }

    pub fn networks(&self) -> &[String] {
        &self.networks
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn scores(&self) -> &[f32] {
        &self.scores
    }

    pub fn score(&self, sample: usize, network: usize, class: usize) -> f32 {
        self.scores[(sample * self.networks.len() + network) * self.classes + class]
    }

    /// The `n_networks × classes` block of one sample.
    pub fn sample(&self, sample: usize) -> &[f32] {
        let w = self.networks.len() * self.classes;
        &self.scores[sample * w..(sample + 1) * w]
    }

    /// Cache restricted to the listed networks, in that order.
    pub fn select(&self, networks: &[usize]) -> Result<Self> {
        if let Some(k) = networks.iter().find(|k| **k >= self.n_networks()) {
            return Err(Error::invalid(format!("network index {k} out of range")));
        }
        let c = self.classes;
        let mut scores = Vec::with_capacity(self.n_samples() * networks.len() * c);
        for s in 0..self.n_samples() {
            let row = self.sample(s);
            for &k in networks {
                scores.extend_from_slice(&row[k * c..(k + 1) * c]);
            }
        }
        Self::new(
            self.split,
            c,
            networks.iter().map(|&k| self.networks[k].clone()).collect(),
            self.labels.clone(),
            scores,
        )
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new(CACHE_MAGIC, CACHE_VERSION);
        w.u8(match self.split {
            SplitTag::Train => 0,
            SplitTag::Validation => 1,
            SplitTag::Test => 2,
        });
        w.u32(self.n_samples() as u32);
        w.u32(self.n_networks() as u32);
        w.u32(self.classes as u32);
        for n in &self.networks {
            w.str(n);
        }
        w.bytes(&self.labels);
        for s in &self.scores {
            w.f32(*s);
        }
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::open(bytes, CACHE_MAGIC, CACHE_VERSION)?;
        let split = match r.u8()? {
            0 => SplitTag::Train,
            1 => SplitTag::Validation,
            2 => SplitTag::Test,
            b => return Err(Error::Format(format!("split byte {b}"))),
        };
        let n_samples = r.u32()? as usize;
        let n_networks = r.u32()? as usize;
        let classes = r.u32()? as usize;
        let networks = (0..n_networks).map(|_| r.str()).collect::<Result<Vec<_>>>()?;
        let labels = r.bytes(n_samples)?.to_vec();
        let count = n_samples
            .checked_mul(n_networks)
            .and_then(|v| v.checked_mul(classes))
            .ok_or_else(|| Error::Format("score tensor size overflows".into()))?;
        let scores = r.f32_vec(count)?;
        r.finish()?;
        Self::new(split, classes, networks, labels, scores)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::network::write_atomic(path.as_ref(), &self.to_bytes())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::Data {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::from_bytes(&bytes)
    }

    /// Tab-separated export: one row per (sample, network) with the label
    /// and one column per class.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("sample\tlabel\tnetwork");
        for c in 0..self.classes {
            let _ = write!(out, "\tz{c}");
        }
        out.push('\n');
        for s in 0..self.n_samples() {
            for (k, name) in self.networks.iter().enumerate() {
                let _ = write!(out, "{s}\t{}\t{name}", self.labels[s]);
                for c in 0..self.classes {
                    let _ = write!(out, "\t{}", self.score(s, k, c));
                }
                out.push('\n');
            }
        }
        out
    }
}

/// A freshly built cache and the number of degenerate `(sample, network,
/// class)` entries that were recorded as zero.
#[derive(Clone, Debug)]
pub struct CacheBuild {
    pub cache: ScoreCache,
    pub degenerate: usize,
}

/// Evaluates every network on every image. `load(k)` supplies network `k`
/// so that large pools need not be held in memory at once. Work is spread
/// over networks and images; placement in the tensor is fixed, so the result
/// does not depend on scheduling.
pub fn build_score_cache<F>(
    names: &[String],
    load: F,
    images: &[LabeledImage],
    split: SplitTag,
) -> Result<CacheBuild>
where
    F: Fn(usize) -> Result<D2nnModel> + Sync,
{
    let classes = crate::CLASS_COUNT;
    let blocks: Vec<(Vec<f64>, usize)> = (0..names.len())
        .into_par_iter()
        .map(|k| -> Result<(Vec<f64>, usize)> {
            let model = load(k)?;
            if model.classes() != classes {
                return Err(Error::invalid(format!(
                    "network {} has {} classes, expected {classes}",
                    names[k],
                    model.classes()
                )));
            }
            let bench = Bench::new(&model)?;
            let t = model.temperature();
            let signals = bench.signals_all(&model, images)?;
            let mut out = Vec::with_capacity(images.len() * classes);
            let mut degenerate = 0;
            for sig in &signals {
                for (p, n) in model.layout().class_signals(sig) {
                    if p + n < DEGENERATE_THRESHOLD {
                        degenerate += 1;
                        out.push(0.0);
                    } else {
                        out.push((p - n) / (p + n) / t);
                    }
                }
            }
            Ok((out, degenerate))
        })
        .collect::<Result<_>>()?;

    let n = names.len();
    let mut scores = vec![0f32; images.len() * n * classes];
    for (k, (block, _)) in blocks.iter().enumerate() {
        for s in 0..images.len() {
            let dst = (s * n + k) * classes;
            for c in 0..classes {
                scores[dst + c] = block[s * classes + c] as f32;
            }
        }
    }
    let labels = images.iter().map(|i| i.label).collect();
    Ok(CacheBuild {
        cache: ScoreCache::new(split, classes, names.to_vec(), labels, scores)?,
        degenerate: blocks.iter().map(|(_, d)| d).sum(),
    })
}
