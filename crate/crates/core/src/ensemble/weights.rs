use serde::{Deserialize, Serialize};

use super::ScoreCache;
use crate::network::softmax;
use crate::trainer::{adam_step, AdamState};
use crate::{Error, Result};

/// Class weights `w[k, c]`, one row per network in cache order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightMatrix {
    networks: usize,
    classes: usize,
    values: Vec<f64>,
}

impl WeightMatrix {
    pub fn filled(networks: usize, classes: usize, value: f64) -> Self {
        Self {
            networks,
            classes,
            values: vec![value; networks * classes],
        }
    }

    /// Every weight `1/n`.
    pub fn uniform(networks: usize, classes: usize) -> Self {
        Self::filled(networks, classes, 1.0 / networks.max(1) as f64)
    }

    /// Every weight 1: the plain sum of member scores.
    pub fn equal(networks: usize, classes: usize) -> Self {
        Self::filled(networks, classes, 1.0)
    }

    pub fn from_values(networks: usize, classes: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != networks * classes {
            return Err(Error::invalid(format!(
                "{} weights for {networks} networks × {classes} classes",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("weight matrix".into()));
        }
        Ok(Self {
            networks,
            classes,
            values,
        })
    }

    pub fn networks(&self) -> usize {
        self.networks
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, network: usize, class: usize) -> f64 {
        self.values[network * self.classes + class]
    }

    pub fn row(&self, network: usize) -> &[f64] {
        &self.values[network * self.classes..(network + 1) * self.classes]
    }

    /// `Σ_c |w[k, c]|`.
    pub fn l1(&self, network: usize) -> f64 {
        self.row(network).iter().map(|v| v.abs()).sum()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v * factor).collect(),
            ..self.clone()
        }
    }

    fn check(&self, cache: &ScoreCache) -> Result<()> {
        if self.networks != cache.n_networks() || self.classes != cache.classes() {
            return Err(Error::invalid(format!(
                "weights are {}×{}, cache has {} networks × {} classes",
                self.networks,
                self.classes,
                cache.n_networks(),
                cache.classes()
            )));
        }
        Ok(())
    }
}

fn ensemble_scores(row: &[f32], w: &WeightMatrix, out: &mut [f64]) {
    let c = w.classes;
    out.iter_mut().for_each(|v| *v = 0.0);
    for (k, z) in row.chunks_exact(c).enumerate() {
        let wk = w.row(k);
        for j in 0..c {
            out[j] += wk[j] * f64::from(z[j]);
        }
    }
}

/// `argmax_c Σ_k w[k, c]·z[k, c]` for one cache sample; lowest class on
/// exact ties.
pub fn ensemble_predict(row: &[f32], w: &WeightMatrix) -> usize {
    let mut z = vec![0.0; w.classes];
    ensemble_scores(row, w, &mut z);
    crate::network::argmax(&z)
}

/// Fraction of cache samples the weighted ensemble classifies correctly.
pub fn accuracy(cache: &ScoreCache, w: &WeightMatrix) -> Result<f64> {
    w.check(cache)?;
    if cache.n_samples() == 0 {
        return Err(Error::EmptySplit("score cache".into()));
    }
    let mut z = vec![0.0; w.classes];
    let mut correct = 0;
    for s in 0..cache.n_samples() {
        ensemble_scores(cache.sample(s), w, &mut z);
        if crate::network::argmax(&z) == usize::from(cache.labels()[s]) {
            correct += 1;
        }
    }
    Ok(correct as f64 / cache.n_samples() as f64)
}

/// Mean softmax cross-entropy of the weighted ensemble scores plus
/// `(α/2)·Σ w²`.
pub fn pruning_loss(cache: &ScoreCache, w: &WeightMatrix, alpha: f64) -> Result<f64> {
    loss_impl(cache, w, alpha, false).map(|(l, _)| l)
}

/// [`pruning_loss`] and its gradient with respect to every weight.
pub fn pruning_loss_and_gradient(
    cache: &ScoreCache,
    w: &WeightMatrix,
    alpha: f64,
) -> Result<(f64, WeightMatrix)> {
    loss_impl(cache, w, alpha, true).map(|(l, g)| (l, g.expect("gradient requested")))
}

fn loss_impl(
    cache: &ScoreCache,
    w: &WeightMatrix,
    alpha: f64,
    grad: bool,
) -> Result<(f64, Option<WeightMatrix>)> {
    w.check(cache)?;
    let n_s = cache.n_samples();
    if n_s == 0 {
        return Err(Error::EmptySplit("score cache".into()));
    }
    let c = w.classes;
    let mut g = grad.then(|| vec![0.0; w.values.len()]);
    let mut z = vec![0.0; c];
    let mut sce = 0.0;
    for s in 0..n_s {
        let row = cache.sample(s);
        let label = usize::from(cache.labels()[s]);
        ensemble_scores(row, w, &mut z);
        sce += crate::network::d2nn_loss(&z, label)?;
        if let Some(g) = &mut g {
            let mut p = softmax(&z);
            p[label] -= 1.0;
            for (k, zk) in row.chunks_exact(c).enumerate() {
                let gk = &mut g[k * c..(k + 1) * c];
                for j in 0..c {
                    gk[j] += p[j] * f64::from(zk[j]);
                }
            }
        }
    }
    let inv = 1.0 / n_s as f64;
    let l2: f64 = w.values.iter().map(|v| v * v).sum();
    let loss = sce * inv + 0.5 * alpha * l2;
    if !loss.is_finite() {
        return Err(Error::NonFinite("pruning loss".into()));
    }
    let gradient = g.map(|mut g| {
        for (gv, wv) in g.iter_mut().zip(&w.values) {
            *gv = *gv * inv + alpha * wv;
        }
        WeightMatrix {
            values: g,
            ..w.clone()
        }
    });
    Ok((loss, gradient))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeightOptConfig {
    pub alpha: f64,
    pub steps: usize,
    /// Accuracy is checked after every `eval_every` steps and after the last.
    pub eval_every: usize,
    pub lr: f64,
}

impl Default for WeightOptConfig {
    fn default() -> Self {
        Self {
            alpha: 0.001,
            steps: 10_000,
            eval_every: 50,
            lr: 0.001,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizeOutcome {
    pub final_weights: WeightMatrix,
    pub best_weights: WeightMatrix,
    pub best_accuracy: f64,
    /// Step of the best snapshot; 0 is the initialisation.
    pub best_step: usize,
    pub final_loss: f64,
}

/// Full-batch Adam on [`pruning_loss`] from weights `1/n`, keeping the
/// snapshot with the highest accuracy on the same cache (earliest on ties).
pub fn optimize_weights(cache: &ScoreCache, cfg: &WeightOptConfig) -> Result<OptimizeOutcome> {
    if cache.n_networks() == 0 || cache.n_samples() == 0 {
        return Err(Error::EmptySplit("score cache".into()));
    }
    if cfg.eval_every == 0 {
        return Err(Error::invalid("eval_every must be positive"));
    }
    let mut w = WeightMatrix::uniform(cache.n_networks(), cache.classes());
    let mut best = (accuracy(cache, &w)?, 0, w.clone());
    let mut adam = AdamState::new(w.values.len());
    let mut loss = pruning_loss(cache, &w, cfg.alpha)?;
    for step in 1..=cfg.steps {
        let (_, g) = pruning_loss_and_gradient(cache, &w, cfg.alpha)?;
        adam_step(&mut w.values, &g.values, &mut adam, cfg.lr)?;
        if step % cfg.eval_every == 0 || step == cfg.steps {
            let acc = accuracy(cache, &w)?;
            if acc > best.0 {
                best = (acc, step, w.clone());
            }
        }
        if step == cfg.steps {
            loss = pruning_loss(cache, &w, cfg.alpha)?;
        }
    }
    Ok(OptimizeOutcome {
        final_weights: w,
        best_weights: best.2,
        best_accuracy: best.0,
        best_step: best.1,
        final_loss: loss,
    })
}
