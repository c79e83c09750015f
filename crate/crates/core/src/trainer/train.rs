use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{adam_step, AdamState, TrainHyperparams};
use crate::data::{flip_left_right, DataSplits, Image};
use crate::frontend::FrontEndSpec;
use crate::network::{Architecture, Bench, D2nnModel, Denominator, Sample};
use crate::seed::substream;
use crate::{Error, Result};

/// One line of the training log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub mean_loss: f64,
    pub train_accuracy: f64,
    pub validation_accuracy: f64,
    pub lr: f64,
    pub wall_seconds: f64,
}

impl EpochRecord {
    /// Equality ignoring wall time.
    pub fn same_result(&self, other: &Self) -> bool {
        self.epoch == other.epoch
            && self.mean_loss.to_bits() == other.mean_loss.to_bits()
            && self.train_accuracy.to_bits() == other.train_accuracy.to_bits()
            && self.validation_accuracy.to_bits() == other.validation_accuracy.to_bits()
            && self.lr.to_bits() == other.lr.to_bits()
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// Best-on-validation parameters, rounded to checkpoint precision.
    pub model: D2nnModel,
    pub best_epoch: usize,
    pub best_validation_accuracy: f64,
    pub log: Vec<EpochRecord>,
}

/// Trains one network and keeps the epoch with the highest validation
/// accuracy (earliest on ties). Validation runs on the single-precision
/// copy that the returned model holds, so the reported accuracy is exactly
/// that of the saved checkpoint. When `log_path` is given each epoch record
/// is appended to it as a JSON line.
pub fn train_network(
    spec: &FrontEndSpec,
    arch: &Architecture,
    splits: &DataSplits,
    hp: &TrainHyperparams,
    log_path: Option<&Path>,
) -> Result<TrainOutcome> {
    hp.validate()?;
    let train = splits.train("train");
    let validation = splits.validation("train");
    if train.is_empty() {
        return Err(Error::EmptySplit("train".into()));
    }
    if validation.is_empty() {
        return Err(Error::EmptySplit("validation".into()));
    }

    let mut model = D2nnModel::random(arch, spec.clone(), substream(hp.seed, "init"))?;
    let bench = Bench::new(&model)?;
    let mut params = model.parameters();
    let mut adam = AdamState::new(params.len());
    let mut shuffle = ChaCha8Rng::seed_from_u64(substream(hp.seed, "shuffle"));
    let mut coin = ChaCha8Rng::seed_from_u64(substream(hp.seed, "flip"));
    let mut order: Vec<usize> = (0..train.len()).collect();

    let mut log = Vec::with_capacity(hp.epochs);
    let mut best: Option<(usize, f64, D2nnModel)> = None;
    for epoch in 0..hp.epochs {
        let start = Instant::now();
        let lr = hp.learning_rate(epoch);
        order.shuffle(&mut shuffle);
        let (mut loss_sum, mut correct) = (0.0, 0usize);
        for batch in order.chunks(hp.batch_size) {
            let flipped: Vec<Option<Image>> = batch
                .iter()
                .map(|&i| coin.gen_bool(hp.flip_probability).then(|| flip_left_right(&train[i].image)))
                .collect();
            let samples: Vec<Sample> = batch
                .iter()
                .zip(&flipped)
                .map(|(&i, f)| Sample {
                    image: f.as_ref().unwrap_or(&train[i].image),
                    label: usize::from(train[i].label),
                })
                .collect();
            let g = bench.batch_gradient(&model, &samples, Denominator::Regularized)?;
            loss_sum += g.mean_loss * batch.len() as f64;
            correct += g.correct;
            adam_step(&mut params, &g.gradient.flatten(), &mut adam, lr)?;
            model.set_parameters(&params)?;
        }
        let snapshot = model.quantized();
        let val_acc = bench.accuracy(&snapshot, validation)?;
        let record = EpochRecord {
            epoch,
            mean_loss: loss_sum / train.len() as f64,
            train_accuracy: correct as f64 / train.len() as f64,
            validation_accuracy: val_acc,
            lr,
            wall_seconds: start.elapsed().as_secs_f64(),
        };
        if let Some(path) = log_path {
            let mut f = OpenOptions::new().create(true).append(true).open(path)?;
            let line = serde_json::to_string(&record).map_err(|e| Error::Serialization(e.to_string()))?;
            writeln!(f, "{line}")?;
        }
        log.push(record);
        if best.as_ref().is_none_or(|(_, acc, _)| val_acc > *acc) {
            best = Some((epoch, val_acc, snapshot));
        }
    }
    let (best_epoch, best_validation_accuracy, model) = best.expect("at least one epoch");
    Ok(TrainOutcome {
        model,
        best_epoch,
        best_validation_accuracy,
        log,
    })
}
