use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Precision {
    #[default]
    Double,
    /// Accepted by the schema but not implemented.
    Single,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainHyperparams {
    pub batch_size: usize,
    pub epochs: usize,
    pub lr0: f64,
    pub lr_decay: f64,
    /// Epochs between decays.
    pub decay_every: usize,
    pub flip_probability: f64,
    pub seed: u64,
    pub precision: Precision,
}

impl Default for TrainHyperparams {
    fn default() -> Self {
        Self {
            batch_size: 8,
            epochs: 50,
            lr0: 0.001,
            lr_decay: 0.7,
            decay_every: 8,
            flip_probability: 0.5,
            seed: 0,
            precision: Precision::Double,
        }
    }
}

impl TrainHyperparams {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.epochs == 0 || self.decay_every == 0 {
            return Err(Error::invalid("batch size, epochs and decay interval must be positive"));
        }
        if !(self.lr0 > 0.0 && self.lr0.is_finite()) {
            return Err(Error::invalid(format!("lr0 {} must be positive", self.lr0)));
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return Err(Error::invalid(format!("lr decay {} must be in (0, 1]", self.lr_decay)));
        }
        if !(0.0..=1.0).contains(&self.flip_probability) {
            return Err(Error::invalid(format!(
                "flip probability {} outside [0, 1]",
                self.flip_probability
            )));
        }
        if self.precision == Precision::Single {
            return Err(Error::invalid("single-precision training is not implemented"));
        }
        Ok(())
    }

    /// `lr0 · decay^⌊epoch / decay_every⌋`.
    pub fn learning_rate(&self, epoch: usize) -> f64 {
        self.lr0 * self.lr_decay.powi((epoch / self.decay_every) as i32)
    }
}

/// Default schedule: `0.001 · 0.7^⌊epoch/8⌋`.
pub fn lr_schedule(epoch: usize) -> f64 {
    TrainHyperparams::default().learning_rate(epoch)
}
