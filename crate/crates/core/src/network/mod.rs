//! The diffractive classifier: phase layers behind a front end, differential
//! detector scores and their exact reverse-mode gradients.

mod bench;
mod checkpoint;
mod model;
mod scores;

pub use bench::{Bench, BatchGradient, Forward, GradientBundle, Sample};
pub(crate) use bench::argmax;
pub(crate) use checkpoint::write_atomic;
pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use model::{Architecture, D2nnModel};
pub use scores::{
    d2nn_loss, differential_scores, loss_gradient, score_gradient, softmax, Denominator,
    DEGENERATE_THRESHOLD, TRAINING_EPSILON,
};
