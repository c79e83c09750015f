//! Adam, the learning-rate schedule and (pool) training of classifiers.

mod adam;
mod hyper;
mod pool;
mod train;

pub use adam::{adam_step, AdamState};
pub use hyper::{lr_schedule, Precision, TrainHyperparams};
pub use pool::{member_name, member_seed, train_pool, MemberOutcome, MemberSummary, PoolOutcome};
pub use train::{train_network, EpochRecord, TrainOutcome};
