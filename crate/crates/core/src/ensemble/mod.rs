//! Score caches, class-weighted voting and iterative ensemble pruning.

mod cache;
mod metrics;
mod pruning;
pub mod synthetic;
mod weights;

pub use cache::{build_score_cache, CacheBuild, ScoreCache, CACHE_MAGIC, CACHE_VERSION};
pub use metrics::{report_metrics, Metrics};
pub use pruning::{
    prune_step, rank_by_accuracy, rank_networks, retain_fraction, run_pruning, select_ensemble,
    EliminationKind, Interval, PruneStep, PruningConfig, PruningTrace, Ranking, RetainScheme,
    TraceRecord,
};
pub use weights::{
    accuracy, ensemble_predict, optimize_weights, pruning_loss, pruning_loss_and_gradient,
    OptimizeOutcome, WeightMatrix, WeightOptConfig,
};
