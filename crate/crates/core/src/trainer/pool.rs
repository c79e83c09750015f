use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{train_network, TrainHyperparams};
use crate::data::DataSplits;
use crate::format::sha256_hex;
use crate::frontend::FrontEndSpec;
use crate::network::{load_checkpoint, Architecture, D2nnModel};
use crate::seed::derive;
use crate::{Error, Result};

/// Seed of pool member `index` under the run seed.
pub fn member_seed(run_seed: u64, index: usize) -> u64 {
    derive(run_seed, index as u64)
}

/// File stem used for member `index`.
pub fn member_name(index: usize) -> String {
    format!("member_{index:04}")
}

/// Summary written next to each finished checkpoint; its presence marks the
/// member as done.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemberSummary {
    pub index: usize,
    pub seed: u64,
    pub best_epoch: usize,
    pub best_validation_accuracy: f64,
    pub checkpoint_sha256: String,
}

#[derive(Clone, Debug)]
pub struct MemberOutcome {
    pub index: usize,
    pub name: String,
    /// Error text for a failed member.
    pub result: std::result::Result<MemberSummary, String>,
    /// Trained model, kept only when no output directory is used.
    pub model: Option<D2nnModel>,
    /// True when an existing output was reused.
    pub resumed: bool,
}

#[derive(Clone, Debug, Default)]
pub struct PoolOutcome {
    pub members: Vec<MemberOutcome>,
}

impl PoolOutcome {
    pub fn failures(&self) -> impl Iterator<Item = &MemberOutcome> {
        self.members.iter().filter(|m| m.result.is_err())
    }
}

/// Trains every spec independently on `workers` threads.
///
/// Member `i` uses seed [`member_seed`]`(hp.seed, i)`, so results do not
/// depend on the worker count or on completion order. With `out_dir`, each
/// member writes `member_NNNN.d2nn`, `.jsonl` (log) and `.json` (summary);
/// members whose summary and checkpoint already agree are skipped. A failing
/// member is recorded, not fatal.
pub fn train_pool(
    specs: &[FrontEndSpec],
    arch: &Architecture,
    splits: &DataSplits,
    hp: &TrainHyperparams,
    workers: usize,
    out_dir: Option<&Path>,
) -> Result<PoolOutcome> {
    hp.validate()?;
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::invalid(format!("worker pool: {e}")))?;
    let members = pool.install(|| {
        specs
            .par_iter()
            .enumerate()
            .map(|(index, spec)| run_member(index, spec, arch, splits, hp, out_dir))
            .collect()
    });
    Ok(PoolOutcome { members })
}

fn paths(dir: &Path, index: usize) -> (PathBuf, PathBuf, PathBuf) {
    let stem = member_name(index);
    (
        dir.join(format!("{stem}.d2nn")),
        dir.join(format!("{stem}.jsonl")),
        dir.join(format!("{stem}.json")),
    )
}

fn existing(dir: &Path, index: usize, spec: &FrontEndSpec, seed: u64) -> Option<MemberSummary> {
    let (ckpt, _, summary) = paths(dir, index);
    let s: MemberSummary = serde_json::from_slice(&fs::read(summary).ok()?).ok()?;
    let bytes = fs::read(&ckpt).ok()?;
    if s.seed != seed || s.checkpoint_sha256 != sha256_hex(&bytes) {
        return None;
    }
    let model = D2nnModel::from_bytes(&bytes).ok()?;
    (model.front_end() == spec).then_some(s)
}

fn run_member(
    index: usize,
    spec: &FrontEndSpec,
    arch: &Architecture,
    splits: &DataSplits,
    hp: &TrainHyperparams,
    out_dir: Option<&Path>,
) -> MemberOutcome {
    let seed = member_seed(hp.seed, index);
    let name = member_name(index);
    if let Some(s) = out_dir.and_then(|d| existing(d, index, spec, seed)) {
        return MemberOutcome {
            index,
            name,
            result: Ok(s),
            model: None,
            resumed: true,
        };
    }
    let member_hp = TrainHyperparams {
        seed,
        ..hp.clone()
    };
    let attempt = || -> Result<(MemberSummary, Option<D2nnModel>)> {
        let log_path = match out_dir {
            Some(d) => {
                let (_, log, _) = paths(d, index);
                // a rerun starts the log afresh
                let _ = fs::remove_file(&log);
                Some(log)
            }
            None => None,
        };
        let out = train_network(spec, arch, splits, &member_hp, log_path.as_deref())?;
        let bytes = out.model.to_bytes()?;
        let summary = MemberSummary {
            index,
            seed,
            best_epoch: out.best_epoch,
            best_validation_accuracy: out.best_validation_accuracy,
            checkpoint_sha256: sha256_hex(&bytes),
        };
        match out_dir {
            Some(d) => {
                let (ckpt, _, sum) = paths(d, index);
                crate::network::save_checkpoint(&out.model, &ckpt)?;
                let json = serde_json::to_vec_pretty(&summary)
                    .map_err(|e| Error::Serialization(e.to_string()))?;
                fs::write(sum, json)?;
                debug_assert_eq!(load_checkpoint(&ckpt)?, out.model);
                Ok((summary, None))
            }
            None => Ok((summary, Some(out.model))),
        }
    };
    match attempt() {
        Ok((summary, model)) => MemberOutcome {
            index,
            name,
            result: Ok(summary),
            model,
            resumed: false,
        },
        Err(e) => MemberOutcome {
            index,
            name,
            result: Err(e.to_string()),
            model: None,
            resumed: false,
        },
    }
}
