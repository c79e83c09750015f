//! Run-directory bookkeeping: frozen config, data manifest, stage stamps
//! and the split-access audit log.
//!
//! Layout of a run directory:
//!
//! ```text
//! config.toml          resolved config, written by `prepare`
//! seeds.json           every derived seed
//! manifest.json        data file hashes, split sizes and content hashes
//! audit.jsonl          one {stage, split} line per split read, in order
//! stamps/<stage>.json  inputs and output hashes of each finished stage
//! pool/                member checkpoints, logs and summaries
//! caches/              validation.d2sc, test.d2sc
//! traces/              repeat_NN.json
//! report/              *.tsv tables and *.svg plots
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use d2nn::data::{AuditEntry, LabeledImage, SplitTag, TEST_FILE, TRAIN_FILES};
use d2nn::format::sha256_hex;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult, FailureKind};

pub const CONFIG_FILE: &str = "config.toml";
pub const SEEDS_FILE: &str = "seeds.json";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const AUDIT_FILE: &str = "audit.jsonl";

/// Pipeline stages in execution order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Prepare,
    Train,
    Cache,
    Prune,
    Report,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Prepare => "prepare",
            Stage::Train => "train",
            Stage::Cache => "cache",
            Stage::Prune => "prune",
            Stage::Report => "report",
        }
    }

    pub fn upstream(self) -> Option<Stage> {
        match self {
            Stage::Prepare => None,
            Stage::Train => Some(Stage::Prepare),
            Stage::Cache => Some(Stage::Train),
            Stage::Prune => Some(Stage::Cache),
            Stage::Report => Some(Stage::Prune),
        }
    }
}

pub fn file_sha(path: &Path) -> CliResult<String> {
    let bytes = fs::read(path).map_err(|e| CliError::new(FailureKind::Io, format!("{}: {e}", path.display())))?;
    Ok(sha256_hex(&bytes))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::new(FailureKind::Io, e.to_string()))?;
    text.push('\n');
    write_text(path, &text)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let bytes = fs::read(path).map_err(|e| CliError::new(FailureKind::Io, format!("{}: {e}", path.display())))?;
    serde_json::from_slice(&bytes)
        .map_err(|e| CliError::new(FailureKind::Data, format!("{}: {e}", path.display())))
}

/// Writes through a temporary sibling and a rename.
pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    let named = |e: std::io::Error| CliError::new(FailureKind::Io, format!("{}: {e}", path.display()));
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(named)?;
    }
    let tmp = path.with_extension("partial");
    fs::write(&tmp, text).map_err(named)?;
    fs::rename(&tmp, path).map_err(named)?;
    Ok(())
}

/// Hash over labels and pixel bits, in split order.
pub fn content_sha(images: &[LabeledImage]) -> String {
    let mut bytes = Vec::with_capacity(images.len() * (1 + 8 * 1024));
    for img in images {
        bytes.push(img.label);
        for p in img.image.pixels() {
            bytes.extend_from_slice(&p.to_le_bytes());
        }
    }
    sha256_hex(&bytes)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSizes {
    pub train: usize,
    pub validation: usize,
    pub test: usize,
}

/// What `prepare` saw. Contains nothing machine-specific, so reruns over
/// the same data give an identical file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    /// SHA-256 of each batch file.
    pub files: BTreeMap<String, String>,
    pub sizes: SplitSizes,
    /// Content hashes of the training and validation images as used.
    /// The test split is covered by its file hash only.
    pub content: BTreeMap<String, String>,
}

pub fn data_file_hashes(dir: &Path) -> CliResult<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for name in TRAIN_FILES.iter().chain([&TEST_FILE]) {
        let path = dir.join(name);
        let bytes = fs::read(&path).map_err(|e| CliError::new(FailureKind::Data, format!("{}: {e}", path.display())))?;
        out.insert((*name).to_string(), sha256_hex(&bytes));
    }
    Ok(out)
}

/// Record of a finished stage. `inputs` are the upstream outputs it
/// consumed; `outputs` map run-relative paths to their hashes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stamp {
    pub stage: String,
    pub config_sha: String,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
}

pub struct RunDir {
    root: PathBuf,
}

impl RunDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    fn stamp_path(&self, stage: Stage) -> PathBuf {
        self.root.join("stamps").join(format!("{}.json", stage.name()))
    }

    pub fn read_stamp(&self, stage: Stage) -> CliResult<Stamp> {
        let path = self.stamp_path(stage);
        if !path.is_file() {
            return Err(CliError::stale(format!(
                "`{}` has not completed in {}; run `d2nn {}` first",
                stage.name(),
                self.root.display(),
                stage.name()
            )));
        }
        read_json(&path)
    }

    /// Hashes `outputs` (run-relative paths) and records the stamp.
    pub fn write_stamp(
        &self,
        stage: Stage,
        config_sha: &str,
        inputs: BTreeMap<String, String>,
        outputs: &[String],
    ) -> CliResult<Stamp> {
        let mut hashed = BTreeMap::new();
        for rel in outputs {
            hashed.insert(rel.clone(), file_sha(&self.path(rel))?);
        }
        let stamp = Stamp {
            stage: stage.name().into(),
            config_sha: config_sha.into(),
            inputs,
            outputs: hashed,
        };
        write_json(&self.stamp_path(stage), &stamp)?;
        Ok(stamp)
    }

    /// Checks `stage` and everything upstream of it: each stamp exists, was
    /// made under `config_sha`, its outputs are unchanged on disk and its
    /// inputs equal the upstream outputs.
    pub fn verify(&self, stage: Stage, config_sha: &str) -> CliResult<Stamp> {
        let stamp = self.read_stamp(stage)?;
        if stamp.config_sha != config_sha {
            return Err(CliError::stale(format!(
                "`{}` ran under a different config; rerun it",
                stage.name()
            )));
        }
        for (rel, sha) in &stamp.outputs {
            let path = self.path(rel);
            let found = if path.is_file() { file_sha(&path)? } else { "missing".into() };
            if &found != sha {
                return Err(CliError::stale(format!(
                    "{rel} changed since `{}` ran; rerun `d2nn {}`",
                    stage.name(),
                    stage.name()
                )));
            }
        }
        if let Some(up) = stage.upstream() {
            let upstream = self.verify(up, config_sha)?;
            if stamp.inputs != upstream.outputs {
                return Err(CliError::stale(format!(
                    "`{}` was rerun after `{}`; rerun `d2nn {}`",
                    up.name(),
                    stage.name(),
                    stage.name()
                )));
            }
        }
        Ok(stamp)
    }

    pub fn append_audit(&self, entries: &[AuditEntry]) -> CliResult<()> {
        let mut log = self.audit()?;
        let mut text = fs::read_to_string(self.path(AUDIT_FILE)).unwrap_or_default();
        for e in entries {
            let line = AuditLine {
                stage: e.stage.clone(),
                split: e.split,
            };
            if !log.contains(&line) {
                text.push_str(&serde_json::to_string(&line).expect("audit line serialises"));
                text.push('\n');
                log.push(line);
            }
        }
        write_text(&self.path(AUDIT_FILE), &text)
    }

    pub fn audit(&self) -> CliResult<Vec<AuditLine>> {
        let path = self.path(AUDIT_FILE);
        if !path.is_file() {
            return Ok(Vec::new());
        }
        fs::read_to_string(&path)?
            .lines()
            .map(|l| {
                serde_json::from_str(l)
                    .map_err(|e| CliError::new(FailureKind::Data, format!("{}: {e}", path.display())))
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditLine {
    pub stage: String,
    pub split: SplitTag,
}

/// True when the only reader of the test split in `log` is `report`.
pub fn test_isolated(log: &[AuditLine]) -> bool {
    log.iter()
        .filter(|l| l.split == SplitTag::Test)
        .all(|l| l.stage == Stage::Report.name())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stamps_detect_edits_and_reruns() {
        let dir = tempfile::tempdir().unwrap();
        let run = RunDir::new(dir.path());
        write_text(&run.path("a.txt"), "one").unwrap();
        let s1 = run
            .write_stamp(Stage::Prepare, "cfg", BTreeMap::new(), &["a.txt".into()])
            .unwrap();
        write_text(&run.path("b.txt"), "two").unwrap();
        run.write_stamp(Stage::Train, "cfg", s1.outputs.clone(), &["b.txt".into()])
            .unwrap();
        assert!(run.verify(Stage::Train, "cfg").is_ok());
        assert_eq!(run.verify(Stage::Train, "other").unwrap_err().kind, FailureKind::Stale);

        write_text(&run.path("a.txt"), "changed").unwrap();
        assert!(run.verify(Stage::Train, "cfg").is_err());
        run.write_stamp(Stage::Prepare, "cfg", BTreeMap::new(), &["a.txt".into()])
            .unwrap();
        let e = run.verify(Stage::Train, "cfg").unwrap_err();
        assert!(e.message.contains("rerun `d2nn train`"), "{e}");
        assert!(run.verify(Stage::Cache, "cfg").unwrap_err().message.contains("d2nn cache"));
    }

    #[test]
    fn audit_log_dedups_and_flags_test_reads() {
        let dir = tempfile::tempdir().unwrap();
        let run = RunDir::new(dir.path());
        let e = |stage: &str, split| AuditEntry {
            stage: stage.into(),
            split,
        };
        run.append_audit(&[e("train", SplitTag::Train), e("train", SplitTag::Train)])
            .unwrap();
        assert_eq!(run.audit().unwrap().len(), 1);
        assert!(test_isolated(&run.audit().unwrap()));
        run.append_audit(&[e("report", SplitTag::Test)]).unwrap();
        assert!(test_isolated(&run.audit().unwrap()));
        run.append_audit(&[e("prune", SplitTag::Test)]).unwrap();
        assert!(!test_isolated(&run.audit().unwrap()));
    }
}
