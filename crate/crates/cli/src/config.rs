//! Run configuration.
//!
//! A config file is TOML. Every key is optional except `data_dir`, which may
//! instead come from the `D2NN_DATA_DIR` environment variable. Missing keys
//! take the defaults of the selected profile; unknown keys are errors.
//!
//! ```toml
//! profile = "desk"          # "paper" or "desk"
//! data_dir = "/data/cifar-10-batches-bin"
//! out_dir = "runs/desk"     # default "runs/<profile>"
//! seed = 0                  # the only seed; every other stream derives from it
//! repeats = 3               # independent pruning repeats
//!
//! [data]
//! records_per_file = 10000  # 0 accepts any whole number of records
//! validation_size = 5000    # trailing training records held out
//! train_limit = 5000        # leading images used per split; 0 means all
//! validation_limit = 1000
//! test_limit = 1000
//!
//! [architecture]            # see network::Architecture
//! [pool.counts]             # amplitude_object, amplitude_fourier, phase_object, phase_fourier
//! [pool.ranges]             # see frontend::SamplerRanges
//! [train]                   # see trainer::TrainHyperparams (without seed)
//! [prune]                   # see ensemble::PruningConfig (without seed)
//! ```

use std::path::{Path, PathBuf};

use d2nn::ensemble::{Interval, PruningConfig, RetainScheme, WeightOptConfig};
use d2nn::frontend::{PoolCounts, SamplerRanges};
use d2nn::network::Architecture;
use d2nn::trainer::TrainHyperparams;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const DATA_DIR_ENV: &str = "D2NN_DATA_DIR";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// Full-size networks, the 1252-member pool and all of CIFAR-10.
    Paper,
    /// 64×64 networks, 16 members and 5K/1K/1K images.
    #[default]
    Desk,
}

impl Profile {
    pub fn as_str(self) -> &'static str {
        match self {
            Profile::Paper => "paper",
            Profile::Desk => "desk",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub records_per_file: usize,
    pub validation_size: usize,
    pub train_limit: usize,
    pub validation_limit: usize,
    pub test_limit: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoolConfig {
    pub counts: PoolCounts,
    pub ranges: SamplerRanges,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub profile: Profile,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data_dir: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub repeats: usize,
    pub data: DataConfig,
    pub architecture: Architecture,
    pub pool: PoolConfig,
    pub train: TrainHyperparams,
    pub prune: PruningConfig,
}

/// Command-line overrides, applied after the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub profile: Option<Profile>,
    pub seed: Option<u64>,
    pub repeats: Option<usize>,
    pub data_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn defaults(profile: Profile) -> Self {
        let out_dir = PathBuf::from("runs").join(profile.as_str());
        match profile {
            Profile::Paper => Self {
                profile,
                data_dir: None,
                out_dir,
                seed: 0,
                repeats: 3,
                data: DataConfig {
                    records_per_file: 10_000,
                    validation_size: 5_000,
                    train_limit: 0,
                    validation_limit: 0,
                    test_limit: 0,
                },
                architecture: Architecture::paper(),
                pool: PoolConfig {
                    counts: PoolCounts::PAPER,
                    ranges: SamplerRanges::default(),
                },
                train: TrainHyperparams::default(),
                prune: PruningConfig::default(),
            },
            Profile::Desk => Self {
                profile,
                data_dir: None,
                out_dir,
                seed: 0,
                repeats: 3,
                data: DataConfig {
                    records_per_file: 10_000,
                    validation_size: 5_000,
                    train_limit: 5_000,
                    validation_limit: 1_000,
                    test_limit: 1_000,
                },
                architecture: Architecture::desk(),
                pool: PoolConfig {
                    counts: PoolCounts::proportional(16),
                    ranges: SamplerRanges::default(),
                },
                train: TrainHyperparams {
                    epochs: 5,
                    ..TrainHyperparams::default()
                },
                prune: PruningConfig {
                    interval: Interval::Every(10),
                    ratio: 3,
                    scheme: RetainScheme::Stepwise,
                    n_max: 6,
                    optimizer: WeightOptConfig {
                        steps: 500,
                        eval_every: 1,
                        ..WeightOptConfig::default()
                    },
                    ..PruningConfig::default()
                },
            },
        }
    }

    /// Parses `text` over the defaults of its profile, then applies
    /// `overrides`. The result is validated.
    pub fn from_toml(text: &str, overrides: &Overrides) -> CliResult<Self> {
        let user: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| CliError::config(e.to_string()))?;
        let profile = match overrides.profile {
            Some(p) => p,
            None => match user.get("profile") {
                Some(v) => v
                    .clone()
                    .try_into()
                    .map_err(|e: toml::de::Error| CliError::config(format!("profile: {e}")))?,
                None => Profile::default(),
            },
        };
        let mut defaults = Self::defaults(profile);
        if let Some(seed) = user.get("seed").and_then(|v| v.as_integer()) {
            defaults.seed = seed as u64;
            defaults.train.seed = seed as u64;
            defaults.prune.seed = seed as u64;
        }
        let mut merged = toml::Table::try_from(defaults).map_err(|e| CliError::config(e.to_string()))?;
        merge(&mut merged, user);
        merged.insert("profile".into(), toml::Value::String(profile.as_str().into()));
        let mut cfg: RunConfig = merged
            .try_into()
            .map_err(|e: toml::de::Error| CliError::config(e.to_string()))?;
        // a frozen config spells out the derived seeds; anything else is a typo
        if cfg.train.seed != cfg.seed || cfg.prune.seed != cfg.seed {
            return Err(CliError::config(
                "train.seed and prune.seed follow the top-level seed; set `seed` instead",
            ));
        }
        cfg.apply(overrides);
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads the file at `path`, or starts from the defaults when `None`.
    pub fn load(path: Option<&Path>, overrides: &Overrides) -> CliResult<Self> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p)
                .map_err(|e| CliError::config(format!("{}: {e}", p.display())))?,
            None => String::new(),
        };
        Self::from_toml(&text, overrides)
    }

    fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(r) = o.repeats {
            self.repeats = r;
        }
        if let Some(d) = &o.data_dir {
            self.data_dir = Some(d.clone());
        }
        self.train.seed = self.seed;
        self.prune.seed = self.seed;
    }

    pub fn validate(&self) -> CliResult<()> {
        let dir = self.data_dir.as_ref().ok_or_else(|| {
            CliError::config(format!("no data directory: set `data_dir` or {DATA_DIR_ENV}"))
        })?;
        if !dir.is_dir() {
            return Err(CliError::config(format!(
                "data directory {} does not exist",
                dir.display()
            )));
        }
        if self.seed > i64::MAX as u64 {
            return Err(CliError::config("seed must fit in a signed 64-bit integer"));
        }
        if self.repeats == 0 {
            return Err(CliError::config("repeats must be at least 1"));
        }
        if self.pool.counts.total() == 0 {
            return Err(CliError::config("the pool is empty"));
        }
        if self.data.validation_size == 0 {
            return Err(CliError::config("validation_size must be positive"));
        }
        self.architecture.validate()?;
        self.train.validate()?;
        self.prune.validate()?;
        Ok(())
    }

    pub fn data_dir(&self) -> &Path {
        self.data_dir.as_deref().expect("validated config has a data directory")
    }

    /// Resolved config as TOML. With `portable` the data directory is left
    /// out, so a moved dataset does not count as a different run.
    pub fn to_toml(&self, portable: bool) -> String {
        let mut c = self.clone();
        if portable {
            c.data_dir = None;
        }
        toml::to_string(&c).expect("config serialises")
    }
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}
