//! The five pipeline stages.

use std::collections::BTreeMap;
use std::path::PathBuf;

use d2nn::data::{load_cifar10_with, CifarLayout, DataSplits, SplitTag};
use d2nn::ensemble::{build_score_cache, run_pruning, select_ensemble, PruningConfig, ScoreCache};
use d2nn::format::sha256_hex;
use d2nn::frontend::{sample_pool_specs, FrontEndSpec};
use d2nn::network::load_checkpoint;
use d2nn::seed::{derive, substream};
use d2nn::trainer::{member_name, member_seed, train_pool};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::artifacts::{
    content_sha, data_file_hashes, read_json, test_isolated, write_json, write_text, Manifest,
    RunDir, SplitSizes, Stage, CONFIG_FILE, MANIFEST_FILE, SEEDS_FILE,
};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult, FailureKind};
use crate::report::{build_report, MeanStd, PruneRun, Report};

const SPECS_FILE: &str = "pool/specs.json";
const VALIDATION_CACHE: &str = "caches/validation.d2sc";
const TEST_CACHE: &str = "caches/test.d2sc";
const PRUNE_SUMMARY: &str = "prune_summary.tsv";
const REPORT_FILES: [&str; 11] = [
    "accuracy.tsv",
    "tpr.tsv",
    "individual_vs_ensemble.tsv",
    "n_vs_nmax.tsv",
    "equal_vs_optimized.tsv",
    "trace.tsv",
    "summary.json",
    "tpr.svg",
    "individual_vs_ensemble.svg",
    "n_vs_nmax.svg",
    "trace.svg",
];

/// Every random stream of a run, derived from the one config seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Seeds {
    pub run: u64,
    pub pool_sampler: u64,
    pub members: BTreeMap<String, u64>,
    pub prune_repeats: Vec<u64>,
}

impl Seeds {
    pub fn of(cfg: &RunConfig) -> Self {
        Self {
            run: cfg.seed,
            pool_sampler: substream(cfg.seed, "pool"),
            members: (0..cfg.pool.counts.total())
                .map(|i| (member_name(i), member_seed(cfg.seed, i)))
                .collect(),
            prune_repeats: (0..cfg.repeats).map(|r| derive(cfg.seed, r as u64)).collect(),
        }
    }
}

/// A resolved config bound to its run directory.
pub struct Context {
    pub cfg: RunConfig,
    pub workers: usize,
    pub run: RunDir,
    config_sha: String,
}

impl Context {
    pub fn new(cfg: RunConfig, workers: Option<usize>) -> Self {
        let workers = workers
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
            .max(1);
        let config_sha = sha256_hex(cfg.to_toml(true).as_bytes());
        Self {
            run: RunDir::new(cfg.out_dir.clone()),
            cfg,
            workers,
            config_sha,
        }
    }

    fn pool(&self) -> CliResult<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| CliError::new(FailureKind::Io, format!("worker pool: {e}")))
    }

    fn load_splits(&self) -> CliResult<DataSplits> {
        let d = &self.cfg.data;
        let layout = CifarLayout {
            records_per_file: (d.records_per_file > 0).then_some(d.records_per_file),
            validation_size: d.validation_size,
        };
        let all = load_cifar10_with(self.cfg.data_dir(), &layout)?;
        let lim = |n: usize| if n == 0 { usize::MAX } else { n };
        Ok(all.truncated(lim(d.train_limit), lim(d.validation_limit), lim(d.test_limit)))
    }

    fn check_data(&self) -> CliResult<()> {
        let manifest: Manifest = read_json(&self.run.path(MANIFEST_FILE))?;
        if data_file_hashes(self.cfg.data_dir())? != manifest.files {
            return Err(CliError::stale(format!(
                "data files in {} changed since `prepare`; rerun the pipeline from `d2nn prepare`",
                self.cfg.data_dir().display()
            )));
        }
        Ok(())
    }

    fn member_path(&self, name: &str) -> PathBuf {
        self.run.path(&format!("pool/{name}.d2nn"))
    }
}

fn warn(msg: &str) {
    eprintln!("warning: {msg}");
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrepareSummary {
    pub sizes: SplitSizes,
    pub manifest_sha: String,
}

/// Loads and splits the data, then writes the manifest, the frozen config
/// and the seeds.
pub fn cmd_prepare(ctx: &Context) -> CliResult<PrepareSummary> {
    let frozen_path = ctx.run.path(CONFIG_FILE);
    if frozen_path.is_file() {
        let text = std::fs::read_to_string(&frozen_path)?;
        let frozen: RunConfig = toml::from_str(&text)
            .map_err(|e| CliError::config(format!("{}: {e}", frozen_path.display())))?;
        if frozen.to_toml(true) != ctx.cfg.to_toml(true) {
            return Err(CliError::stale(format!(
                "{} holds a run with a different config; use another out_dir",
                ctx.run.root().display()
            )));
        }
    }
    let splits = ctx.load_splits()?;
    let (train, validation, test) = splits.sizes();
    let manifest = Manifest {
        files: data_file_hashes(ctx.cfg.data_dir())?,
        sizes: SplitSizes {
            train,
            validation,
            test,
        },
        content: BTreeMap::from([
            ("train".into(), content_sha(splits.train("prepare"))),
            ("validation".into(), content_sha(splits.validation("prepare"))),
        ]),
    };
    write_text(&frozen_path, &ctx.cfg.to_toml(false))?;
    write_json(&ctx.run.path(SEEDS_FILE), &Seeds::of(&ctx.cfg))?;
    write_json(&ctx.run.path(MANIFEST_FILE), &manifest)?;
    ctx.run.append_audit(&splits.audit().entries())?;
    let stamp = ctx.run.write_stamp(
        Stage::Prepare,
        &ctx.config_sha,
        manifest.files.clone(),
        &[MANIFEST_FILE.into(), SEEDS_FILE.into()],
    )?;
    Ok(PrepareSummary {
        sizes: manifest.sizes,
        manifest_sha: stamp.outputs[MANIFEST_FILE].clone(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub members: usize,
    pub resumed: usize,
    /// `(name, best validation accuracy)` of finished members.
    pub trained: Vec<(String, f64)>,
    /// `(name, error)`.
    pub failed: Vec<(String, String)>,
}

/// Samples the pool's front ends and trains every member. Finished members
/// are skipped on rerun.
pub fn cmd_train(ctx: &Context) -> CliResult<TrainSummary> {
    let prepared = ctx.run.verify(Stage::Prepare, &ctx.config_sha)?;
    ctx.check_data()?;
    let cfg = &ctx.cfg;
    let seeds = Seeds::of(cfg);
    let specs = sample_pool_specs(
        seeds.pool_sampler,
        &cfg.pool.counts,
        &cfg.architecture.geometry()?,
        &cfg.pool.ranges,
    )?;
    write_json(&ctx.run.path(SPECS_FILE), &specs)?;
    let splits = ctx.load_splits()?;
    let outcome = train_pool(
        &specs,
        &cfg.architecture,
        &splits,
        &cfg.train,
        ctx.workers,
        Some(&ctx.run.path("pool")),
    )?;
    ctx.run.append_audit(&splits.audit().entries())?;

    let mut summary = TrainSummary {
        members: specs.len(),
        resumed: 0,
        trained: Vec::new(),
        failed: Vec::new(),
    };
    let mut outputs = vec![SPECS_FILE.to_string()];
    for m in &outcome.members {
        match &m.result {
            Ok(s) => {
                summary.trained.push((m.name.clone(), s.best_validation_accuracy));
                summary.resumed += usize::from(m.resumed);
                outputs.push(format!("pool/{}.d2nn", m.name));
            }
            Err(e) => summary.failed.push((m.name.clone(), e.clone())),
        }
    }
    if !summary.failed.is_empty() {
        let list: Vec<String> = summary.failed.iter().map(|(n, e)| format!("{n} ({e})")).collect();
        warn(&format!(
            "{} of {} members failed: {}",
            summary.failed.len(),
            specs.len(),
            list.join(", ")
        ));
    }
    if summary.trained.is_empty() {
        return Err(CliError::new(FailureKind::Numeric, "every pool member failed"));
    }
    ctx.run
        .write_stamp(Stage::Train, &ctx.config_sha, prepared.outputs, &outputs)?;
    Ok(summary)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CacheSummary {
    pub networks: usize,
    pub samples: usize,
    pub degenerate: usize,
    pub missing: Vec<String>,
    pub up_to_date: bool,
}

fn trained_members(ctx: &Context, train: &crate::artifacts::Stamp) -> CliResult<(Vec<String>, Vec<String>)> {
    let names: Vec<String> = train
        .outputs
        .keys()
        .filter_map(|k| k.strip_prefix("pool/")?.strip_suffix(".d2nn"))
        .map(str::to_string)
        .collect();
    let specs: Vec<FrontEndSpec> = read_json(&ctx.run.path(SPECS_FILE))?;
    let missing = (0..specs.len())
        .map(member_name)
        .filter(|n| !names.contains(n))
        .collect();
    Ok((names, missing))
}

fn score_cache(ctx: &Context, names: &[String], split: SplitTag, splits: &DataSplits, stage: &str) -> CliResult<(ScoreCache, usize)> {
    let images = splits.split(split, stage);
    let paths: Vec<PathBuf> = names.iter().map(|n| ctx.member_path(n)).collect();
    let build = ctx.pool()?.install(|| {
        build_score_cache(names, |k| load_checkpoint(&paths[k]), images, split)
    })?;
    if build.degenerate > 0 {
        warn(&format!(
            "{} {split} (sample, network, class) entries had no detector signal and were scored 0",
            build.degenerate
        ));
    }
    Ok((build.cache, build.degenerate))
}

/// Scores every trained member on the validation split.
pub fn cmd_cache(ctx: &Context) -> CliResult<CacheSummary> {
    let train = ctx.run.verify(Stage::Train, &ctx.config_sha)?;
    let (names, missing) = trained_members(ctx, &train)?;
    if !missing.is_empty() {
        warn(&format!("partial pool, missing members: {}", missing.join(", ")));
    }
    if ctx.run.verify(Stage::Cache, &ctx.config_sha).is_ok() {
        let cache = ScoreCache::load(ctx.run.path(VALIDATION_CACHE))?;
        return Ok(CacheSummary {
            networks: cache.n_networks(),
            samples: cache.n_samples(),
            degenerate: 0,
            missing,
            up_to_date: true,
        });
    }
    ctx.check_data()?;
    let splits = ctx.load_splits()?;
    let (cache, degenerate) = score_cache(ctx, &names, SplitTag::Validation, &splits, "cache")?;
    cache.save(ctx.run.path(VALIDATION_CACHE))?;
    ctx.run.append_audit(&splits.audit().entries())?;
    ctx.run
        .write_stamp(Stage::Cache, &ctx.config_sha, train.outputs, &[VALIDATION_CACHE.into()])?;
    Ok(CacheSummary {
        networks: cache.n_networks(),
        samples: cache.n_samples(),
        degenerate,
        missing,
        up_to_date: false,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PruneSummary {
    pub validation_accuracy: MeanStd,
    pub sizes: Vec<usize>,
    pub reused: usize,
}

impl PruneSummary {
    pub fn line(&self) -> String {
        let sizes: Vec<String> = self.sizes.iter().map(|s| s.to_string()).collect();
        format!(
            "validation accuracy {} % over {} repeats (N = {})",
            self.validation_accuracy,
            self.sizes.len(),
            sizes.join(", ")
        )
    }
}

#[derive(Serialize, Deserialize)]
struct StoredRun {
    config: PruningConfig,
    #[serde(flatten)]
    run: PruneRun,
}

fn trace_path(r: usize) -> String {
    format!("traces/repeat_{r:02}.json")
}

/// Runs the pruning repeats on the validation cache and selects one
/// ensemble per repeat.
pub fn cmd_prune(ctx: &Context) -> CliResult<PruneSummary> {
    let cached = ctx.run.verify(Stage::Cache, &ctx.config_sha)?;
    let cache = ScoreCache::load(ctx.run.path(VALIDATION_CACHE))?;
    let cache_sha = cached.outputs[VALIDATION_CACHE].clone();
    let seeds = Seeds::of(&ctx.cfg).prune_repeats;
    let results: Vec<CliResult<(PruneRun, bool)>> = ctx.pool()?.install(|| {
        seeds
            .par_iter()
            .enumerate()
            .map(|(r, &seed)| {
                let config = PruningConfig {
                    seed,
                    ..ctx.cfg.prune.clone()
                };
                let path = ctx.run.path(&trace_path(r));
                if let Ok(stored) = read_json::<StoredRun>(&path) {
                    if stored.config == config && stored.run.cache_sha == cache_sha {
                        return Ok((stored.run, true));
                    }
                }
                let trace = run_pruning(&cache, &config)?;
                let pick = select_ensemble(&trace, config.n_max)?.iteration;
                let selected = trace
                    .records
                    .iter()
                    .position(|rec| rec.iteration == pick)
                    .expect("selected record is in the trace");
                let run = PruneRun {
                    repeat: r,
                    seed,
                    cache_sha: cache_sha.clone(),
                    n_max: config.n_max,
                    selected,
                    trace,
                };
                write_json(&path, &StoredRun { config, run: run.clone() })?;
                Ok((run, false))
            })
            .collect()
    });
    let mut runs = Vec::new();
    let mut reused = 0;
    for r in results {
        let (run, old) = r?;
        reused += usize::from(old);
        runs.push(run);
    }

    let chosen: Vec<_> = runs.iter().map(|r| &r.trace.records[r.selected]).collect();
    let accs: Vec<f64> = chosen.iter().map(|r| 100.0 * r.validation_accuracy).collect();
    let summary = PruneSummary {
        validation_accuracy: MeanStd::of(&accs),
        sizes: chosen.iter().map(|r| r.size).collect(),
        reused,
    };
    let mut table = String::from("repeat\tseed\titeration\tsize\tvalidation\tvalidation_equal_weights\n");
    for (run, rec) in runs.iter().zip(&chosen) {
        table.push_str(&format!(
            "{}\t{}\t{}\t{}\t{:.2}\t{:.2}\n",
            run.repeat,
            run.seed,
            rec.iteration,
            rec.size,
            100.0 * rec.validation_accuracy,
            100.0 * rec.equal_weights_accuracy
        ));
    }
    table.push_str(&format!("mean±std\t-\t-\t-\t{}\t-\n", summary.validation_accuracy));
    write_text(&ctx.run.path(PRUNE_SUMMARY), &table)?;

    let mut outputs: Vec<String> = (0..runs.len()).map(trace_path).collect();
    outputs.push(PRUNE_SUMMARY.into());
    ctx.run
        .write_stamp(Stage::Prune, &ctx.config_sha, cached.outputs, &outputs)?;
    Ok(summary)
}

/// Builds the test cache, the only read of the test split, and writes the
/// report tables and plots.
pub fn cmd_report(ctx: &Context) -> CliResult<Report> {
    let pruned = ctx.run.verify(Stage::Prune, &ctx.config_sha)?;
    ctx.check_data()?;
    let validation = ScoreCache::load(ctx.run.path(VALIDATION_CACHE))?;
    let runs: Vec<PruneRun> = pruned
        .outputs
        .keys()
        .filter(|k| k.starts_with("traces/"))
        .map(|k| read_json::<StoredRun>(&ctx.run.path(k)).map(|s| s.run))
        .collect::<CliResult<_>>()?;

    let splits = ctx.load_splits()?;
    let (test, _) = score_cache(ctx, validation.networks(), SplitTag::Test, &splits, "report")?;
    test.save(ctx.run.path(TEST_CACHE))?;
    ctx.run.append_audit(&splits.audit().entries())?;

    let mut report = build_report(&validation, &test, &runs)?;
    report.test_isolated = test_isolated(&ctx.run.audit()?);
    report.write(&ctx.run.path("report"))?;
    let mut outputs: Vec<String> = REPORT_FILES.iter().map(|f| format!("report/{f}")).collect();
    outputs.push(TEST_CACHE.into());
    ctx.run
        .write_stamp(Stage::Report, &ctx.config_sha, pruned.outputs, &outputs)?;
    Ok(report)
}
