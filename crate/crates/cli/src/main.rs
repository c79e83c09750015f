use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use d2nn_cli::{
    cmd_cache, cmd_prepare, cmd_prune, cmd_report, cmd_train, CliResult, Context, Overrides,
    Profile, RunConfig, DATA_DIR_ENV,
};

/// Train, cache, prune and report ensembles of diffractive classifiers.
///
/// Stages share one run directory (`out_dir`) and must run in order.
/// Exit codes: 0 success, 1 I/O, 2 usage, 3 config, 4 data, 5 numeric,
/// 6 stale or missing upstream artifacts.
#[derive(Parser)]
#[command(name = "d2nn", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration; defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Run seed, overriding the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for training and caching [default: all cores].
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true, value_enum)]
    profile: Option<ProfileArg>,
    /// Number of pruning repeats, overriding the config.
    #[arg(long, global = true)]
    repeat: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Load and split the data; write the manifest and frozen config.
    Prepare,
    /// Train every pool member.
    Train,
    /// Score the trained pool on the validation split.
    Cache,
    /// Prune the pool on the validation cache.
    Prune,
    /// Evaluate on the test split and write tables and plots.
    Report,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileArg {
    Paper,
    Desk,
}

fn run(cli: Cli) -> CliResult<()> {
    let overrides = Overrides {
        profile: cli.profile.map(|p| match p {
            ProfileArg::Paper => Profile::Paper,
            ProfileArg::Desk => Profile::Desk,
        }),
        seed: cli.seed,
        repeats: cli.repeat,
        data_dir: std::env::var_os(DATA_DIR_ENV).map(PathBuf::from),
    };
    let cfg = RunConfig::load(cli.config.as_deref(), &overrides)?;
    let ctx = Context::new(cfg, cli.workers);
    match cli.command {
        Command::Prepare => {
            let s = cmd_prepare(&ctx)?;
            println!(
                "prepared {} train / {} validation / {} test images; manifest {}",
                s.sizes.train, s.sizes.validation, s.sizes.test, s.manifest_sha
            );
        }
        Command::Train => {
            let s = cmd_train(&ctx)?;
            for (name, acc) in &s.trained {
                println!("{name}\tbest validation accuracy {:.2}", 100.0 * acc);
            }
            println!(
                "trained {} of {} members ({} reused)",
                s.trained.len(),
                s.members,
                s.resumed
            );
        }
        Command::Cache => {
            let s = cmd_cache(&ctx)?;
            let state = if s.up_to_date { "up to date" } else { "written" };
            println!(
                "validation cache {state}: {} networks x {} samples",
                s.networks, s.samples
            );
        }
        Command::Prune => println!("{}", cmd_prune(&ctx)?.line()),
        Command::Report => {
            for line in cmd_report(&ctx)?.lines() {
                println!("{line}");
            }
            println!("report written to {}", ctx.run.path("report").display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("d2nn: {e}");
            e.exit_code()
        }
    }
}
