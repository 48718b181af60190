use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hranneal_cli::commands::{self, Exec};
use hranneal_cli::config::RunConfig;
use hranneal_cli::output::OutDir;
use hranneal_cli::CliError;

/// Zeroth-order optimization of approximately convex functions by simulated
/// annealing over Hit-and-Run samples.
#[derive(Parser)]
#[command(name = "hranneal", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw samples from a 1-D target with the rejection sampler.
    Sample1d(Common),
    /// Run Hit-and-Run replicas on the problem's body.
    Walk(Common),
    /// Anneal the problem's objective.
    Anneal(Common),
    /// Anneal through the grid-snapped noisy oracle.
    StochOpt(Common),
    /// Staged optimization on shrinking balls.
    Staged(Common),
    /// Quadrature checks: warm-start norms, Gibbs gaps, β certificates.
    Verify(Common),
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    config: PathBuf,
    /// Overrides `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `out` (default: ./out).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Strand thread pool size; 1 runs strands serially (default: logical cores).
    #[arg(long)]
    threads: Option<usize>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (name, common) = match &cli.command {
        Command::Sample1d(c) => ("sample1d", c),
        Command::Walk(c) => ("walk", c),
        Command::Anneal(c) => ("anneal", c),
        Command::StochOpt(c) => ("stoch-opt", c),
        Command::Staged(c) => ("staged", c),
        Command::Verify(c) => ("verify", c),
    };
    let mut cfg = RunConfig::load(&common.config)?;
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(o) = &common.out {
        cfg.out = Some(o.clone());
    }
    let threads = common
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if threads == 0 {
        return Err(CliError::Config("--threads must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    let exec = Exec { threads };
    let out = OutDir::create(cfg.out.as_deref().unwrap_or("out".as_ref()))?;
    log::info!("{name}: writing to {}", out.path().display());

    match cli.command {
        Command::Sample1d(_) => commands::sample1d(&cfg, &out),
        Command::Walk(_) => commands::walk_cmd(&cfg, &out, exec),
        Command::Anneal(_) => commands::anneal_cmd(&cfg, &out, exec, false),
        Command::StochOpt(_) => commands::anneal_cmd(&cfg, &out, exec, true),
        Command::Staged(_) => commands::staged_cmd(&cfg, &out, exec),
        Command::Verify(_) => commands::verify_cmd(&cfg, &out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hranneal: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
