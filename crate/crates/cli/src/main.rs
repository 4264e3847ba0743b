use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use svi_conf::config::{load_config, ConfigError, ExperimentConfig};
use svi_conf::experiment::run_replications;
use svi_conf::fixture::{run_fixture, Fixture, FixtureError};
use svi_conf::limiting::{condition_label, law_for, limiting_table};
use svi_conf::output::{write_fixture_outputs, write_limiting_outputs, write_outputs};

const EXIT_CONFIG: u8 = 2;
const EXIT_FAILURE_CAP: u8 = 3;

#[derive(Parser)]
#[command(name = "svi-conf", version, about = "Confidence regions for box-constrained stochastic variational inequalities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replicated coverage study.
    Run {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Regions and intervals for one explicitly given instance.
    Fixture {
        file: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Limiting coverage of the individual intervals by Monte Carlo.
    Limiting {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        samples: Option<usize>,
    },
}

enum Failure {
    Config(ConfigError),
    Cap(f64, f64),
    Other(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        match e.downcast::<ConfigError>() {
            Ok(c) => Failure::Config(c),
            Err(e) => Failure::Other(e),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

fn pool(threads: Option<usize>) -> anyhow::Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(k) = threads {
        b = b.num_threads(k);
    }
    b.build().context("building thread pool")
}

fn load(path: &Path, out: Option<PathBuf>, seed: Option<u64>) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = load_config(path)?;
    if let Some(dir) = out {
        cfg.output_dir = dir;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run { config, out, seed, threads } => {
            let cfg = load(&config, out, seed)?;
            let pool = pool(threads)?;
            let result = pool.install(|| run_replications(&cfg)).context("solving the mean problem")?;
            let files = write_outputs(&cfg.output_dir, &cfg, &result, pool.current_num_threads())
                .context("writing outputs")?;
            println!("z0 = {:?}", result.truth.z0);
            println!("{:>6} {:>6} {:>7} {:>6} {:>6} {:>8}", "n", "alpha", "valid", "sim", "region", "failures");
            for c in &result.report.cells {
                println!(
                    "{:>6} {:>6} {:>7} {:>6} {:>6} {:>8}",
                    c.n,
                    c.alpha,
                    c.valid,
                    c.simultaneous,
                    c.region,
                    c.failures()
                );
            }
            for qq in &result.qq {
                println!("qq slope n={}: {:.3}", qq.n, qq.slope());
            }
            println!("wrote {} files to {}", files.len(), cfg.output_dir.display());
            let worst = result.report.worst_failure_rate();
            if worst > cfg.max_failure_rate {
                return Err(Failure::Cap(worst, cfg.max_failure_rate));
            }
        }
        Command::Fixture { file, out } => {
            let fx = Fixture::load(&file)?;
            let report = run_fixture(&fx).map_err(|e| match e {
                FixtureError::Config(c) => Failure::Config(c),
                other => Failure::Other(other.into()),
            })?;
            write_fixture_outputs(&out, &report).context("writing outputs")?;
            println!("z_n = {:?}", report.solution.z);
            println!("x_n = {:?}", report.solution.x);
            if let Some(q) = &report.shape {
                println!("Q = {q:?}");
            }
            for level in &report.levels {
                for set in [&level.simultaneous, &level.individual] {
                    for j in 0..set.dim() {
                        println!(
                            "alpha={} z{} {}: [{:.4}, {:.4}]",
                            level.alpha,
                            j + 1,
                            set.kind.short_name(),
                            set.lower[j],
                            set.upper[j]
                        );
                    }
                }
                if let Some(inside) = level.z0_in_region {
                    println!("alpha={} z0 in region: {inside}", level.alpha);
                }
            }
        }
        Command::Limiting { config, out, seed, threads, samples } => {
            let mut cfg = load(&config, out, seed)?;
            if let Some(s) = samples {
                cfg.limiting.samples = s;
                cfg.validate()?;
            }
            let pool = pool(threads)?;
            let law = law_for(&cfg)?;
            let rows = pool.install(|| limiting_table(&cfg, &law)).map_err(anyhow::Error::from)?;
            write_limiting_outputs(&cfg.output_dir, &cfg, &rows, pool.current_num_threads())
                .context("writing outputs")?;
            for r in &rows {
                println!(
                    "alpha={} z{} cells={} condition={} coverage={:.5} (s.e. {:.1e})",
                    r.alpha,
                    r.coord + 1,
                    r.cells,
                    condition_label(r.condition),
                    r.coverage,
                    r.std_error
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Cap(worst, cap)) => {
            eprintln!("failure rate {worst:.3} exceeds max_failure_rate {cap}");
            ExitCode::from(EXIT_FAILURE_CAP)
        }
        Err(Failure::Other(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
