use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use matchlab::{run, ConfigError, Experiment, PartialConfig, RunError};
use matchlab_core::Error;

/// Numerical experiments on random Euclidean matching.
///
/// Exit status: 0 when every assertion passes, 1 when one fails, 2 on
/// invalid input.
#[derive(Parser, Debug)]
#[command(version, about)]
struct Cli {
    /// Experiment to run (same as --experiment).
    #[arg(value_enum)]
    name: Option<Experiment>,

    #[arg(long, value_enum)]
    experiment: Option<Experiment>,

    /// JSON config file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,

    #[arg(long)]
    d: Option<usize>,

    #[arg(long)]
    p: Option<f64>,

    /// Comma-separated L (or n) schedule.
    #[arg(long, value_delimiter = ',')]
    scales: Option<Vec<f64>>,

    #[arg(long)]
    replicates: Option<usize>,

    #[arg(long)]
    seed: Option<u64>,

    #[arg(long)]
    grid_per_unit: Option<usize>,

    #[arg(long)]
    epsilon: Option<f64>,

    #[arg(long)]
    theta: Option<f64>,

    /// Output directory for <experiment>.csv and <experiment>.json.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    jobs: Option<usize>,
}

fn resolve(cli: &Cli) -> Result<matchlab::ExperimentConfig, ConfigError> {
    if let (Some(a), Some(b)) = (cli.name, cli.experiment) {
        if a != b {
            return Err(ConfigError::new(
                "experiment",
                format!("positional {a} conflicts with --experiment {b}"),
            ));
        }
    }
    let file = match &cli.config {
        Some(path) => PartialConfig::from_file(path)?,
        None => PartialConfig::default(),
    };
    let flags = PartialConfig {
        experiment: cli.name.or(cli.experiment),
        d: cli.d,
        p: cli.p,
        scales: cli.scales.clone(),
        replicates: cli.replicates,
        master_seed: cli.seed,
        grid_per_unit: cli.grid_per_unit,
        epsilon: cli.epsilon,
        theta: cli.theta,
        output_path: cli.out.clone(),
    };
    file.overridden_by(flags).resolve()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match resolve(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("matchlab: {e}");
            return ExitCode::from(2);
        }
    };
    if cli.jobs == Some(0) {
        eprintln!("matchlab: {}", ConfigError::new("jobs", "must be positive"));
        return ExitCode::from(2);
    }
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs.unwrap_or(0))
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            eprintln!("matchlab: cannot start worker pool: {e}");
            return ExitCode::from(2);
        }
    };
    match pool.install(|| run(&config)) {
        Ok(summary) => {
            for a in &summary.assertions {
                println!(
                    "{} {}: {}",
                    if a.passed { "PASS" } else { "FAIL" },
                    a.name,
                    a.detail
                );
            }
            if summary.infeasible_replicates > 0 {
                println!("infeasible replicates: {}", summary.infeasible_replicates);
            }
            println!(
                "wrote {} and {}",
                config.csv_path().display(),
                config.json_path().display()
            );
            if summary.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("matchlab: {e}");
            match e {
                RunError::Io(_) | RunError::Core(Error::Infeasible(_)) => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}
