use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qkpz_cli::{parse_config, run, ConfigError, Experiment, RunConfig, Status};

const DEFAULTS_HELP: &str = "\
Without --config each subcommand runs its built-in default configuration:
  verify              L=5, alpha=[0.3, 1, 2.7]
  bessel              L=15, alpha=1, time_horizon=0.5, times T/5, 3T/5, T
  collision-converge  L=3, alpha=1, time_horizon=1, dt=[0.1, 0.05, 0.025]
  classical-compare   L=5, alpha=[0, 0.7, 1], time_horizon=1, 100000 seeds
  growth-exponent     L=4096, alpha=0, time_horizon=1000, 200 seeds
  continuum-probe     L=6, alpha=[1, 10, 100]
  trajectory          L=3, alpha=1, time_horizon=1, dt=0.05, 1000 seeds
Default tolerances are listed under `tolerances` in every manifest.

Exit codes: 0 all checks pass, 1 a check failed, 2 config error, 3 runtime error.";

#[derive(Parser, Debug)]
#[command(name = "qkpz", version, about = "Quantum ASEP experiments", after_help = DEFAULTS_HELP)]
struct Cli {
    /// JSON run configuration; its `experiment` must match the subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for CSV files and manifest.json.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Base seed; replaces the base of the configured seed range.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (falls back to QKPZ_THREADS, then all cores).
    #[arg(long, global = true, env = "QKPZ_THREADS")]
    threads: Option<usize>,
    /// Reject unknown config keys.
    #[arg(long, global = true, default_value_t = true, action = clap::ArgAction::Set)]
    strict: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Exact operator identities on interior sites.
    Verify,
    /// Bessel propagator against classical and Lindblad evolution.
    Bessel,
    /// Collision model against the Lindblad oracle for decreasing dt.
    CollisionConverge,
    /// Pointer-state correspondence and Monte Carlo marginals.
    ClassicalCompare,
    /// Height-fluctuation growth exponent of the periodic classical process.
    GrowthExponent,
    /// Uniform-ensemble strength of the edge noise.
    ContinuumProbe,
    /// Sampled pure-state trajectories of the collision model.
    Trajectory,
}

impl Command {
    fn experiment(self) -> Experiment {
        match self {
            Command::Verify => Experiment::Verify,
            Command::Bessel => Experiment::Bessel,
            Command::CollisionConverge => Experiment::CollisionConverge,
            Command::ClassicalCompare => Experiment::ClassicalCompare,
            Command::GrowthExponent => Experiment::GrowthExponent,
            Command::ContinuumProbe => Experiment::ContinuumProbe,
            Command::Trajectory => Experiment::Trajectory,
        }
    }
}

fn load(cli: &Cli) -> Result<RunConfig, ConfigError> {
    let experiment = cli.command.experiment();
    let mut config = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| ConfigError::new("", format!("cannot read {}: {e}", path.display())))?;
            let c = parse_config(&text, cli.strict)?;
            if c.experiment != experiment {
                return Err(ConfigError::new(
                    "experiment",
                    format!("config is for `{}` but the subcommand is `{experiment}`", c.experiment),
                ));
            }
            c
        }
        None => experiment.default_config(),
    };
    if let Some(seed) = cli.seed {
        config = config.with_seed_base(seed);
    }
    Ok(config)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("runtime error: cannot start {n} threads: {e}");
            return ExitCode::from(3);
        }
    }
    let config = match load(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(Status::ConfigError.exit_code() as u8);
        }
    };
    let dir = cli
        .output
        .clone()
        .or_else(|| config.output_path.clone().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(format!("qkpz-out/{}", config.experiment)));
    let outcome = run(&config, &dir);
    let m = &outcome.manifest;
    for c in &m.checks {
        let tag = if c.pass { "PASS" } else { "FAIL" };
        println!("{tag} {} = {:e} ({})", c.name, c.value, c.condition);
    }
    for n in &m.notes {
        println!("note: {n}");
    }
    if let Some(e) = &m.error {
        eprintln!("{e}");
    }
    if let Some(p) = &outcome.manifest_path {
        println!("manifest: {}", p.display());
    }
    ExitCode::from(outcome.exit_code() as u8)
}
