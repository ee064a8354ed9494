//! The `ckuramoto` command line: argument parsing, dispatch and exit codes.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{
    bench_rows, cmd_bench, cmd_classical, cmd_compare, cmd_reduce, cmd_simulate, BenchRow, ClassicalReport,
    ComparisonReport, RunContext, RunManifest,
};
pub use config::{ConfigError, ScenarioConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_TOLERANCE: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("numerical failure: {0}")]
    Numerical(#[from] crate::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("comparison outside tolerance (position error {:e})", .0.position_error)]
    Tolerance(Box<ComparisonReport>),
}

impl CliError {
    fn config(msg: &str) -> Self {
        CliError::Config(ConfigError(msg.to_string()))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Numerical(_) | CliError::Io(_) => EXIT_NUMERICAL,
            CliError::Tolerance(_) => EXIT_TOLERANCE,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "ckuramoto", version, about = "Generalized Kuramoto simulation and conformal reduction")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the full N-body system.
    Simulate(RunArgs),
    /// Integrate the reduced (R, w) system and reconstruct the bodies.
    Reduce(RunArgs),
    /// Run both pipelines and check them against the configured tolerances.
    Compare(RunArgs),
    /// Time full and reduced steps over a list of body counts.
    Bench(RunArgs),
    /// Compare the classical circle model with its (ζ, w) reduction.
    Classical(RunArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides `out_dir` from the config; defaults to `out`.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Overrides `seed` from the config.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub quiet: bool,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Reduce(_) => "reduce",
            Command::Compare(_) => "compare",
            Command::Bench(_) => "bench",
            Command::Classical(_) => "classical",
        }
    }

    fn args(&self) -> &RunArgs {
        match self {
            Command::Simulate(a) | Command::Reduce(a) | Command::Compare(a) | Command::Bench(a) | Command::Classical(a) => a,
        }
    }
}

/// Runs one command and returns the process exit code. The manifest is
/// written whenever an output directory can be determined.
pub fn run(cli: &Cli) -> i32 {
    let args = cli.command.args();
    let name = cli.command.name();
    let cfg = ScenarioConfig::load(&args.config).map(|mut c| {
        if let Some(seed) = args.seed {
            c.seed = seed;
        }
        c
    });
    let out_dir = args
        .out_dir
        .clone()
        .or_else(|| cfg.as_ref().ok().and_then(|c| c.out_dir.clone()))
        .unwrap_or_else(|| PathBuf::from("out"));
    if let Err(e) = std::fs::create_dir_all(&out_dir) {
        eprintln!("error: {}: {e}", out_dir.display());
        return EXIT_NUMERICAL;
    }
    let mut ctx = commands::context(&out_dir, name, cfg.as_ref().ok());

    let result = match &cfg {
        Err(e) => Err(CliError::Config(ConfigError(e.0.clone()))),
        Ok(cfg) => match &cli.command {
            Command::Simulate(_) => cmd_simulate(cfg, &mut ctx).map(|()| "trajectory written".to_string()),
            Command::Reduce(_) => cmd_reduce(cfg, &mut ctx).map(|()| "reduced trajectory written".to_string()),
            Command::Compare(_) => cmd_compare(cfg, &mut ctx).map(|r| {
                format!(
                    "pass: position error {:e}, inner-product drift {:e}",
                    r.position_error, r.inner_product_drift
                )
            }),
            Command::Bench(_) => cmd_bench(cfg, &mut ctx).map(|rows| {
                rows.iter()
                    .map(|r| format!("{:>8} N={:<6} {:.3e} s/step", r.system, r.body_count, r.median_step_seconds))
                    .collect::<Vec<_>>()
                    .join("\n")
            }),
            Command::Classical(_) => cmd_classical(cfg, &mut ctx).map(|r| {
                format!("circle error {:e} ({})", r.circle_error, if r.pass { "pass" } else { "fail" })
            }),
        },
    };

    let code = match &result {
        Ok(_) => EXIT_OK,
        Err(e) => e.exit_code(),
    };
    ctx.manifest.status = match code {
        EXIT_OK => "ok",
        EXIT_CONFIG => "config_error",
        EXIT_TOLERANCE => "tolerance_failure",
        _ => "numerical_failure",
    }
    .into();
    if let Err(e) = &result {
        ctx.manifest.message.get_or_insert_with(|| e.to_string());
    }
    if let Err(e) = ctx.write_manifest() {
        eprintln!("error: manifest: {e}");
    }
    match result {
        Ok(summary) if !args.quiet => println!("{summary}"),
        Ok(_) => {}
        Err(e) => eprintln!("error: {e}"),
    }
    code
}
