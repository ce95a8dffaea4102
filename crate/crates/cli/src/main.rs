use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;

/// Solve and learn variable-order fractional differential equations.
#[derive(Debug, Parser)]
#[command(name = "vofde", version, about)]
struct Cli {
    /// Output directory (falls back to $VOFDE_OUT, then ./out).
    #[arg(long, global = true, env = "VOFDE_OUT")]
    out: Option<PathBuf>,
    /// Log progress to stderr (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Clone, Default)]
pub struct ConfigArgs {
    /// Flat JSON config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override a config key, e.g. `--set steps=2000` (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one solver and write trajectory.csv and alpha_trace.csv.
    Solve(ConfigArgs),
    /// Print one row of scheme coefficients with its sum check.
    Weights {
        /// Step index n (the row has n + 1 history weights).
        #[arg(long)]
        n: usize,
        #[arg(long)]
        alpha: f64,
        /// l1, abm_p or abm_pc.
        #[arg(long, default_value = "abm_p")]
        scheme: String,
        /// Step size used for the scale.
        #[arg(long, default_value_t = 1.0)]
        h: f64,
    },
    /// Train the Verhulst-Pearl network and order model.
    VpTrain {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Worker threads for sweeps over seeds and grid sizes.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Train a node classifier with fractional graph dynamics.
    GnnTrain {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// `sbm` or `csv:<dir>`.
        #[arg(long)]
        dataset: Option<String>,
        /// `const[:value]`, `grid`, `timenet` or `statenet`.
        #[arg(long)]
        order: Option<String>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Generate a stochastic block model graph as CSV files.
    SbmGen(ConfigArgs),
    /// Run the gradient-check suite; exit 4 on any failure.
    GradCheck(ConfigArgs),
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numeric(String),
    Check(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Check(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) | CliError::Numeric(m) | CliError::Check(m) => f.write_str(m),
        }
    }
}

impl From<vofde::Error> for CliError {
    fn from(e: vofde::Error) -> Self {
        if e.is_divergence() {
            CliError::Numeric(e.to_string())
        } else {
            CliError::Config(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let out = cli.out.unwrap_or_else(|| PathBuf::from("out"));
    let result = match cli.command {
        Command::Solve(cfg) => commands::solve(&cfg, &out),
        Command::Weights { n, alpha, scheme, h } => commands::weights(n, alpha, &scheme, h),
        Command::VpTrain { cfg, jobs } => commands::vp_train(&cfg, &out, jobs),
        Command::GnnTrain { mut cfg, dataset, order, jobs } => {
            if let Some(d) = dataset {
                cfg.overrides.push(format!("dataset={d}"));
            }
            if let Some(o) = order {
                cfg.overrides.push(format!("order={o}"));
            }
            commands::gnn_train(&cfg, &out, jobs)
        }
        Command::SbmGen(cfg) => commands::sbm_gen(&cfg, &out),
        Command::GradCheck(cfg) => commands::grad_check(&cfg),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
