//! `tilt-sense`: simulate, fit once, calibrate, then sweep sensitivity
//! parameters without touching the data again.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use tiltsense::{Error, ErrorClass};

pub const THREADS_ENV: &str = "TILT_SENSE_THREADS";

#[derive(Parser, Debug)]
#[command(
    name = "tilt-sense",
    version,
    about = "Sensitivity analysis for unmeasured confounding via tilted outcome models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw a synthetic dataset from a named generator.
    Simulate {
        #[arg(long)]
        dgp: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Also write the hidden potential outcomes as JSON.
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Fit an observed-outcome model and bootstrap replicates.
    Fit {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "em:2")]
        model: String,
        #[arg(long, default_value_t = 50)]
        boot: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        workers: Workers,
        #[arg(long)]
        out: PathBuf,
    },
    /// Validate an externally produced fit file and store it canonically.
    Ingest {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Benchmark sensitivity magnitudes against observed covariates.
    Calibrate {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        fit: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        covars: Vec<String>,
        #[arg(long = "rho-star", value_delimiter = ',', default_value = "0.01")]
        rho_star: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate estimands over a grid of sensitivity parameters.
    Sweep {
        #[arg(long)]
        fit: PathBuf,
        #[arg(long, default_value = "logistic")]
        selection: String,
        #[arg(long)]
        grid: String,
        #[command(flatten)]
        estimands: EstimandArgs,
        #[command(flatten)]
        workers: Workers,
        #[arg(long)]
        out: PathBuf,
    },
    /// Latent-class bounds at the infinite odds-ratio corners.
    Bounds {
        #[arg(long)]
        fit: PathBuf,
        #[command(flatten)]
        estimands: EstimandArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Overlap, integral-constraint and propriety diagnostics at one point.
    Check {
        #[arg(long)]
        fit: PathBuf,
        #[arg(long, default_value = "logistic")]
        selection: String,
        #[arg(long)]
        point: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct EstimandArgs {
    #[arg(long, value_delimiter = ',', default_value = "ate")]
    estimand: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "0.25,0.5,0.75")]
    q: Vec<f64>,
    #[arg(long, default_value_t = 0.95)]
    level: f64,
}

#[derive(Args, Debug)]
struct Workers {
    /// Worker threads; TILT_SENSE_THREADS takes precedence.
    #[arg(long)]
    workers: Option<usize>,
}

impl Workers {
    fn resolve(&self) -> Result<usize, CliError> {
        if let Ok(v) = std::env::var(THREADS_ENV) {
            return v.trim().parse::<usize>().ok().filter(|&n| n >= 1).ok_or_else(|| {
                CliError::field(
                    Error::InvalidInput(format!("{THREADS_ENV}='{v}' is not a positive integer")),
                    "workers",
                )
            });
        }
        match self.workers {
            Some(0) => Err(CliError::field(Error::InvalidInput("--workers must be at least 1".into()), "workers")),
            Some(n) => Ok(n),
            None => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
        }
    }
}

/// Engine error plus the argument it is about, if any.
#[derive(Debug)]
pub struct CliError {
    pub error: Error,
    pub field: Option<&'static str>,
    pub path: Option<PathBuf>,
}

impl CliError {
    pub fn field(error: Error, field: &'static str) -> Self {
        Self { error, field: Some(field), path: None }
    }

    pub fn at(mut self, path: &std::path::Path) -> Self {
        self.path = Some(path.to_path_buf());
        self
    }
}

impl From<Error> for CliError {
    fn from(error: Error) -> Self {
        Self { error, field: None, path: None }
    }
}

fn exit_code(class: ErrorClass) -> u8 {
    match class {
        ErrorClass::Usage => 2,
        ErrorClass::Data => 3,
        ErrorClass::Numeric => 4,
    }
}

fn report(e: &CliError) {
    let mut v = json!({ "error": e.error.code(), "message": e.error.to_string() });
    if let Some(f) = e.field {
        v["field"] = json!(f);
    }
    if let Some(p) = &e.path {
        v["path"] = json!(p.display().to_string());
    }
    eprintln!("{v}");
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("{}", json!({ "error": "USAGE", "message": e.render().to_string().trim() }));
            return ExitCode::from(2);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report(&e);
            ExitCode::from(exit_code(e.error.class()))
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Simulate { dgp, n, seed, out, truth } => commands::simulate(&dgp, n, seed, &out, truth.as_deref()),
        Command::Fit { input, model, boot, seed, workers, out } => {
            commands::fit(&input, &model, boot, seed, workers.resolve()?, &out)
        }
        Command::Ingest { input, out } => commands::ingest(&input, &out),
        Command::Calibrate { data, fit, covars, rho_star, out } => {
            commands::calibrate(&data, &fit, &covars, &rho_star, &out)
        }
        Command::Sweep { fit, selection, grid, estimands, workers, out } => {
            let est = commands::estimand_list(&estimands.estimand, &estimands.q)?;
            commands::sweep(&fit, &selection, &grid, &est, estimands.level, workers.resolve()?, &out)
        }
        Command::Bounds { fit, estimands, out } => {
            let est = commands::estimand_list(&estimands.estimand, &estimands.q)?;
            commands::bounds(&fit, &est, estimands.level, &out)
        }
        Command::Check { fit, selection, point, out } => commands::check(&fit, &selection, &point, out.as_deref()),
    }
}
