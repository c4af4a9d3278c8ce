//! `svj`: prices, densities, simulations and validation reports for the
//! exponential-Vasicek stochastic-volatility jump-diffusion model.
//!
//! Exit codes: 0 success, 2 invalid input or configuration, 3 numerical
//! failure, 4 I/O failure.

mod commands;
mod config;
mod error;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use commands::{Artifact, ReportKind};
use config::{CommandName, Format, Overrides, RunConfig};
use error::CliError;

/// Overrides the directory outputs are written to.
const OUTPUT_DIR_ENV: &str = "SVJ_OUTPUT_DIR";

#[derive(Parser, Debug)]
#[command(name = "svj", version, about = "Stochastic-volatility jump-diffusion pricing toolkit")]
struct Cli {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Monte Carlo seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Thread count for simulation and strike fan-out.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Monte Carlo path count.
    #[arg(long, global = true)]
    paths: Option<usize>,
    /// Time steps per year of horizon.
    #[arg(long, global = true)]
    steps_per_year: Option<usize>,
    /// Absolute price tolerance of the Fourier quadrature.
    #[arg(long, global = true)]
    abs_tol: Option<f64>,
    /// Output file (reports: output directory).
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Rescale Kou branch probabilities to sum to one before validation.
    #[arg(long, global = true)]
    renormalize_kou: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// European call (or put) price by Fourier inversion.
    Price {
        #[arg(long, value_enum, default_value_t = Kind::Call)]
        kind: Kind,
        /// Strike(s); defaults to the configured market strike.
        #[arg(long = "strike")]
        strikes: Vec<f64>,
    },
    /// Density of the log-return x_T - x0 on an even grid.
    Density {
        #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
        from: f64,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        to: f64,
        #[arg(long, default_value_t = 201)]
        points: usize,
    },
    /// Propagator F(p, T), jump exponent U(p, T) and their product on a real p grid.
    Charfn {
        #[arg(long, default_value_t = -20.0, allow_hyphen_values = true)]
        from: f64,
        #[arg(long, default_value_t = 20.0, allow_hyphen_values = true)]
        to: f64,
        #[arg(long, default_value_t = 41)]
        points: usize,
        /// Horizon; defaults to the configured maturity.
        #[arg(long)]
        t: Option<f64>,
    },
    /// Jump compensator and exponent U(p, T).
    Jumps {
        #[arg(long, default_value_t = -20.0, allow_hyphen_values = true)]
        from: f64,
        #[arg(long, default_value_t = 20.0, allow_hyphen_values = true)]
        to: f64,
        #[arg(long, default_value_t = 41)]
        points: usize,
        #[arg(long)]
        t: Option<f64>,
    },
    /// Monte Carlo call price, or a terminal log-return histogram.
    Mc {
        /// Emit a histogram with this many bins instead of a price.
        #[arg(long)]
        histogram: Option<usize>,
    },
    /// Numerical self-checks.
    Validate {
        #[command(subcommand)]
        check: ValidateCheck,
    },
    /// Validation reports written as Markdown with a CSV twin.
    Report {
        #[arg(value_enum)]
        which: ReportKind,
    },
}

#[derive(Subcommand, Debug)]
enum ValidateCheck {
    /// Backward-equation residual of the jump-free density.
    Kbe {
        #[arg(long, default_value_t = 41)]
        points: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Kind {
    Call,
    Put,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    Overrides {
        seed: cli.seed,
        workers: cli.workers,
        paths: cli.paths,
        steps_per_year: cli.steps_per_year,
        abs_tol: cli.abs_tol,
        output: cli.output.clone(),
        format: cli.format,
    }
    .apply(&mut cfg);
    if cli.renormalize_kou {
        cfg.jump_spec = cfg.jump_spec.clone().renormalized();
    }
    if let Some(n) = cfg.paths.and_then(|p| p.workers) {
        // strike fan-out runs on the global pool; ignore a second initialization
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }

    let command = match (cli.command, cfg.command) {
        (Some(c), _) => c,
        (None, Some(name)) => default_command(name)?,
        (None, None) => return Err(CliError::Config("no command given on the command line or in `command`".into())),
    };
    let is_report = matches!(command, Command::Report { .. });
    let format = cfg.output.format.unwrap_or(if is_report { Format::Md } else { Format::Json });
    let maturity = || cfg.market.map(|m| m.t).unwrap_or(1.0);

    let artifact = match command {
        Command::Price { kind, strikes } => commands::price(&cfg, kind == Kind::Put, &strikes, format)?,
        Command::Density { from, to, points } => commands::density(&cfg, &commands::grid(from, to, points)?, format)?,
        Command::Charfn { from, to, points, t } => {
            commands::charfn(&cfg, &commands::grid(from, to, points)?, t.unwrap_or_else(maturity), format)?
        }
        Command::Jumps { from, to, points, t } => {
            commands::jumps(&cfg, &commands::grid(from, to, points)?, t.unwrap_or_else(maturity), format)?
        }
        Command::Mc { histogram } => commands::mc(&cfg, histogram, format)?,
        Command::Validate {
            check: ValidateCheck::Kbe { points },
        } => commands::validate_kbe(points, format)?,
        Command::Report { which } => commands::report(&cfg, which, format)?,
    };
    emit(&artifact, cfg.output.path.as_deref(), is_report)
}

fn default_command(name: CommandName) -> Result<Command, CliError> {
    Ok(match name {
        CommandName::Price => Command::Price {
            kind: Kind::Call,
            strikes: Vec::new(),
        },
        CommandName::Density => Command::Density {
            from: -1.0,
            to: 1.0,
            points: 201,
        },
        CommandName::Charfn => Command::Charfn {
            from: -20.0,
            to: 20.0,
            points: 41,
            t: None,
        },
        CommandName::Jumps => Command::Jumps {
            from: -20.0,
            to: 20.0,
            points: 41,
            t: None,
        },
        CommandName::Mc => Command::Mc { histogram: None },
        CommandName::Validate | CommandName::Report => {
            return Err(CliError::Config(
                "`validate` and `report` need a target; pass it as a subcommand".into(),
            ))
        }
    })
}

fn extension(format: Format) -> &'static str {
    match format {
        Format::Json => "json",
        Format::Csv => "csv",
        Format::Md => "md",
    }
}

fn resolve(path: &Path) -> PathBuf {
    match std::env::var_os(OUTPUT_DIR_ENV) {
        Some(dir) if path.is_relative() => Path::new(&dir).join(path),
        _ => path.to_path_buf(),
    }
}

fn write(path: &Path, body: &str) -> Result<(), CliError> {
    let io = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(io)?;
    }
    std::fs::write(path, body).map_err(io)
}

/// Plain commands print to stdout unless an output file is given. Reports
/// always land in a directory (the output path, the environment override or
/// the working directory) and echo their primary document.
fn emit(artifact: &Artifact, output: Option<&Path>, is_report: bool) -> Result<(), CliError> {
    if is_report {
        let dir = match output {
            Some(p) => resolve(p),
            None => std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(".")),
        };
        let primary = dir.join(format!("{}.{}", artifact.name, extension(artifact.format)));
        write(&primary, &artifact.body)?;
        if let Some(csv) = &artifact.companion_csv {
            write(&dir.join(format!("{}.csv", artifact.name)), csv)?;
        }
        print!("{}", artifact.body);
        return Ok(());
    }
    match output {
        Some(p) => write(&resolve(p), &artifact.body),
        None => match std::env::var_os(OUTPUT_DIR_ENV) {
            Some(dir) => write(
                &Path::new(&dir).join(format!("{}.{}", artifact.name, extension(artifact.format))),
                &artifact.body,
            ),
            None => {
                print!("{}", artifact.body);
                Ok(())
            }
        },
    }
}
