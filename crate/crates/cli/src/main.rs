use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

use commands::CliError;

/// Parametric capacitance of a driven double quantum dot: simulation,
/// trace analysis and parameter fitting.
#[derive(Debug, Parser)]
#[command(name = "qicap", version)]
struct Cli {
    #[command(flatten)]
    common: Common,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// key = value configuration file; defaults are used for missing keys
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output file; its parent directory must exist
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Seed for the fit restarts (overrides fit_seed)
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// More log output (repeat for debug)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Single-frequency trace of the normalised capacitance plus a summary
    Simulate,
    /// One trace per configured frequency, ascending
    Sweep,
    /// Fourier, envelope or peak-to-peak analysis of a trace file
    Analyze {
        #[arg(long, value_enum)]
        mode: Mode,
        /// Trace CSV from simulate/sweep, or measured phase CSV
        input: PathBuf,
    },
    /// Fit the masked parameters to measured traces
    Fit {
        /// Measured phase CSV, or a trace CSV from simulate/sweep
        input: PathBuf,
        /// Free parameters, comma separated (overrides fit_mask)
        #[arg(long)]
        mask: Option<String>,
    },
    /// Run the numerical cross-checks
    Verify,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Fourier,
    Envelope,
    P2p,
}

impl Mode {
    fn name(self) -> &'static str {
        match self {
            Mode::Fourier => "fourier",
            Mode::Envelope => "envelope",
            Mode::P2p => "p2p",
        }
    }
}

fn check_out(out: Option<&Path>) -> Result<(), CliError> {
    let Some(path) = out else { return Ok(()) };
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => return Ok(()),
    };
    if parent.is_dir() {
        Ok(())
    } else {
        Err(CliError::Core(qicap::Error::Io {
            path: path.to_path_buf(),
            source: std::io::Error::new(
                std::io::ErrorKind::NotFound,
                format!("output directory {} does not exist", parent.display()),
            ),
        }))
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let c = &cli.common;
    check_out(c.out.as_deref())?;
    let config = match &c.config {
        Some(p) => qicap::io::load_config(p)?,
        None => qicap::io::Config::default(),
    };
    let out = c.out.as_deref();
    match cli.command {
        Command::Simulate => commands::simulate(&config, out),
        Command::Sweep => commands::sweep(&config, out),
        Command::Analyze { mode, input } => commands::analyze(&config, mode.name(), &input, out),
        Command::Fit { input, mask } => {
            commands::fit(&config, &input, mask.as_deref(), c.seed, out)
        }
        Command::Verify => commands::verify(out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = match cli.common.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qicap: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
