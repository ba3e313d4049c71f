use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use weakval_cli::config::{self, parse_override, Override};
use weakval_cli::{execute, CliError, Format, Report, Result, ScenarioName, Task};

/// Weak values, pointer couplings and Bures-angle distances.
///
/// Parameters come from `--config FILE` (JSON) with `--param key=value`
/// overrides on top. The table goes to `--out` or stdout; a summary and the
/// PASS/FAIL lines go to stderr. Exit status is 0 when every check passes, 1
/// on a failed check or computation error, 2 on a usage error.
#[derive(Debug, Parser)]
#[command(name = "weakval", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// JSON parameter file: a bare object or {"scenario": ..., "parameters": {...}}.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override one parameter; dotted keys reach nested objects. Repeatable.
    #[arg(long = "param", short = 'p', global = true, value_name = "KEY=VALUE", value_parser = parse_override)]
    params: Vec<Override>,
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Write the artifact here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a named scenario and its checks.
    Scenario {
        /// Optional when the config file names the scenario.
        #[arg(value_enum)]
        name: Option<ScenarioName>,
    },
    /// List scenario names.
    Scenarios,
    /// Weak value of an observable for a pure, generalized or mixed two-state vector.
    WeakValue,
    /// Couple a pointer to a system and report the resulting pointer.
    Couple,
    /// Bures angle between two states, or from a visibility.
    Bures,
    /// Distance-versus-epsilon sweep with scaling fits.
    Sweep,
    /// Protocol constructions.
    Protocol {
        #[command(subcommand)]
        which: Protocol,
    },
}

#[derive(Debug, Subcommand)]
enum Protocol {
    /// Mixed two-state vector from three ancillas, checked against the trace formula.
    MixedTsv,
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("WEAKVAL_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.parse().map_err(|_| {
        CliError::usage(format!(
            "WEAKVAL_THREADS must be a positive integer, got `{raw}`"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::usage(e.to_string()))
}

fn emit(report: &Report, g: &Global) -> Result<()> {
    match &g.out {
        Some(path) => {
            let io_err = |source| CliError::Io {
                path: path.clone(),
                source,
            };
            let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
            report.write(g.format, &mut w)?;
            w.flush().map_err(io_err)
        }
        None => {
            let mut w = io::stdout().lock();
            report.write(g.format, &mut w)?;
            w.flush().map_err(|e| CliError::Output(e.to_string()))
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    configure_threads()?;
    let loaded = config::load(cli.global.config.as_deref(), &cli.global.params)?;
    let task = match cli.command {
        Command::Scenarios => {
            for n in ScenarioName::ALL {
                println!("{}", n.as_str());
            }
            return Ok(true);
        }
        Command::Scenario { name } => {
            let from_file = loaded
                .scenario
                .as_deref()
                .map(|s| {
                    ScenarioName::parse(s)
                        .ok_or_else(|| CliError::usage(format!("unknown scenario `{s}`")))
                })
                .transpose()?;
            match (name, from_file) {
                (Some(a), Some(b)) if a != b => {
                    return Err(CliError::usage(format!(
                        "config names scenario `{}` but `{}` was requested",
                        b.as_str(),
                        a.as_str()
                    )))
                }
                (Some(a), _) | (None, Some(a)) => Task::Scenario(a),
                (None, None) => {
                    return Err(CliError::usage(
                        "no scenario named on the command line or in the config",
                    ))
                }
            }
        }
        other => {
            if let Some(s) = &loaded.scenario {
                return Err(CliError::usage(format!(
                    "config names scenario `{s}`; use `weakval scenario`"
                )));
            }
            match other {
                Command::WeakValue => Task::WeakValue,
                Command::Couple => Task::Couple,
                Command::Bures => Task::Bures,
                Command::Sweep => Task::Sweep,
                Command::Protocol {
                    which: Protocol::MixedTsv,
                } => Task::MixedTsvProtocol,
                Command::Scenario { .. } | Command::Scenarios => unreachable!(),
            }
        }
    };
    let report = execute(task, &loaded.parameters, cli.global.seed)?;
    eprint!("{}", report.summary_text());
    emit(&report, &cli.global)?;
    Ok(report.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("weakval: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
