//! Command-line driver: configuration, dispatch, and deterministic outputs.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use args::{Cli, Command};
use clap::Parser;
use config::Config;
use error::{CliError, EXIT_OK, EXIT_USAGE};
use output::OutputSet;
use std::ffi::OsString;
use std::io::Write;
use std::time::Instant;

/// Resolved configuration: file values first, then command-line flags.
pub fn resolve(cmd: &Command) -> Result<Config, CliError> {
    let mut cfg = match &cmd.common().config {
        Some(path) => config::load_config(path)?,
        None => Config::default(),
    };
    cmd.apply(&mut cfg);
    Ok(cfg)
}

fn dispatch(
    cmd: &Command,
    cfg: &Config,
    out: &mut OutputSet,
) -> Result<commands::Summary, CliError> {
    match cmd {
        Command::Shoot(_) => commands::shoot(cfg, out),
        Command::Alpha1(_) => commands::alpha1(cfg, out),
        Command::Alpha0(_) => commands::alpha0(cfg, out),
        Command::AlphaForMbar(_) => commands::alpha_for_mbar(cfg, out),
        Command::MinSpeed(a) => commands::min_speed(cfg, out, a.numeric, a.width),
        Command::PdeRun(_) => commands::pde_run(cfg, out),
        Command::SpeedSweep(_) => commands::speed_sweep(cfg, out),
        Command::Compare(_) => commands::compare(cfg, out),
        Command::ConjectureScan(_) => commands::conjecture_scan(cfg, out),
    }
}

fn execute(cmd: &Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let cfg = resolve(cmd)?;
    let params = serde_json::to_value(&cfg).expect("config serialises");
    let mut out = OutputSet::create(&cmd.common().out)?;
    let start = Instant::now();
    let summary = match dispatch(cmd, &cfg, &mut out) {
        Ok(s) => s,
        Err(e) => {
            if !matches!(e, CliError::Io { .. }) && !out.written().is_empty() {
                let _ = writeln!(
                    stderr,
                    "warning: partial output in {}: {}",
                    out.dir().display(),
                    out.written().join(", ")
                );
            }
            return Err(e);
        }
    };
    out.finish(cmd.name(), params, start.elapsed().as_secs_f64())?;
    for (k, v) in summary {
        let _ = writeln!(stdout, "{k} = {v}");
    }
    Ok(())
}

/// Runs the command line `argv` and returns the process exit code.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(stderr, "{text}")
            } else {
                write!(stdout, "{text}")
            };
            return code;
        }
    };
    match execute(&cli.command, stdout, stderr) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            if let CliError::Io { written, .. } = &e {
                let _ = writeln!(
                    stderr,
                    "warning: partial output; completed files: {}",
                    if written.is_empty() {
                        "none".to_string()
                    } else {
                        written.join(", ")
                    }
                );
            }
            e.exit_code()
        }
    }
}
