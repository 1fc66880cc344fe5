//! `refphase` command-line driver.
//!
//! Exit codes: 0 success, 1 a check failed (gradient check, diverging or
//! non-finite solver), 2 usage or input error.

mod args;
mod commands;
mod config;

use std::process::ExitCode;

use anyhow::Result;
use clap::Parser;

use args::{Cli, Command, Overlay};
use config::{section, ConfigFile};

fn run_command(command: Command, file: &ConfigFile) -> Result<bool> {
    match command {
        Command::Measure(a) => {
            commands::measure_cmd(a.overlay(section(file.measure.as_ref(), "measure")?))
        }
        Command::MakeRef(a) => {
            commands::make_ref_cmd(a.overlay(section(file.make_ref.as_ref(), "make_ref")?))
        }
        Command::Reconstruct(a) => {
            commands::reconstruct_cmd(a.overlay(section(file.reconstruct.as_ref(), "reconstruct")?))
        }
        Command::TrainRef(a) => {
            commands::train_ref_cmd(a.overlay(section(file.train_ref.as_ref(), "train_ref")?))
        }
        Command::Evaluate(a) => {
            commands::evaluate_cmd(a.overlay(section(file.evaluate.as_ref(), "evaluate")?))
        }
        Command::Gradcheck(a) => {
            commands::gradcheck_cmd(a.overlay(section(file.gradcheck.as_ref(), "gradcheck")?))
        }
    }
}

/// Runs every section of the config file, in pipeline order.
fn run_config(file: &ConfigFile) -> Result<bool> {
    // decode all sections up front so a typo fails before any work is done
    let gradcheck = file
        .gradcheck
        .as_ref()
        .map(|v| section(Some(v), "gradcheck"))
        .transpose()?;
    let make_ref = file
        .make_ref
        .as_ref()
        .map(|v| section(Some(v), "make_ref"))
        .transpose()?;
    let measure = file
        .measure
        .as_ref()
        .map(|v| section(Some(v), "measure"))
        .transpose()?;
    let reconstruct = file
        .reconstruct
        .as_ref()
        .map(|v| section(Some(v), "reconstruct"))
        .transpose()?;
    let train_ref = file
        .train_ref
        .as_ref()
        .map(|v| section(Some(v), "train_ref"))
        .transpose()?;
    let evaluate = file
        .evaluate
        .as_ref()
        .map(|v| section(Some(v), "evaluate"))
        .transpose()?;

    let steps: Vec<Command> = [
        gradcheck.map(Command::Gradcheck),
        make_ref.map(Command::MakeRef),
        measure.map(Command::Measure),
        reconstruct.map(Command::Reconstruct),
        train_ref.map(Command::TrainRef),
        evaluate.map(Command::Evaluate),
    ]
    .into_iter()
    .flatten()
    .collect();
    if steps.is_empty() {
        anyhow::bail!("config file has no sections to run");
    }
    let empty = ConfigFile::default();
    for step in steps {
        if !run_command(step, &empty)? {
            return Ok(false);
        }
    }
    Ok(true)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let failed_check = err.chain().any(|cause| {
        matches!(
            cause.downcast_ref::<refphase::Error>(),
            Some(refphase::Error::Diverged { .. } | refphase::Error::NonFinite { .. })
        )
    });
    if failed_check {
        1
    } else {
        2
    }
}

/// The cause chain, leaving out causes already quoted by their parent.
fn describe(err: &anyhow::Error) -> String {
    let mut text = err.to_string();
    let mut last = text.clone();
    for cause in err.chain().skip(1) {
        let msg = cause.to_string();
        if !last.contains(&msg) {
            text.push_str(": ");
            text.push_str(&msg);
        }
        last = msg;
    }
    text
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "debug" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = (|| -> Result<bool> {
        let file = match &cli.config {
            Some(path) => ConfigFile::load(path)?,
            None => ConfigFile::default(),
        };
        match cli.command {
            Some(command) => run_command(command, &file),
            None if cli.config.is_some() => run_config(&file),
            None => anyhow::bail!("no subcommand given (see --help)"),
        }
    })();
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {}", describe(&err));
            ExitCode::from(exit_code(&err))
        }
    }
}
