mod args;
mod commands;

use std::fs;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use concord_core::ConcordError;

use args::{Cli, Command, OutputFormat};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;

fn exit_code(err: &ConcordError) -> u8 {
    match err {
        ConcordError::InvalidConfig(_) | ConcordError::UnsupportedEngine { .. } => EXIT_USAGE,
        _ => EXIT_DATA,
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("CONCORD_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("CONCORD_THREADS must be a positive integer, got `{raw}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| e.to_string())
}

fn run(cli: Cli, argv: Vec<String>) -> Result<(), ConcordError> {
    let outcome = match &cli.command {
        Command::Freq(a) => commands::freq(a, argv)?,
        Command::FreqCurve(a) => commands::freq_curve(a, argv)?,
        Command::Sev(a) => commands::sev(a, argv)?,
        Command::SevCurve(a) => commands::sev_curve(a, argv)?,
        Command::Bench(a) => commands::bench(a, argv)?,
        Command::Synth(a) => commands::synth(a, argv)?,
    };
    let Some((format, out_file)) = outcome.output else {
        return Ok(());
    };
    let rendered = match format {
        OutputFormat::Json => outcome.report.to_json() + "\n",
        OutputFormat::Csv => outcome.report.to_csv(),
        OutputFormat::Text => commands::render_text(&outcome.report),
    };
    match out_file {
        Some(path) => fs::write(path, rendered)?,
        None => print!("{rendered}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .target(env_logger::Target::Stderr)
        .init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp
                | ErrorKind::DisplayVersion
                | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(EXIT_USAGE);
    }

    let argv: Vec<String> = std::env::args().skip(1).collect();
    match run(cli, argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
