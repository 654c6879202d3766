use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use wfeval::config::RunConfig;
use wfeval::synth::{write_synth, SynthSpec};

#[derive(Parser)]
#[command(name = "wfeval", version, about = "Walk-forward ranking evaluation for classical and LLM forecasters")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the walk-forward pipeline described by a config file, then build the report.
    Run {
        config: PathBuf,
        /// Skip report generation.
        #[arg(long)]
        no_report: bool,
    },
    /// Rebuild tables and figures from a finished run directory.
    Report { run_dir: PathBuf },
    /// Generate a synthetic panel with planted coefficients.
    Synth { spec: PathBuf, out: PathBuf },
    /// Re-check stored outputs of a run directory.
    Verify { run_dir: PathBuf },
}

fn report(run_dir: &std::path::Path) -> anyhow::Result<bool> {
    let out = wfeval::report::cmd_report(run_dir).context("building report")?;
    println!("report: {} files in {}", out.files.len(), out.dir.display());
    for g in &out.gaps {
        println!("gap: {g}");
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match dispatch(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Run { config, no_report } => {
            let cfg = RunConfig::load(&config).with_context(|| format!("loading {}", config.display()))?;
            let summary = wfeval::pipeline::run_walkforward(&cfg)?;
            println!("run: {} windows, {} failed, output {}", summary.windows, summary.failed.len(), summary.run_dir.display());
            for w in &summary.warnings {
                println!("warning: {w}");
            }
            for (id, msg) in &summary.failed {
                eprintln!("failed: {id}: {msg}");
            }
            if !no_report {
                report(&summary.run_dir)?;
            }
            Ok(summary.is_success())
        }
        Command::Report { run_dir } => report(&run_dir),
        Command::Synth { spec, out } => {
            let text = std::fs::read_to_string(&spec).with_context(|| format!("reading {}", spec.display()))?;
            let s = SynthSpec::parse(&text)?;
            let panel = write_synth(&s, &out)?;
            println!(
                "synth: {} tickers x {} dates written to {}",
                panel.tickers.len(),
                panel.calendar.len(),
                out.display()
            );
            Ok(true)
        }
        Command::Verify { run_dir } => {
            let rep = wfeval::verify::cmd_verify(&run_dir)?;
            for v in &rep.violations {
                println!("violation: {v}");
            }
            println!("verify: {} checks, {} violations", rep.checks, rep.violations.len());
            Ok(rep.is_clean())
        }
    }
}
