use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tscf_cli::commands::{evaluate, explain, fit, select, synth};

/// Pareto-optimal counterfactual explanations for time-series classifiers.
#[derive(Parser)]
#[command(name = "tscf", version)]
struct Cli {
    /// More log output (-v info, -vv debug). RUST_LOG takes precedence.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a reference classifier or the linear outlier scorer.
    Fit(fit::FitArgs),
    /// Compute Pareto fronts of counterfactuals for test instances.
    Explain(explain::ExplainArgs),
    /// Pick the utility-maximizing member of a front.
    Select(select::SelectArgs),
    /// Score explained fronts (and optionally the full-swap baseline).
    Evaluate(evaluate::EvaluateArgs),
    #[command(hide = true)]
    GenSynth(synth::SynthArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = match &cli.command {
        Command::Fit(a) => fit::run(a),
        Command::Explain(a) => explain::run(a),
        Command::Select(a) => select::run(a),
        Command::Evaluate(a) => evaluate::run(a),
        Command::GenSynth(a) => synth::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
