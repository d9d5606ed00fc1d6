use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use fractvec_cli::{run, Format, RunOptions};

#[derive(Parser)]
#[command(name = "fractvec", version, about = "Vector-valued invariant measures on [0,1]")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Execute the commands of a scenario file.
    Run {
        scenario: PathBuf,
        /// Directory for exported artifacts.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Solver tolerance, overriding the scenario setting.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, value_enum, default_value_t = FormatArg::Text)]
        format: FormatArg,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Json,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let Cmd::Run {
        scenario,
        out,
        tol,
        format,
    } = cli.command;
    let format = match format {
        FormatArg::Text => Format::Text,
        FormatArg::Json => Format::Json,
    };
    let outcome = run(&scenario, &RunOptions { out, tol, format });
    print!("{}", outcome.report.render(format));
    if let Some(e) = &outcome.error {
        eprintln!("error: {e}");
    }
    ExitCode::from(outcome.exit_code() as u8)
}
