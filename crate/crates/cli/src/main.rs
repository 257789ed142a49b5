use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use noisy_is_cli::config::Format;
use noisy_is_cli::{run, Command, Overrides};

#[derive(Parser)]
#[command(
    name = "noisy-is",
    version,
    about = "Importance sampling with noisy weights: estimates, replicate studies and oracle moments"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one estimator and print its report.
    Estimate {
        #[command(flatten)]
        common: Common,
        /// Also compute the oracle variance budget.
        #[arg(long)]
        budget: bool,
    },
    /// Replicate study over channels and sample sizes.
    Study {
        #[command(flatten)]
        common: Common,
    },
    /// Lognormal gamma sweep of empirical against predicted variance.
    Sweep {
        #[command(flatten)]
        common: Common,
    },
    /// Oracle mean and variance budget.
    Oracle {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    config: PathBuf,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Output file, `-` for standard output.
    #[arg(long)]
    output: Option<String>,
    /// Worker threads; output does not depend on this.
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, common) = match cli.command {
        Cmd::Estimate { common, budget } => (Command::Estimate { budget }, common),
        Cmd::Study { common } => (Command::Study, common),
        Cmd::Sweep { common } => (Command::Sweep, common),
        Cmd::Oracle { common } => (Command::Oracle, common),
    };
    let overrides = Overrides {
        format: common.format.map(|f| match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }),
        output: common.output,
        threads: common.threads,
    };
    match run(command, &common.config, &overrides) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
