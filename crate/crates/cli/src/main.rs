//! `pricepref`: validate data, generate synthetic sets, train the baseline,
//! re-rank, evaluate and sweep `(alpha, beta)`.
//!
//! Exit status: 0 on success, 1 on a validation or domain failure, 2 when an
//! input file is missing, unreadable or malformed.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use commands::GenerateArgs;
use config::RunConfig;

#[derive(Parser, Debug)]
#[command(
    name = "pricepref",
    version,
    about = "Profit- and price-aware re-ranking of recommendations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug)]
struct Common {
    /// Key-value config file; flags override its entries
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    run: RunConfig,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check an interactions/catalog pair and list every violation
    Validate(Common),
    /// Write a synthetic dataset with planted price segments
    Generate {
        #[command(flatten)]
        common: Common,
        /// Generator config file (TOML); overrides --preset
        #[arg(long)]
        gen_config: Option<PathBuf>,
        /// ds1 or ds2
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        customers: Option<usize>,
        #[arg(long)]
        items: Option<usize>,
    },
    /// Split, fit the baseline and write model.json + manifest.json to --out
    Train(Common),
    /// Print the re-ranked list for one customer as CSV
    Recommend {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        customer: String,
        /// Number of items to list
        #[arg(long, default_value_t = 10)]
        n: usize,
        /// Rank by the baseline score alone
        #[arg(long)]
        baseline_only: bool,
    },
    /// Metrics for one (alpha, beta) on the held-out split
    Evaluate(Common),
    /// Metrics over the (alpha, beta) grid
    Sweep(Common),
}

fn run(cli: Cli) -> pricepref::Result<bool> {
    let resolve = |c: &Common| RunConfig::resolve(c.config.as_deref(), &c.run);
    match cli.command {
        Command::Validate(c) => commands::validate(&resolve(&c)?),
        Command::Generate {
            common,
            gen_config,
            preset,
            customers,
            items,
        } => {
            let args = GenerateArgs {
                gen_config,
                preset,
                customers,
                items,
            };
            commands::generate(&resolve(&common)?, &args).map(|_| true)
        }
        Command::Train(c) => commands::train(&resolve(&c)?).map(|_| true),
        Command::Recommend {
            common,
            customer,
            n,
            baseline_only,
        } => commands::recommend(&resolve(&common)?, &customer, n, baseline_only).map(|_| true),
        Command::Evaluate(c) => commands::evaluate(&resolve(&c)?).map(|_| true),
        Command::Sweep(c) => commands::sweep(&resolve(&c)?).map(|_| true),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { 2 } else { 1 })
        }
    }
}
