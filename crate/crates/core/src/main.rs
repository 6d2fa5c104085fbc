//! Command-line front door. Exit codes: 0 success, 1 usage/config error,
//! 2 data error, 3 point-in-time violation, 4 numerical failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use pairlab::commands;
use pairlab::config::RunConfig;
use pairlab::error::{Error, Result};

#[derive(Parser)]
#[command(
    name = "pairlab",
    about = "Pair-trading research engine: screen, cointegrate, optimize, backtest",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML config file; flags below override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Wide CSV price panel (date,TICKER1,TICKER2,...).
    #[arg(long, global = true)]
    data: Option<PathBuf>,

    /// Run seed driving every random choice.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Threshold search method.
    #[arg(long, global = true, value_parser = ["grid", "tpe"])]
    method: Option<String>,

    /// Trial budget for the tpe method.
    #[arg(long, global = true)]
    trials: Option<usize>,

    /// Output (run) directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Correlation-screen the pair universe on the selection window.
    Screen,
    /// Engle-Granger test for the pairs that passed the screen.
    Coint,
    /// Per-pair threshold optimization on the training window.
    Optimize,
    /// Test-window backtest of baseline vs optimized thresholds.
    Backtest,
    /// All four phases in order, with a hashed run manifest.
    Pipeline,
    /// Emit plot-ready CSVs from a completed run directory.
    Report,
}

fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    if let Some(data) = &cli.data {
        cfg.data_path = data.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(method) = &cli.method {
        cfg.method = method.parse()?;
    }
    if let Some(trials) = cli.trials {
        cfg.budget = trials;
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<()> {
    match cli.command {
        Command::Screen => {
            let cfg = resolve_config(cli)?;
            let results = commands::cmd_screen(&cfg)?;
            let passed = results.iter().filter(|r| r.passed).count();
            println!(
                "screened {} pairs, {} passed at threshold {}",
                results.len(),
                passed,
                cfg.correlation_threshold
            );
            println!("wrote {}", cfg.output_dir.join("screen_results.csv").display());
        }
        Command::Coint => {
            let cfg = resolve_config(cli)?;
            let run = commands::cmd_coint(&cfg)?;
            let hits = run.results.iter().filter(|r| r.cointegrated).count();
            println!(
                "tested {} pairs, {} cointegrated at p < {} ({} failed)",
                run.results.len() + run.failures.len(),
                hits,
                cfg.cointegration_threshold,
                run.failures.len()
            );
            println!("wrote {}", cfg.output_dir.join("coint_results.csv").display());
        }
        Command::Optimize => {
            let cfg = resolve_config(cli)?;
            let universe = commands::cmd_optimize(&cfg)?;
            println!(
                "optimized {} pairs ({} failed): theta_in avg {:.3}, theta_out avg {:.3}",
                universe.results.len(),
                universe.failures.len(),
                universe.theta_in_mean,
                universe.theta_out_mean
            );
            println!(
                "wrote {}",
                cfg.output_dir.join("optimization_results.csv").display()
            );
        }
        Command::Backtest => {
            let cfg = resolve_config(cli)?;
            let summary = commands::cmd_backtest(&cfg)?;
            print_summary(&summary);
            println!(
                "wrote {}",
                cfg.output_dir.join("portfolio_summary.json").display()
            );
        }
        Command::Pipeline => {
            let cfg = resolve_config(cli)?;
            let summary = commands::cmd_pipeline(&cfg)?;
            print_summary(&summary);
            println!("run directory: {}", cfg.output_dir.display());
        }
        Command::Report => {
            let run_dir = match (&cli.out, &cli.config) {
                (Some(out), _) => out.clone(),
                (None, Some(_)) => resolve_config(cli)?.output_dir,
                (None, None) => {
                    return Err(Error::Config(
                        "report needs --out <run dir> or a config file".into(),
                    ))
                }
            };
            let files = commands::cmd_report(&run_dir)?;
            println!("wrote {} plot files under {}", files.len(), run_dir.display());
        }
    }
    Ok(())
}

fn print_summary(summary: &pairlab::report::PortfolioSummary) {
    println!(
        "pairs: {} screened, {} passed, {} cointegrated, {} backtested",
        summary.counts.pairs_total,
        summary.counts.pairs_passed_correlation,
        summary.counts.pairs_cointegrated,
        summary.counts.pairs_backtested
    );
    println!(
        "baseline   ({}): mean {:+.4}, std {:.4}, min {:+.4}, max {:+.4}",
        summary.return_mode,
        summary.baseline.compounded.mean,
        summary.baseline.compounded.std,
        summary.baseline.compounded.min,
        summary.baseline.compounded.max
    );
    println!(
        "optimized  ({}): mean {:+.4}, std {:.4}, min {:+.4}, max {:+.4}",
        summary.return_mode,
        summary.optimized.compounded.mean,
        summary.optimized.compounded.std,
        summary.optimized.compounded.min,
        summary.optimized.compounded.max
    );
    println!(
        "thresholds: theta_in avg {:.3} (std {:.3}), theta_out avg {:.3} (std {:.3})",
        summary.thresholds.theta_in_mean,
        summary.thresholds.theta_in_std,
        summary.thresholds.theta_out_mean,
        summary.thresholds.theta_out_std
    );
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap's default exit code for usage errors is 2; the CLI
            // contract reserves that for data errors.
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    ExitCode::SUCCESS
                }
                _ => ExitCode::from(1),
            };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
