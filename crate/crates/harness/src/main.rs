use anyhow::Result;
use clap::{Parser, Subcommand};
use rhbb_harness::config::{load_config, parse_dataset, Overrides};
use rhbb_harness::error::HarnessError;
use rhbb_harness::{plot, report, suite, summary};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "rhbb", version, about = "Run and summarize hedged-BB optimizer experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute every (run, seed) pair of a suite and write CSV traces.
    Run {
        config: PathBuf,
        /// Run this seed only.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Leave step-size batch evaluations out of effective passes.
        #[arg(long)]
        exclude_stepsize_passes: bool,
    },
    /// Print the analytic feasibility report for a suite.
    Theory { config: PathBuf },
    /// Passes-to-tolerance medians and win counts over a trace directory.
    Summarize {
        dir: PathBuf,
        #[arg(long)]
        tol: f64,
        /// Also write plot columns into this directory.
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Parse a dataset and print its shape.
    ParseCheck {
        dataset: String,
        #[arg(long)]
        dim: Option<usize>,
    },
}

const EXIT_DIVERGED: u8 = 2;
const EXIT_CONFIG: u8 = 1;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}

fn dispatch(command: Command) -> Result<ExitCode> {
    match command {
        Command::Run { config, seed, out, exclude_stepsize_passes } => {
            let overrides = Overrides { seed, output: out, exclude_stepsize_passes };
            let suite = load_config(&config, &overrides)?;
            let result = suite::run_suite(&suite)?;
            for o in &result.outcomes {
                let last = o.trace.last().map(|r| r.grad_norm).unwrap_or(f64::NAN);
                let detail = match &o.status {
                    suite::RunStatus::Failed(m) => format!(" ({m})"),
                    _ => String::new(),
                };
                println!(
                    "{:<32} seed {:<6} {:<9} final grad_norm {last:.3e}{detail}",
                    o.label,
                    o.seed,
                    o.status.as_str()
                );
            }
            println!("wrote {} traces to {}", result.files.len(), suite.output.display());
            Ok(if result.any_failed() { ExitCode::from(EXIT_DIVERGED) } else { ExitCode::SUCCESS })
        }
        Command::Theory { config } => {
            let suite = load_config(&config, &Overrides::default())?;
            let problem = suite::prepare(&suite)?;
            let text = report::theory_report(&suite, &problem).map_err(anyhow::Error::msg)?;
            print!("{text}");
            Ok(ExitCode::SUCCESS)
        }
        Command::Summarize { dir, tol, plot: plot_dir } => {
            anyhow::ensure!(tol > 0.0 && tol.is_finite(), "--tol must be positive");
            let traces = suite::read_trace_dir(&dir)?;
            anyhow::ensure!(!traces.is_empty(), "no trace files in {}", dir.display());
            let rows: Vec<_> = traces.iter().flat_map(|(_, r)| r.iter().cloned()).collect();
            print!("{}", summary::summarize(&rows, tol).render());
            if let Some(p) = plot_dir {
                for notice in plot::emit_plot_data(&traces, &p)? {
                    eprintln!("notice: {notice}");
                }
                println!("plot data written to {}", p.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::ParseCheck { dataset, dim } => {
            let source = parse_dataset(&dataset, Path::new(".")).map_err(anyhow::Error::msg)?;
            let data = suite::load_dataset(&source, dim).map_err(HarnessError::from)?;
            let pos = data.rows().iter().filter(|r| r.label() > 0.0).count();
            let max_sq = data.rows().iter().map(|r| r.norm_sq()).fold(0.0, f64::max);
            println!("rows {}", data.len());
            println!("dim {}", data.dim());
            println!("nnz {}", data.total_nnz());
            println!("positive {pos}");
            println!("max row norm^2 {max_sq:.6e}");
            Ok(ExitCode::SUCCESS)
        }
    }
}
