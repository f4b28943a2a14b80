use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::error;
use vqanle::evaluate::{evaluate, render_report, render_stats, stats_file};
use vqanle::review::{export_scores_file, serve, ReviewState};
use vqanle::runner::{run_from_config, RunError, RunOptions};

#[derive(Parser)]
#[command(name = "vqanle", version, about = "Generate and evaluate VQA-NLE triplets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a generation config end to end (resumes an interrupted run).
    Generate {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; defaults to output_dir from the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Discard any previous journal in the output directory.
        #[arg(long)]
        fresh: bool,
    },
    /// Compare a dataset against a reference corpus.
    Evaluate {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        reference: PathBuf,
        /// JSON object of precomputed scores from an external scorer.
        #[arg(long)]
        external: Option<PathBuf>,
        /// Write the machine-readable report here.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Corpus statistics for one dataset.
    Stats {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Serve the review API.
    Review {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        images: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: String,
        /// Score log; defaults to scores.jsonl beside the dataset.
        #[arg(long)]
        scores: Option<PathBuf>,
    },
    /// Write the rater x criterion CSV from a score log.
    ExportScores {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, env = "VQANLE_SCORES", default_value = "scores.jsonl")]
        scores: PathBuf,
    },
}

fn scores_beside(dataset: &Path) -> PathBuf {
    dataset.parent().unwrap_or(Path::new(".")).join("scores.jsonl")
}

fn write_or_print(json: &str, path: Option<&Path>) -> Result<(), String> {
    match path {
        Some(p) => std::fs::write(p, json).map_err(|e| format!("{}: {e}", p.display())),
        None => Ok(()),
    }
}

fn run(cli: Cli) -> Result<(), (u8, String)> {
    let fail = |e: &dyn std::fmt::Display| (1, e.to_string());
    match cli.command {
        Command::Generate { config, out, fresh } => {
            let summary = run_from_config(&config, &RunOptions { fresh, output_dir: out }).map_err(|e| match e {
                RunError::Config(c) => (2, c.to_string()),
                other => (1, other.to_string()),
            })?;
            let m = &summary.manifest;
            println!(
                "{}: {} valid, {} invalid, {} skipped of {} slots -> {}",
                m.test_name,
                m.totals.valid,
                m.totals.invalid,
                m.totals.skipped,
                m.plan_size,
                summary.output_dir.display()
            );
        }
        Command::Evaluate { dataset, reference, external, json } => {
            let r = evaluate(&dataset, &reference, external.as_deref()).map_err(|e| fail(&e))?;
            let text = serde_json::to_string_pretty(&r).map_err(|e| fail(&e))?;
            write_or_print(&text, json.as_deref()).map_err(|e| fail(&e))?;
            print!("{}", render_report(&r));
        }
        Command::Stats { dataset, json } => {
            let r = stats_file(&dataset).map_err(|e| fail(&e))?;
            if json {
                println!("{}", serde_json::to_string_pretty(&r).map_err(|e| fail(&e))?);
            } else {
                print!("{}", render_stats(&r));
            }
        }
        Command::Review { dataset, images, bind, scores } => {
            let scores = scores.unwrap_or_else(|| scores_beside(&dataset));
            let state = ReviewState::open(&dataset, &images, &scores).map_err(|e| fail(&e))?;
            let rt = tokio::runtime::Runtime::new().map_err(|e| fail(&e))?;
            rt.block_on(serve(state, &bind)).map_err(|e| fail(&e))?;
        }
        Command::ExportScores { out, scores } => {
            export_scores_file(&scores, &out).map_err(|e| fail(&e))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, msg)) => {
            error!("{msg}");
            ExitCode::from(code)
        }
    }
}
