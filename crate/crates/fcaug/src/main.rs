use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fcaug::config::RunConfig;
use fcaug::error::{Error, Result};
use fcaug::pipeline;

#[derive(Parser)]
#[command(name = "fcaug", version, about = "Field-inversion augmented fuel-cell model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one setting, e.g. `--set iiml.max_outer_iterations=10`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Worker threads.
    #[arg(long)]
    workers: Option<usize>,
    /// Seed for the network initialisation and the truth generator.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct Training {
    /// Comma-separated training case ids.
    #[arg(long, value_delimiter = ',')]
    training_ids: Option<Vec<u32>>,
}

#[derive(Subcommand)]
enum Command {
    /// Manufacture a case set from the configured hidden augmentation.
    GenTruth {
        #[command(flatten)]
        common: Common,
    },
    /// Regenerate a case set from its sealed record and compare.
    VerifyTruth {
        #[arg(long)]
        cases: PathBuf,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// Solve one case, with the augmentation when weights are given.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        cases: PathBuf,
        #[arg(long)]
        case_id: u32,
        #[arg(long)]
        weights: Option<PathBuf>,
    },
    /// Learn the augmentation from the training cases.
    Train {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        training: Training,
        #[arg(long)]
        cases: PathBuf,
    },
    /// Score a network on every case of a set.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        training: Training,
        #[arg(long)]
        cases: PathBuf,
        #[arg(long)]
        weights: PathBuf,
    },
}

fn config(common: &Common, training: Option<&Training>) -> Result<RunConfig> {
    let mut overrides = common.overrides.clone();
    if let Some(w) = common.workers {
        overrides.push(format!("workers={w}"));
    }
    if let Some(s) = common.seed {
        overrides.push(format!("seed={s}"));
    }
    if let Some(ids) = training.and_then(|t| t.training_ids.as_ref()) {
        let ids: Vec<String> = ids.iter().map(|i| i.to_string()).collect();
        overrides.push(format!("training_ids=[{}]", ids.join(",")));
    }
    RunConfig::load(common.config.as_deref(), &overrides)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenTruth { common } => {
            let cfg = config(&common, None)?;
            let r = pipeline::gen_truth(&cfg, &common.out)?;
            println!("wrote {} cases to {} ({} resampled draws)", r.truth.records.len(), common.out.display(), r.truth.resamples);
        }
        Command::VerifyTruth { cases, workers } => {
            let r = pipeline::verify_truth(&cases, workers)?;
            if !r.ok() {
                return Err(Error::Data(format!(
                    "case set does not match its sealed record (conditions match: {}, mismatched cases: {:?})",
                    r.conditions_match, r.mismatched
                )));
            }
            println!("{} cases match their sealed record", r.cases);
        }
        Command::Simulate { common, cases, case_id, weights } => {
            let cfg = config(&common, None)?;
            let r = pipeline::simulate(&cfg, &cases, case_id, weights.as_deref(), &common.out)?;
            println!("case {case_id}: baseline V_cell = {:.6} V", r.baseline.v_cell);
            if let Some((s, _, t)) = &r.augmented {
                println!(
                    "case {case_id}: augmented V_cell = {:.6} V after {} fixed-point iterations (converged: {})",
                    s.v_cell, t.iterations, t.converged
                );
            }
        }
        Command::Train { common, training, cases } => {
            let cfg = config(&common, Some(&training))?;
            let r = pipeline::train(&cfg, &cases, &common.out)?;
            let h = &r.outcome.history;
            println!(
                "objective {:.6e} -> {:.6e} (iteration {}, stop: {:?}); weights in {}",
                h.baseline_objective,
                h.best_objective,
                h.best_iteration,
                h.stop,
                r.weights.display()
            );
        }
        Command::Evaluate { common, training, cases, weights } => {
            let cfg = config(&common, Some(&training))?;
            let r = pipeline::evaluate(&cfg, &cases, &weights, &common.out)?;
            let s = &r.summary;
            println!(
                "improved {} of {} cases; held-out {} of {}; {} failed",
                s.improved, s.total, s.held_out_improved, s.held_out_total, s.failed
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprint!("{}", e.report());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
