//! Command-line front end for the experiment runner.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mismatch_lab::experiment::{plotdata, run, ExperimentConfig, ExperimentKind, ExperimentSpec, RunOptions};
use mismatch_lab::gallery::GalleryKind;
use mismatch_lab::models::{ModelFile, Validate};
use mismatch_lab::{Error, Result};

#[derive(Parser)]
#[command(name = "mismatch-lab", version, about = "Model-mismatch experiments for discounted-cost control")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Counterexample gallery.
    Gallery {
        #[command(subcommand)]
        action: GalleryAction,
    },
    /// Continuity and robustness bounds on a random tabular corpus.
    Bounds(RunArgs),
    /// Strategic-measure TV on random POMDP pairs.
    Strategic(RunArgs),
    /// Sup-over-policies gap along a mixing sequence.
    Supgap(RunArgs),
    /// Learning curve of a counting estimator.
    Learn(RunArgs),
    /// Convert a result directory into gnuplot series.
    Plotdata {
        /// Directory holding manifest.json and the result CSV.
        results: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Validate an experiment config or a model file.
    Validate { path: PathBuf },
}

#[derive(Subcommand)]
enum GalleryAction {
    /// List the entries.
    List,
    /// Print one entry (both kernels, policies, boundary conventions) as JSON.
    Dump {
        name: GalleryKind,
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long)]
        beta: Option<f64>,
    },
    /// Evaluate entries against their closed forms.
    Run(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (JSON); built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, overriding the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed, overriding the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
    /// Exit with status 2 if any row violates its bound.
    #[arg(long)]
    check: bool,
}

fn run_kind(kind: ExperimentKind, args: RunArgs) -> Result<u8> {
    let config = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::new(
            0,
            PathBuf::from("results").join(kind.name()),
            ExperimentSpec::default_for(kind),
        ),
    };
    if config.kind() != kind {
        return Err(Error::InvalidConfig {
            field: "experiment.kind".into(),
            reason: format!("config is `{}` but the subcommand runs `{}`", config.kind().name(), kind.name()),
        });
    }
    let report = run(
        &config,
        &RunOptions {
            out: args.out,
            seed: args.seed,
            jobs: args.jobs,
        },
    )?;
    let m = &report.manifest;
    println!(
        "{}: {} rows, {} violations -> {}",
        kind.name(),
        m.files[0].rows,
        m.violations,
        report.output_dir.display()
    );
    Ok(report.exit_code(args.check) as u8)
}

fn validate(path: &PathBuf) -> Result<()> {
    let text = std::fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    if value.get("experiment").is_some() {
        let cfg = ExperimentConfig::from_json(&text)?;
        println!("valid {} config", cfg.kind().name());
    } else {
        let model = ModelFile::from_json(&text)?;
        model.model.ensure_valid()?;
        println!("valid {} model", model.model.kind());
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Gallery { action } => match action {
            GalleryAction::List => {
                for k in GalleryKind::ALL {
                    println!("{:<15} {:<8} {}", k.name(), format!("{:?}", k.convergence_mode()).to_lowercase(), k.description());
                }
                Ok(0)
            }
            GalleryAction::Dump { name, n, beta } => {
                let mut entry = name.make(n)?;
                if let Some(b) = beta {
                    entry = entry.with_discount(b);
                }
                println!("{}", serde_json::to_string_pretty(&entry)?);
                Ok(0)
            }
            GalleryAction::Run(args) => run_kind(ExperimentKind::Gallery, args),
        },
        Command::Bounds(args) => run_kind(ExperimentKind::BoundsCorpus, args),
        Command::Strategic(args) => run_kind(ExperimentKind::Strategic, args),
        Command::Supgap(args) => run_kind(ExperimentKind::SupGap, args),
        Command::Learn(args) => run_kind(ExperimentKind::Learn, args),
        Command::Plotdata { results, out } => {
            let report = plotdata(&results, &out)?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            for f in &report.files {
                println!("{}", f.display());
            }
            Ok(0)
        }
        Command::Validate { path } => validate(&path).map(|()| 0),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
