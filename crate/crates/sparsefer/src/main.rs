use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sparsefer::{config, emit_plots_data, run_pipeline, run_stage, synth, PipelineConfig, Result};

#[derive(Parser)]
#[command(name = "sparsefer", version, about = "Sparse-representation facial expression classification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load manifests and split into train and test sets.
    Ingest(Common),
    /// Search random projections and project both sets.
    Project(Common),
    /// Initialize the dictionary from projected training data and refine it.
    TrainDict(Common),
    /// Sparse-code both sets against the refined dictionary.
    Encode(Common),
    /// Grid-search C and train the one-vs-rest SVM on training codes.
    TrainSvm(Common),
    /// Classify the test set and write results and plot data.
    Evaluate(Common),
    /// Run every stage in order.
    Pipeline(Common),
    /// Write a synthetic corpus.
    Synth(Common),
    /// Rewrite plot data from a completed output directory.
    Plots(Common),
}

#[derive(Args)]
struct Common {
    /// `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Manifest CSV; repeat to concatenate corpora.
    #[arg(long)]
    manifest: Vec<PathBuf>,
    /// Any config key, as KEY=VALUE; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Common {
    fn load(&self) -> Result<PipelineConfig> {
        let mut overrides = self.set.clone();
        if let Some(out) = &self.out {
            overrides.push(format!("out={}", out.display()));
        }
        if let Some(seed) = self.seed {
            overrides.push(format!("seed={seed}"));
        }
        if !self.manifest.is_empty() {
            let list: Vec<String> = self.manifest.iter().map(|p| p.display().to_string()).collect();
            overrides.push(format!("manifest={}", list.join(",")));
        }
        config::load(self.config.as_deref(), &overrides)
    }
}

fn run(cli: Cli) -> Result<()> {
    let (stage, common) = match &cli.command {
        Command::Ingest(c) => ("ingest", c),
        Command::Project(c) => ("project", c),
        Command::TrainDict(c) => ("train-dict", c),
        Command::Encode(c) => ("encode", c),
        Command::TrainSvm(c) => ("train-svm", c),
        Command::Evaluate(c) => ("evaluate", c),
        Command::Pipeline(c) => ("pipeline", c),
        Command::Synth(c) => ("synth", c),
        Command::Plots(c) => ("plots", c),
    };
    let cfg = common.load()?;
    match stage {
        "pipeline" => {
            let r = run_pipeline(&cfg)?;
            println!("average recognition rate {:.4} (m={}, K={}, L={}, C={})", r.average_rate, r.m, r.k, r.l, r.c);
        }
        "synth" => match synth::run_synth(&cfg)? {
            Some(manifest) => println!("wrote {}", manifest.display()),
            None => println!("wrote {}", cfg.out.display()),
        },
        "plots" => {
            let p = emit_plots_data(&cfg.out)?;
            println!("{} reconstruction rows, {} curve rows", p.reconstruction_rows, p.curve_rows);
        }
        _ => run_stage(stage, &cfg)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
