use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ews_core::pipeline::{
    cmd_classify_empirical, cmd_experiment, cmd_mwu_features, cmd_simulate, cmd_sweep, init_workers, Overrides,
    PipelineError, Plan, RunConfig,
};

/// Outbreak early-warning pipeline: simulate, train, sweep and classify.
///
/// Worker threads default to the core count; set EWS_WORKERS to override.
#[derive(Debug, Parser)]
#[command(name = "ews", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (created if missing).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// 600 train + 150 test windows per class, White and Environmental noise.
    #[arg(long, global = true)]
    desk_scale: bool,
    /// Noise kinds, e.g. `White,Environmental` or `W,E,D`.
    #[arg(long, global = true, value_delimiter = ',')]
    noise: Option<Vec<String>>,
    /// Feature sets: `22`, `5`.
    #[arg(long, global = true, value_delimiter = ',')]
    features: Option<Vec<String>>,
    /// Models: `G,L,K,S` or names.
    #[arg(long, global = true, value_delimiter = ',')]
    models: Option<Vec<String>>,
    /// `rolling`, `expanding` or `both`.
    #[arg(long, global = true)]
    sweep_kind: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write trajectory CSVs and JSON sidecars.
    Simulate,
    /// Train and evaluate the classifier grid.
    Experiment,
    /// Rolling and/or expanding window sweeps.
    Sweep,
    /// Apply trained models to empirical incidence data.
    ClassifyEmpirical,
    /// Per-feature Mann-Whitney U tests between T and N.
    MwuFeatures,
}

fn plan(cli: &Cli) -> Result<Plan, PipelineError> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg.resolve(&Overrides {
        seed: cli.seed,
        out: cli.out.clone(),
        desk_scale: cli.desk_scale,
        noise: cli.noise.clone(),
        features: cli.features.clone(),
        models: cli.models.clone(),
        sweep_kind: cli.sweep_kind.clone(),
    })
}

fn run(cli: &Cli) -> Result<(), PipelineError> {
    init_workers()?;
    let plan = plan(cli)?;
    match cli.command {
        Command::Simulate => {
            let files = cmd_simulate(&plan)?;
            println!("wrote {} files to {}", files.len(), plan.out.join("simulate").display());
        }
        Command::Experiment => {
            let out = cmd_experiment(&plan)?;
            for c in &out.cells {
                let auc = c.report.auc.map(|a| format!("{a:.4}")).unwrap_or_else(|| "NA".into());
                println!("{:<6} auc {auc}  accuracy {:.4}", c.report.classifier, c.report.accuracy);
            }
            println!("reports in {}", out.dir.display());
        }
        Command::Sweep => {
            for &kind in &plan.sweep_kinds {
                let r = cmd_sweep(&plan, kind)?;
                println!("{}: {} rows", kind.name(), r.rows.len());
            }
        }
        Command::ClassifyEmpirical => {
            for r in cmd_classify_empirical(&plan)? {
                println!("{:<6} {} {} {:<9} {}", r.classifier, r.source, r.label, r.variant, r.display);
            }
        }
        Command::MwuFeatures => {
            for (path, rows) in cmd_mwu_features(&plan)? {
                println!("{} ({} features)", path.display(), rows.len());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
