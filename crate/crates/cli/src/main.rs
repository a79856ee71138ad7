use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pnn_cli::commands::{self, Start};
use pnn_cli::config::ExperimentConfig;
use pnn_cli::io::{self, Dataset};
use pnn_cli::recipes::{recipe, recipe_for_system, RECIPES};
use pnn_cli::{CliError, CliResult, Overrides};

#[derive(Parser)]
#[command(name = "pnn", version, about = "Poisson neural networks: data, training, prediction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Source {
    /// Experiment config (JSON).
    #[arg(long, conflicts_with_all = ["recipe", "system"])]
    config: Option<PathBuf>,
    /// Bundled recipe name.
    #[arg(long, conflicts_with = "system")]
    recipe: Option<String>,
    /// Default recipe for a system: lv, pendulum, lorentz, al, twobody.
    #[arg(long)]
    system: Option<String>,
    /// Output directory (default: $PNN_OUTPUT_ROOT/<name>).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    train_steps: Option<usize>,
    #[arg(long)]
    test_steps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate trajectories (and frames) with a manifest.
    Gen(Source),
    /// Train a model; writes checkpoint, metrics and loss curve.
    Train {
        #[command(flatten)]
        source: Source,
        /// Existing dataset directory; generated into <out>/data otherwise.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        log_interval: Option<usize>,
        /// Override the model kind: pnn, sympnet (Φ only) or vpnn (θ only).
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        quiet: bool,
    },
    /// Roll a checkpoint forward.
    Predict {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Comma-separated initial state.
        #[arg(long, conflicts_with = "data", allow_hyphen_values = true)]
        x0: Option<String>,
        /// Start from the end of a dataset's training part.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        trajectory: usize,
        /// Observed steps to predict.
        #[arg(long)]
        steps: usize,
        /// Emit every latent substep (frame interpolation for m > 1).
        #[arg(long)]
        emit_substeps: bool,
        /// CSV file, or a directory for frames.
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate one or more checkpoints on a dataset.
    Eval {
        #[arg(long = "checkpoint", required = true)]
        checkpoints: Vec<PathBuf>,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 0.02)]
        eps: f64,
        /// Write the reports as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List bundled recipes, or print one as JSON.
    Recipes { name: Option<String> },
}

fn resolve(src: &Source, extra: Overrides) -> CliResult<(ExperimentConfig, PathBuf)> {
    let mut cfg = match (&src.config, &src.recipe, &src.system) {
        (Some(path), _, _) => ExperimentConfig::load(path)?,
        (None, Some(name), _) => {
            recipe(name).ok_or_else(|| CliError::config(format!("unknown recipe `{name}`; see `pnn recipes`")))?
        }
        (None, None, Some(sys)) => recipe_for_system(sys)
            .and_then(recipe)
            .ok_or_else(|| CliError::config(format!("unknown system `{sys}`")))?,
        _ => return Err(CliError::config("one of --config, --recipe or --system is required")),
    };
    let mut ov = extra;
    ov.train_steps = src.train_steps;
    ov.test_steps = src.test_steps;
    ov.seed = src.seed;
    ov.apply(&mut cfg);
    cfg.validate()?;
    let out = cfg.output_dir(src.out.as_deref());
    Ok((cfg, out))
}

fn parse_state(s: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| CliError::config(format!("`{v}` in --x0 is not a number")))
        })
        .collect()
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Gen(src) => {
            let (cfg, out) = resolve(&src, Overrides::default())?;
            let ds = commands::gen(&cfg, &out)?;
            println!(
                "wrote {} trajectories × {} states to {}",
                ds.observations.len(),
                ds.observations[0].rows(),
                out.display()
            );
        }
        Command::Train {
            source,
            data,
            iterations,
            lr,
            log_interval,
            model,
            quiet,
        } => {
            let model = model
                .map(|m| {
                    serde_json::from_value(serde_json::Value::String(m.clone()))
                        .map_err(|_| CliError::config(format!("unknown model `{m}`; expected pnn, sympnet or vpnn")))
                })
                .transpose()?;
            let extra = Overrides {
                iterations,
                learning_rate: lr,
                log_interval,
                model,
                ..Default::default()
            };
            let (cfg, out) = resolve(&source, extra)?;
            let ds = match data {
                Some(dir) => Dataset::load(&dir)?,
                None => commands::gen(&cfg, &out.join("data"))?,
            };
            let outcome = commands::train(&cfg, &ds, &out, quiet)?;
            print!("{}", commands::format_table(&[(cfg.name.clone(), outcome.report)]));
            println!("checkpoint: {}", outcome.checkpoint.display());
        }
        Command::Predict {
            checkpoint,
            x0,
            data,
            trajectory,
            steps,
            emit_substeps,
            out,
        } => {
            let start = match (x0, data) {
                (Some(x), None) => Start::State(parse_state(&x)?),
                (None, Some(d)) => Start::DatasetEnd {
                    data: d,
                    traj: trajectory,
                },
                _ => return Err(CliError::config("give exactly one of --x0 or --data")),
            };
            let r = commands::predict(&checkpoint, start, steps, emit_substeps, &out)?;
            println!("wrote {} states (dt = {}) to {}", r.states.rows(), r.dt, out.display());
        }
        Command::Eval {
            checkpoints,
            data,
            eps,
            out,
        } => {
            let rows = commands::eval(&checkpoints, &data, eps)?;
            print!("{}", commands::format_table(&rows));
            if let Some(path) = out {
                let doc: serde_json::Map<String, serde_json::Value> = rows
                    .iter()
                    .map(|(n, r)| (n.clone(), serde_json::to_value(r).expect("serialisable")))
                    .collect();
                io::write_json(&path, &doc)?;
            }
        }
        Command::Recipes { name } => match name {
            Some(n) => {
                let cfg = recipe(&n).ok_or_else(|| CliError::config(format!("unknown recipe `{n}`")))?;
                println!("{}", cfg.to_json());
            }
            None => RECIPES.iter().for_each(|r| println!("{r}")),
        },
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
