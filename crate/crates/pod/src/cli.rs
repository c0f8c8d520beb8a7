//! Command-line surface. Exit codes: 0 success, 1 I/O failure, 2 invalid
//! input or configuration (including usage errors).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use pod_core::eval::DEFAULT_UNIQUE_THRESHOLD;
use pod_core::games::check_playable;
use pod_core::generator::{batch_generate, GenerationConfig, Termination};
use pod_core::{GameId, GameSpec, ObservationSpec, TrainConfig};

use crate::checkpoint;
use crate::config::{parse_traversal, RunConfig, TrainSection};
use crate::dataset::read_dataset;
use crate::error::{io_at, PodError, Result};
use crate::experiment::{reproduce, Experiment, Scale};
use crate::goals::{load_goal_dir, read_level};
use crate::hashing::file_sha256;
use crate::pipeline::{self, evaluate_checkpoints, make_dataset, train_checkpoint, EvalRequest, Log, RunOptions};
use crate::traces::write_traces;

#[derive(Debug, Parser)]
#[command(name = "pod", version, about = "Learn iterative level generators from destroyed goal levels")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Destroy goal levels into noise and write the repair examples as JSON lines.
    Dataset(DatasetArgs),
    /// Train a repair network on a dataset file.
    Train(TrainArgs),
    /// Generate levels with a trained network and write their traces.
    Generate(GenerateArgs),
    /// Generate with one or more networks and write a metrics report.
    Eval(EvalArgs),
    /// Check whether a level file is playable.
    Solve(SolveArgs),
    /// Run dataset, training and evaluation from a config file.
    Run(RunArgs),
    /// Run one of the experiment sweeps.
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Args)]
pub struct DatasetArgs {
    #[arg(long)]
    pub game: GameId,
    /// Directory of goal levels, one `.txt` file each.
    #[arg(long)]
    pub goals: PathBuf,
    /// Use only the first N goal files.
    #[arg(long)]
    pub goal_limit: Option<usize>,
    /// Minimum number of examples; whole trajectories are kept.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub count: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// `random` or `sequential`.
    #[arg(long, default_value = "random")]
    pub traversal: String,
    #[arg(long, default_value = "dataset.jsonl")]
    pub out: PathBuf,
}

fn parse_channels(s: &str) -> std::result::Result<[usize; 3], String> {
    let parts: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    match parts.as_slice() {
        &[a, b, c] if a > 0 && b > 0 && c > 0 => Ok([a, b, c]),
        _ => Err("expected three positive widths, e.g. 16,16,32".into()),
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Refuse datasets built for a different game.
    #[arg(long)]
    pub game: Option<GameId>,
    /// Crop size; defaults to the game's usual size.
    #[arg(long)]
    pub obs: Option<usize>,
    #[arg(long, default_value_t = TrainConfig::default().epochs)]
    pub epochs: usize,
    #[arg(long, default_value_t = TrainConfig::default().batch_size)]
    pub batch: usize,
    #[arg(long, default_value_t = TrainConfig::default().learning_rate)]
    pub lr: f32,
    #[arg(long, default_value_t = TrainConfig::default().rho)]
    pub rho: f32,
    #[arg(long, default_value_t = TrainConfig::default().epsilon)]
    pub epsilon: f32,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Widths of the three convolutions.
    #[arg(long, value_parser = parse_channels, default_value = "128,128,256")]
    pub channels: [usize; 3],
    /// Checkpoint directory.
    #[arg(long, default_value = "checkpoint")]
    pub out: PathBuf,
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub game: Option<GameId>,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = GenerationConfig::DEFAULT_PASSES)]
    pub passes: usize,
    #[arg(long, default_value = "random")]
    pub traversal: String,
    #[arg(long, default_value = "traces.jsonl")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub game: GameId,
    /// Goal levels for the uniqueness filter; defaults to `fixtures/<game>5`.
    #[arg(long)]
    pub goals: Option<PathBuf>,
    #[arg(long)]
    pub goal_limit: Option<usize>,
    /// Comma-separated checkpoint directories, one network each.
    #[arg(long, value_delimiter = ',', required = true)]
    pub checkpoints: Vec<PathBuf>,
    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = GenerationConfig::DEFAULT_PASSES)]
    pub passes: usize,
    #[arg(long, default_value = "random")]
    pub traversal: String,
    /// Minimum normalized Hamming distance for a level to count as unique.
    #[arg(long, default_value_t = DEFAULT_UNIQUE_THRESHOLD)]
    pub threshold: f64,
    #[arg(long, default_value = "report.json")]
    pub out: PathBuf,
    /// Also write each network's traces into this directory.
    #[arg(long)]
    pub traces_dir: Option<PathBuf>,
    /// Also write goal and playable-unique level vectors to this CSV.
    #[arg(long)]
    pub vectors: Option<PathBuf>,
    /// Record wall-clock time in the report.
    #[arg(long)]
    pub timing: bool,
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub game: GameId,
    #[arg(long)]
    pub level: PathBuf,
    /// Search budget in expanded states (Sokoban and Danger Dave).
    #[arg(long)]
    pub budget: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides `out` from the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Load matching checkpoints from an earlier run instead of retraining.
    #[arg(long)]
    pub reuse: bool,
    #[arg(long)]
    pub timing: bool,
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    /// obs-sweep, goal-sweep, games or duplicates.
    pub experiment: String,
    /// `desk` (small networks, minutes) or `paper` (full size, days).
    #[arg(long, default_value = "desk")]
    pub scale: String,
    /// Base settings for every cell instead of the scale's defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "fixtures")]
    pub fixtures: PathBuf,
    #[arg(long, default_value = "reproduce")]
    pub out: PathBuf,
    #[arg(long)]
    pub reuse: bool,
    #[arg(long)]
    pub timing: bool,
    #[arg(long)]
    pub quiet: bool,
}

fn cmd_dataset(a: &DatasetArgs) -> Result<()> {
    let game = GameSpec::new(a.game);
    let traversal = parse_traversal(&a.traversal)?;
    let goals = load_goal_dir(&game, &a.goals, a.goal_limit)?;
    let (header, _) = make_dataset(&game, &goals, a.count as usize, a.seed, traversal, &a.out)?;
    println!(
        "examples={} trajectories={} goals={} -> {}",
        header.count,
        header.trajectories,
        goals.len(),
        a.out.display()
    );
    Ok(())
}

fn cmd_train(a: &TrainArgs) -> Result<()> {
    let (header, game, examples) = read_dataset(&a.dataset)?;
    if let Some(id) = a.game {
        if id != game.id {
            return Err(PodError::invalid(format!(
                "{} holds {} examples, not {}",
                a.dataset.display(),
                header.game,
                id.as_str()
            )));
        }
    }
    let obs = a.obs.unwrap_or(game.default_obs_size);
    ObservationSpec::new(obs, game.alphabet.len())?;
    let section = TrainSection {
        epochs: a.epochs,
        batch_size: a.batch,
        learning_rate: a.lr,
        rho: a.rho,
        epsilon: a.epsilon,
        channels: a.channels,
    };
    let ck = train_checkpoint(
        &examples,
        &game,
        obs,
        &section,
        a.seed,
        &file_sha256(&a.dataset)?,
        &a.out,
        false,
        Log { quiet: a.quiet },
    )?;
    println!(
        "trained {} on {} examples, final loss {:.4} -> {}",
        ck.network.describe(),
        examples.len(),
        ck.manifest.final_loss.unwrap_or(f32::NAN),
        a.out.display()
    );
    Ok(())
}

fn load_for_game(dir: &Path, game: Option<GameId>) -> Result<(checkpoint::Checkpoint, GameSpec)> {
    let ck = checkpoint::load(dir)?;
    let spec = ck.manifest.game_spec()?;
    if let Some(id) = game {
        if id != spec.id {
            return Err(PodError::invalid(format!(
                "{} was trained for {}, not {}",
                dir.display(),
                spec.id.as_str(),
                id.as_str()
            )));
        }
    }
    Ok((ck, spec))
}

fn cmd_generate(a: &GenerateArgs) -> Result<()> {
    let (ck, game) = load_for_game(&a.checkpoint, a.game)?;
    let config = GenerationConfig::for_network(&ck.network)
        .with_traversal(parse_traversal(&a.traversal)?)
        .with_passes(a.passes);
    let traces = batch_generate(&ck.network, &game, &config, a.trials as usize, a.seed)?;
    write_traces(&a.out, &traces, &game)?;
    let playable = traces.iter().filter(|t| t.terminated_by == Termination::Playable).count();
    println!("playable={playable}/{} -> {}", traces.len(), a.out.display());
    Ok(())
}

fn cmd_eval(a: &EvalArgs) -> Result<()> {
    let started = Instant::now();
    let game = GameSpec::new(a.game);
    let goal_dir = a
        .goals
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("fixtures/{}5", a.game.as_str())));
    let goals = load_goal_dir(&game, &goal_dir, a.goal_limit)?;
    let mut checkpoints = Vec::new();
    for dir in &a.checkpoints {
        checkpoints.push(load_for_game(dir, Some(a.game))?.0);
    }
    if let Some(dir) = &a.traces_dir {
        fs::create_dir_all(dir).map_err(io_at(dir))?;
    }
    let mut report = evaluate_checkpoints(
        &checkpoints,
        &EvalRequest {
            game: &game,
            goals: &goals,
            traversal: parse_traversal(&a.traversal)?,
            max_passes: a.passes,
            trials: a.trials as usize,
            master_seed: a.seed,
            unique_threshold: a.threshold,
            traces_dir: a.traces_dir.as_deref(),
            vectors: a.vectors.as_deref(),
        },
        Log { quiet: a.quiet },
    )?;
    if a.timing {
        report.runtime_seconds = Some(started.elapsed().as_secs_f64());
    }
    report.write(&a.out)?;
    println!("{}", report.summary_lines());
    Ok(())
}

fn cmd_solve(a: &SolveArgs) -> Result<()> {
    let mut game = GameSpec::new(a.game);
    if let Some(b) = a.budget {
        game = game.with_solver_budget(b);
    }
    let level = read_level(&game, &a.level)?;
    println!("{}", check_playable(&game, &level)?);
    Ok(())
}

fn cmd_run(a: &RunArgs) -> Result<()> {
    let mut config = RunConfig::load(&a.config)?;
    if let Some(out) = &a.out {
        config.out = out.clone();
    }
    let report = pipeline::run(
        &config,
        RunOptions {
            reuse: a.reuse,
            timing: a.timing,
            log: Log { quiet: a.quiet },
        },
    )?;
    println!("{}", report.summary_lines());
    Ok(())
}

fn cmd_reproduce(a: &ReproduceArgs) -> Result<()> {
    let experiment: Experiment = a.experiment.parse()?;
    let scale: Scale = a.scale.parse()?;
    let base = match &a.config {
        Some(path) => RunConfig::load(path)?,
        None => scale.base_config(),
    };
    let results = reproduce(
        experiment,
        scale,
        &base,
        &a.fixtures,
        &a.out,
        RunOptions {
            reuse: a.reuse,
            timing: a.timing,
            log: Log { quiet: a.quiet },
        },
    )?;
    for (cell, report) in &results {
        println!(
            "{}: playable {:.2} ± {:.2}%, playable+unique {:.2} ± {:.2}%, duplicates {:.2}%",
            cell.name,
            report.playable_pct.mean,
            report.playable_pct.std,
            report.playable_unique_pct.mean,
            report.playable_unique_pct.std,
            report.duplicate_pct.mean
        );
    }
    Ok(())
}

pub fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Dataset(a) => cmd_dataset(a),
        Command::Train(a) => cmd_train(a),
        Command::Generate(a) => cmd_generate(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Run(a) => cmd_run(a),
        Command::Reproduce(a) => cmd_reproduce(a),
    }
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
