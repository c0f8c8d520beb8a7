//! File-producing steps shared by the commands: dataset, training,
//! evaluation, and a full run from a [`RunConfig`].

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use pod_core::eval::{dedup_unique, MetricsSummary, SeedMetrics};
use pod_core::generator::{batch_generate, GenerationConfig};
use pod_core::nn::{samples_from_examples, train};
use pod_core::podgen::{build_examples, DatasetConfig, DestroyConfig};
use pod_core::{GameSpec, LevelGrid, NetworkSpec, ObservationSpec, TrainingExample, Traversal};

use crate::checkpoint::{self, Checkpoint, TrainSettings, LOSS_LOG};
use crate::config::{RunConfig, TrainSection};
use crate::dataset::{write_dataset, DatasetHeader};
use crate::error::{io_at, PodError, Result};
use crate::goals::{goal_set_hash, load_goal_dir};
use crate::hashing::file_sha256;
use crate::report::{EvalSettings, MetricsReport};
use crate::traces::write_traces;
use crate::vectors::export_level_vectors;

/// Progress messages go to stderr unless quiet.
#[derive(Debug, Clone, Copy, Default)]
pub struct Log {
    pub quiet: bool,
}

impl Log {
    pub fn say(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }
}

pub fn make_dataset(
    game: &GameSpec,
    goals: &[LevelGrid],
    count: usize,
    seed: u64,
    traversal: Traversal,
    path: &Path,
) -> Result<(DatasetHeader, Vec<TrainingExample>)> {
    let config = DatasetConfig {
        target_examples: count,
        destroy: DestroyConfig {
            traversal,
            ..DestroyConfig::default()
        },
        seed,
    };
    let ds = build_examples(game, goals, &config)?;
    let header = DatasetHeader {
        game: game.id.as_str().into(),
        goal_set_hash: goal_set_hash(game, goals),
        seed,
        traversal: traversal.as_str().into(),
        count: ds.examples.len(),
        trajectories: ds.trajectories,
    };
    write_dataset(path, &header, &ds.examples, game)?;
    Ok((header, ds.examples))
}

fn write_loss_log(path: &Path, losses: &[f32]) -> Result<()> {
    let mut text = String::from("epoch,loss\n");
    for (i, l) in losses.iter().enumerate() {
        text.push_str(&format!("{},{l}\n", i + 1));
    }
    fs::write(path, text).map_err(io_at(path))
}

/// Trains one network on `examples` and writes its checkpoint to `dir`.
///
/// With `reuse`, an existing checkpoint in `dir` trained from the same
/// dataset with the same settings is loaded instead.
#[allow(clippy::too_many_arguments)]
pub fn train_checkpoint(
    examples: &[TrainingExample],
    game: &GameSpec,
    obs: usize,
    section: &TrainSection,
    seed: u64,
    dataset_sha256: &str,
    dir: &Path,
    reuse: bool,
    log: Log,
) -> Result<Checkpoint> {
    let obs_spec = ObservationSpec::new(obs, game.alphabet.len())?;
    let spec = NetworkSpec::new(obs, obs_spec.channel_count, section.channels, game.alphabet.len())?;
    let config = section.to_config();
    if reuse {
        if let Ok(ck) = checkpoint::load(dir) {
            let m = &ck.manifest;
            if ck.network.spec == spec
                && m.seed == seed
                && m.game == game.id.as_str()
                && m.train == TrainSettings::from(&config)
                && m.dataset_sha256.as_deref() == Some(dataset_sha256)
            {
                log.say(format!("reusing {}", dir.display()));
                return Ok(ck);
            }
        }
    }
    let samples = samples_from_examples(examples, &obs_spec);
    let start = Instant::now();
    let every = (config.epochs / 10).max(1);
    let outcome = train(&samples, spec, &config, seed, |epoch, loss| {
        if (epoch + 1) % every == 0 {
            log.say(format!(
                "  seed {seed} epoch {}/{} loss {loss:.4} ({:.0}s)",
                epoch + 1,
                config.epochs,
                start.elapsed().as_secs_f64()
            ));
        }
    })?;
    let (manifest, blob) = checkpoint::manifest_for(
        &outcome.network,
        game,
        &config,
        Some(dataset_sha256.to_string()),
        outcome.epoch_losses.last().copied(),
    );
    checkpoint::save(dir, &manifest, &blob)?;
    write_loss_log(&dir.join(LOSS_LOG), &outcome.epoch_losses)?;
    Ok(Checkpoint {
        manifest,
        network: outcome.network,
    })
}

/// Fails unless every checkpoint was trained for `game` with one crop size.
pub fn check_checkpoints(checkpoints: &[Checkpoint], game: &GameSpec) -> Result<usize> {
    let first = checkpoints
        .first()
        .ok_or_else(|| PodError::invalid("no checkpoints given"))?;
    for ck in checkpoints {
        if ck.manifest.game != game.id.as_str() {
            return Err(PodError::invalid(format!(
                "checkpoint was trained for {}, not {}",
                ck.manifest.game,
                game.id.as_str()
            )));
        }
        if ck.network.spec.crop_size != first.network.spec.crop_size {
            return Err(PodError::invalid("checkpoints use different crop sizes"));
        }
    }
    Ok(first.network.spec.crop_size)
}

pub struct EvalRequest<'a> {
    pub game: &'a GameSpec,
    pub goals: &'a [LevelGrid],
    pub traversal: Traversal,
    pub max_passes: usize,
    pub trials: usize,
    pub master_seed: u64,
    pub unique_threshold: f64,
    /// Write `traces-seed-<seed>.jsonl` here for each network.
    pub traces_dir: Option<&'a Path>,
    /// Export the goals and every network's playable, unique outputs as
    /// one-hot vectors to this CSV.
    pub vectors: Option<&'a Path>,
}

pub fn evaluate_checkpoints(checkpoints: &[Checkpoint], req: &EvalRequest<'_>, log: Log) -> Result<MetricsReport> {
    let obs = check_checkpoints(checkpoints, req.game)?;
    let gen = GenerationConfig::new(ObservationSpec::new(obs, req.game.alphabet.len())?)
        .with_traversal(req.traversal)
        .with_passes(req.max_passes);
    let mut per_seed = Vec::new();
    let mut kept_levels = Vec::new();
    for ck in checkpoints {
        let start = Instant::now();
        let traces = batch_generate(&ck.network, req.game, &gen, req.trials, req.master_seed)?;
        let m = SeedMetrics::from_traces(&traces, req.goals, req.unique_threshold)?;
        log.say(format!(
            "  seed {}: playable {:.2}% unique {:.2}% duplicates {:.2}% ({:.0}s)",
            ck.manifest.seed,
            m.playable_pct,
            m.playable_unique_pct,
            m.duplicate_pct,
            start.elapsed().as_secs_f64()
        ));
        if let Some(dir) = req.traces_dir {
            write_traces(&dir.join(format!("traces-seed-{}.jsonl", ck.manifest.seed)), &traces, req.game)?;
        }
        if req.vectors.is_some() {
            let playable: Vec<LevelGrid> = traces
                .iter()
                .filter(|t| t.verdict.playable)
                .map(|t| t.final_level.clone())
                .collect();
            for i in dedup_unique(&playable, req.goals, req.unique_threshold)? {
                kept_levels.push(playable[i].clone());
            }
        }
        per_seed.push(m);
    }
    if let Some(path) = req.vectors {
        export_level_vectors(&kept_levels, req.goals, req.game.alphabet.len(), path)?;
    }
    let settings = EvalSettings {
        game: req.game.id.as_str().into(),
        goal_set_hash: goal_set_hash(req.game, req.goals),
        obs_size: obs,
        traversal: req.traversal.as_str().into(),
        max_passes: req.max_passes,
        trials: req.trials,
        master_seed: req.master_seed,
        unique_threshold: req.unique_threshold,
        checkpoints: checkpoints.iter().map(|c| c.manifest.weights_sha256.clone()).collect(),
    };
    let seeds: Vec<u64> = checkpoints.iter().map(|c| c.manifest.seed).collect();
    Ok(MetricsReport::new(settings, &seeds, &MetricsSummary::from_seeds(per_seed)))
}

pub const CONFIG_FILE: &str = "config.toml";
pub const DATASET_FILE: &str = "dataset.jsonl";
pub const REPORT_FILE: &str = "report.json";
pub const FILES_MANIFEST: &str = "files.json";

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub reuse: bool,
    pub timing: bool,
    pub log: Log,
}

/// Dataset, one network per seed, evaluation. Everything lands in
/// `config.out`:
///
/// ```text
/// config.toml  dataset.jsonl  seed-<s>/{manifest.json,weights.bin,loss.csv}
/// traces-seed-<s>.jsonl  report.json  files.json
/// ```
pub fn run(config: &RunConfig, opts: RunOptions) -> Result<MetricsReport> {
    config.validate()?;
    let started = Instant::now();
    let log = opts.log;
    let game = config.game_spec()?;
    let traversal = config.traversal()?;
    let goals = load_goal_dir(&game, &config.goals, config.goal_limit)?;
    let out = &config.out;
    fs::create_dir_all(out).map_err(io_at(out))?;
    config.save(&out.join(CONFIG_FILE))?;

    let dataset_path = out.join(DATASET_FILE);
    let (header, examples) = make_dataset(
        &game,
        &goals,
        config.dataset_size,
        config.dataset_seed,
        traversal,
        &dataset_path,
    )?;
    let dataset_sha = file_sha256(&dataset_path)?;
    log.say(format!(
        "{}: {} examples from {} trajectories over {} goals",
        out.display(),
        header.count,
        header.trajectories,
        goals.len()
    ));

    let mut checkpoints = Vec::new();
    for &seed in &config.seeds {
        checkpoints.push(train_checkpoint(
            &examples,
            &game,
            config.obs_size,
            &config.train,
            seed,
            &dataset_sha,
            &out.join(format!("seed-{seed}")),
            opts.reuse,
            log,
        )?);
    }
    drop(examples);

    let mut report = evaluate_checkpoints(
        &checkpoints,
        &EvalRequest {
            game: &game,
            goals: &goals,
            traversal,
            max_passes: config.generation.max_passes,
            trials: config.generation.trials,
            master_seed: config.generation.seed,
            unique_threshold: config.generation.unique_threshold,
            traces_dir: Some(out),
            vectors: None,
        },
        log,
    )?;
    if opts.timing {
        report.runtime_seconds = Some(started.elapsed().as_secs_f64());
    }
    report.write(&out.join(REPORT_FILE))?;
    write_files_manifest(out)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

fn collect_files(root: &Path, dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    for entry in fs::read_dir(dir).map_err(io_at(dir))? {
        let path = entry.map_err(io_at(dir))?.path();
        if path.is_dir() {
            collect_files(root, &path, out)?;
        } else if path != root.join(FILES_MANIFEST) {
            out.push(path);
        }
    }
    Ok(())
}

/// Lists every file under `dir` (paths relative to it, sorted) with its
/// size and SHA-256 in `dir/files.json`.
pub fn write_files_manifest(dir: &Path) -> Result<Vec<FileEntry>> {
    let mut files = Vec::new();
    collect_files(dir, dir, &mut files)?;
    files.sort();
    let mut entries = Vec::with_capacity(files.len());
    for path in files {
        let bytes = fs::metadata(&path).map_err(io_at(&path))?.len();
        let rel = path.strip_prefix(dir).expect("under dir");
        entries.push(FileEntry {
            path: rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/"),
            bytes,
            sha256: file_sha256(&path)?,
        });
    }
    let target = dir.join(FILES_MANIFEST);
    let mut text = serde_json::to_string_pretty(&entries)?;
    text.push('\n');
    fs::write(&target, text).map_err(io_at(&target))?;
    Ok(entries)
}
