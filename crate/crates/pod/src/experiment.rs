//! Experiment sweeps: each experiment is a list of cells, each cell a full
//! run (dataset, networks, evaluation) described by a [`RunConfig`].

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{io_at, PodError, Result};
use crate::pipeline::{self, write_files_manifest, RunOptions};
use crate::report::MetricsReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    /// Zelda, 5 goals, crops of 5, 9 and 15.
    ObsSweep,
    /// Zelda, crop 5, 1, 5 and 50 goals.
    GoalSweep,
    /// Zelda, Sokoban and Danger Dave with 5 goals each.
    Games,
    /// Zelda, crop 5, 50 goals; the duplicate rate is the figure of interest.
    Duplicates,
}

impl Experiment {
    pub const ALL: [Experiment; 4] = [
        Experiment::ObsSweep,
        Experiment::GoalSweep,
        Experiment::Games,
        Experiment::Duplicates,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Experiment::ObsSweep => "obs-sweep",
            Experiment::GoalSweep => "goal-sweep",
            Experiment::Games => "games",
            Experiment::Duplicates => "duplicates",
        }
    }
}

impl FromStr for Experiment {
    type Err = PodError;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| PodError::invalid(format!("unknown experiment {s:?} (obs-sweep, goal-sweep, games, duplicates)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Desk,
    Paper,
}

impl FromStr for Scale {
    type Err = PodError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Scale::Desk),
            "paper" => Ok(Scale::Paper),
            _ => Err(PodError::invalid(format!("unknown scale {s:?} (desk, paper)"))),
        }
    }
}

impl Scale {
    pub fn as_str(self) -> &'static str {
        match self {
            Scale::Desk => "desk",
            Scale::Paper => "paper",
        }
    }

    /// The run settings every cell starts from.
    pub fn base_config(self) -> RunConfig {
        let mut c = RunConfig::default();
        if self == Scale::Desk {
            c.train.channels = [16, 16, 32];
            c.train.epochs = 60;
            c.dataset_size = 20_000;
            c.generation.trials = 500;
            c.seeds = vec![1, 2];
        }
        c
    }
}

/// One run within an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    /// Names the output directory. Cells from different experiments with
    /// the same name are the same run.
    pub name: String,
    pub config: RunConfig,
}

fn cell(base: &RunConfig, fixtures: &Path, game: &str, goal_dir: &str, goal_limit: Option<usize>, obs: usize) -> Cell {
    let goals_n = goal_limit.map_or_else(|| goal_dir.trim_start_matches(game).to_string(), |n| n.to_string());
    let name = format!("{game}-goals{goals_n}-obs{obs}");
    let config = RunConfig {
        game: game.into(),
        goals: fixtures.join(goal_dir),
        goal_limit,
        obs_size: obs,
        out: PathBuf::new(),
        ..base.clone()
    };
    Cell { name, config }
}

/// The cells of `experiment`, with goal directories under `fixtures` and
/// outputs under `out/<cell name>`.
pub fn cells(experiment: Experiment, base: &RunConfig, fixtures: &Path, out: &Path) -> Vec<Cell> {
    let mut cells = match experiment {
        Experiment::ObsSweep => [5, 9, 15]
            .iter()
            .map(|&obs| cell(base, fixtures, "zelda", "zelda5", None, obs))
            .collect(),
        Experiment::GoalSweep => vec![
            cell(base, fixtures, "zelda", "zelda5", Some(1), 5),
            cell(base, fixtures, "zelda", "zelda5", None, 5),
            cell(base, fixtures, "zelda", "zelda50", None, 5),
        ],
        Experiment::Games => vec![
            cell(base, fixtures, "zelda", "zelda5", None, 5),
            cell(base, fixtures, "sokoban", "sokoban5", None, 3),
            cell(base, fixtures, "dave", "dave5", None, 5),
        ],
        Experiment::Duplicates => vec![cell(base, fixtures, "zelda", "zelda50", None, 5)],
    };
    for c in &mut cells {
        c.config.out = out.join(&c.name);
    }
    cells
}

#[derive(Debug, Clone, Serialize)]
struct IndexEntry<'a> {
    cell: &'a str,
    report: String,
    playable_pct: f64,
    playable_unique_pct: f64,
    duplicate_pct: f64,
}

#[derive(Debug, Clone, Serialize)]
struct Index<'a> {
    experiment: &'a str,
    scale: &'a str,
    cells: Vec<IndexEntry<'a>>,
}

/// Runs every cell of `experiment`, writes `out/<experiment>.json` listing
/// the cell reports, and refreshes `out/files.json`.
pub fn reproduce(
    experiment: Experiment,
    scale: Scale,
    base: &RunConfig,
    fixtures: &Path,
    out: &Path,
    opts: RunOptions,
) -> Result<Vec<(Cell, MetricsReport)>> {
    fs::create_dir_all(out).map_err(io_at(out))?;
    let mut results = Vec::new();
    for cell in cells(experiment, base, fixtures, out) {
        opts.log.say(format!("== {} / {}", experiment.as_str(), cell.name));
        let report = pipeline::run(&cell.config, opts)?;
        opts.log.say(report.summary_lines());
        results.push((cell, report));
    }
    let index = Index {
        experiment: experiment.as_str(),
        scale: scale.as_str(),
        cells: results
            .iter()
            .map(|(c, r)| IndexEntry {
                cell: &c.name,
                report: format!("{}/{}", c.name, pipeline::REPORT_FILE),
                playable_pct: r.playable_pct.mean,
                playable_unique_pct: r.playable_unique_pct.mean,
                duplicate_pct: r.duplicate_pct.mean,
            })
            .collect(),
    };
    let path = out.join(format!("{}.json", experiment.as_str()));
    let mut text = serde_json::to_string_pretty(&index)?;
    text.push('\n');
    fs::write(&path, text).map_err(io_at(&path))?;
    write_files_manifest(out)?;
    Ok(results)
}
