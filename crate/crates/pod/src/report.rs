//! Evaluation reports as JSON.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use pod_core::eval::{Aggregate, MetricsSummary, SeedMetrics};

use crate::error::{io_at, PodError, Result};
use crate::hashing::json_digest;

/// Everything that determines an evaluation's outcome. Its digest
/// identifies the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSettings {
    pub game: String,
    pub goal_set_hash: String,
    pub obs_size: usize,
    pub traversal: String,
    pub max_passes: usize,
    pub trials: usize,
    pub master_seed: u64,
    pub unique_threshold: f64,
    /// `weights_sha256` of each evaluated checkpoint, in order.
    pub checkpoints: Vec<String>,
}

impl EvalSettings {
    pub fn digest(&self) -> String {
        json_digest(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl From<Aggregate> for Stat {
    fn from(a: Aggregate) -> Self {
        Self { mean: a.mean, std: a.std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedEntry {
    pub seed: u64,
    pub playable: usize,
    pub playable_unique: usize,
    pub playable_pct: f64,
    pub playable_unique_pct: f64,
    pub duplicate_pct: f64,
}

impl SeedEntry {
    pub fn new(seed: u64, m: &SeedMetrics) -> Self {
        Self {
            seed,
            playable: m.playable,
            playable_unique: m.playable_unique,
            playable_pct: m.playable_pct,
            playable_unique_pct: m.playable_unique_pct,
            duplicate_pct: m.duplicate_pct,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub game: String,
    pub config_digest: String,
    pub trials: usize,
    pub playable_pct: Stat,
    pub playable_unique_pct: Stat,
    pub duplicate_pct: Stat,
    /// Set when only one network was evaluated; the spreads are then 0.
    pub single_seed: bool,
    pub per_seed: Vec<SeedEntry>,
    pub config: EvalSettings,
    /// Wall-clock time, only recorded on request because it makes reports
    /// differ between otherwise identical runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runtime_seconds: Option<f64>,
}

impl MetricsReport {
    pub fn new(settings: EvalSettings, seeds: &[u64], summary: &MetricsSummary) -> Self {
        assert_eq!(seeds.len(), summary.per_seed.len());
        Self {
            game: settings.game.clone(),
            config_digest: settings.digest(),
            trials: settings.trials,
            playable_pct: summary.playable.into(),
            playable_unique_pct: summary.playable_unique.into(),
            duplicate_pct: summary.duplicate.into(),
            single_seed: summary.single_seed(),
            per_seed: seeds
                .iter()
                .zip(&summary.per_seed)
                .map(|(&s, m)| SeedEntry::new(s, m))
                .collect(),
            config: settings,
            runtime_seconds: None,
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(path, text).map_err(io_at(path))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(io_at(path))?;
        serde_json::from_str(&text).map_err(|e| PodError::invalid(format!("{}: {e}", path.display())))
    }

    /// One line per metric, `mean ± std`.
    pub fn summary_lines(&self) -> String {
        format!(
            "playable {:.2} ± {:.2}%\nplayable+unique {:.2} ± {:.2}%\nduplicates {:.2} ± {:.2}%",
            self.playable_pct.mean,
            self.playable_pct.std,
            self.playable_unique_pct.mean,
            self.playable_unique_pct.std,
            self.duplicate_pct.mean,
            self.duplicate_pct.std
        )
    }
}
