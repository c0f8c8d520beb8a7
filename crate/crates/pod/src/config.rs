//! Run configuration, stored as TOML. Every field has a default; the
//! defaults describe the Zelda setup with five goals and 5×5 crops at full
//! network size.
//!
//! ```toml
//! game = "zelda"
//! goals = "fixtures/zelda5"
//! obs_size = 5
//! traversal = "random"
//! seeds = [1, 2, 3]
//! dataset_seed = 0
//! dataset_size = 100000
//! out = "out"
//!
//! [train]
//! epochs = 500
//! batch_size = 64
//! learning_rate = 0.001
//! rho = 0.9
//! epsilon = 1e-8
//! channels = [128, 128, 256]
//!
//! [generation]
//! trials = 10000
//! max_passes = 3
//! seed = 0
//! unique_threshold = 0.1
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use pod_core::eval::DEFAULT_UNIQUE_THRESHOLD;
use pod_core::generator::GenerationConfig;
use pod_core::nn::PAPER_CHANNELS;
use pod_core::{GameId, GameSpec, ObservationSpec, TrainConfig, Traversal};

use crate::error::{io_at, PodError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f32,
    pub rho: f32,
    pub epsilon: f32,
    pub channels: [usize; 3],
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            epochs: t.epochs,
            batch_size: t.batch_size,
            learning_rate: t.learning_rate,
            rho: t.rho,
            epsilon: t.epsilon,
            channels: PAPER_CHANNELS,
        }
    }
}

impl TrainSection {
    pub fn to_config(&self) -> TrainConfig {
        TrainConfig {
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            epochs: self.epochs,
            rho: self.rho,
            epsilon: self.epsilon,
            shuffle_seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerationSection {
    pub trials: usize,
    pub max_passes: usize,
    /// Master seed for the noise streams; every network sees the same ones.
    pub seed: u64,
    pub unique_threshold: f64,
}

impl Default for GenerationSection {
    fn default() -> Self {
        Self {
            trials: 10_000,
            max_passes: GenerationConfig::DEFAULT_PASSES,
            seed: 0,
            unique_threshold: DEFAULT_UNIQUE_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub game: String,
    pub goals: PathBuf,
    /// Use only the first `goal_limit` levels of the goal directory.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub goal_limit: Option<usize>,
    pub obs_size: usize,
    /// Location order for both destruction and generation.
    pub traversal: String,
    /// One network is trained per seed.
    pub seeds: Vec<u64>,
    pub dataset_seed: u64,
    pub dataset_size: usize,
    pub out: PathBuf,
    pub train: TrainSection,
    pub generation: GenerationSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            game: "zelda".into(),
            goals: PathBuf::from("fixtures/zelda5"),
            goal_limit: None,
            obs_size: 5,
            traversal: Traversal::RandomPermutation.as_str().into(),
            seeds: vec![1, 2, 3],
            dataset_seed: 0,
            dataset_size: 100_000,
            out: PathBuf::from("out"),
            train: TrainSection::default(),
            generation: GenerationSection::default(),
        }
    }
}

pub fn parse_traversal(s: &str) -> Result<Traversal> {
    Traversal::parse(s).ok_or_else(|| PodError::invalid(format!("unknown traversal {s:?} (sequential, random)")))
}

impl RunConfig {
    pub fn game_spec(&self) -> Result<GameSpec> {
        let id: GameId = self.game.parse()?;
        Ok(GameSpec::new(id).with_obs_size(self.obs_size)?)
    }

    pub fn traversal(&self) -> Result<Traversal> {
        parse_traversal(&self.traversal)
    }

    pub fn obs_spec(&self) -> Result<ObservationSpec> {
        let game = self.game_spec()?;
        Ok(ObservationSpec::new(self.obs_size, game.alphabet.len())?)
    }

    pub fn generation_config(&self) -> Result<GenerationConfig> {
        Ok(GenerationConfig::new(self.obs_spec()?)
            .with_traversal(self.traversal()?)
            .with_passes(self.generation.max_passes))
    }

    /// Checks everything that can be checked without touching the disk.
    pub fn validate(&self) -> Result<()> {
        self.obs_spec()?;
        self.traversal()?;
        self.train.to_config().validate()?;
        if self.seeds.is_empty() {
            return Err(PodError::invalid("at least one seed is required"));
        }
        let mut seeds = self.seeds.clone();
        seeds.sort_unstable();
        seeds.dedup();
        if seeds.len() != self.seeds.len() {
            return Err(PodError::invalid("seeds must be distinct"));
        }
        if self.dataset_size == 0 || self.generation.trials == 0 || self.generation.max_passes == 0 {
            return Err(PodError::invalid("dataset_size, trials and max_passes must be positive"));
        }
        if self.goal_limit == Some(0) {
            return Err(PodError::invalid("goal_limit must be positive"));
        }
        if self.train.channels.contains(&0) {
            return Err(PodError::invalid("channels must be positive"));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(io_at(path))?;
        Self::from_toml(&text).map_err(|e| PodError::invalid(format!("{}: {e}", path.display())))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_toml()).map_err(io_at(path))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = RunConfig::default();
        c.validate().unwrap();
        assert_eq!(RunConfig::from_toml(&c.to_toml()).unwrap(), c);
        assert_eq!(RunConfig::from_toml("").unwrap(), c);
    }

    #[test]
    fn edited_config_round_trips() {
        let mut c = RunConfig {
            game: "sokoban".into(),
            goal_limit: Some(2),
            obs_size: 3,
            traversal: "sequential".into(),
            seeds: vec![4],
            ..RunConfig::default()
        };
        c.train.channels = [16, 16, 32];
        c.train.learning_rate = 0.0005;
        c.generation.unique_threshold = 0.25;
        c.validate().unwrap();
        assert_eq!(RunConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn documented_example_matches_defaults() {
        let doc = include_str!("config.rs");
        let example: String = doc
            .lines()
            .skip_while(|l| !l.starts_with("//! ```toml"))
            .skip(1)
            .take_while(|l| !l.starts_with("//! ```"))
            .map(|l| l.trim_start_matches("//!").trim_start())
            .collect::<Vec<_>>()
            .join("\n");
        assert_eq!(RunConfig::from_toml(&example).unwrap(), RunConfig::default());
    }

    #[test]
    fn bad_values_rejected() {
        let bad = [
            "obs_size = 4",
            "traversal = \"spiral\"",
            "seeds = []",
            "seeds = [1, 1]",
            "game = \"mario\"",
            "[train]\nchannels = [0, 4, 4]",
            "[generation]\ntrials = 0",
        ];
        for text in bad {
            let c = RunConfig::from_toml(text).unwrap();
            assert_eq!(c.validate().unwrap_err().exit_code(), 2, "{text}");
        }
        assert!(RunConfig::from_toml("colour = 3").is_err());
    }
}
