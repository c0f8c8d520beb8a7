//! Output metrics: playability, uniqueness against the goals and earlier
//! outputs, exact duplicates, and their spread across trained networks.

use alloc::vec::Vec;

use hashbrown::HashSet;

use crate::games::GameSpec;
use crate::generator::{batch_generate, GenerationConfig, GenerationError, GenerationTrace};
use crate::nn::Network;
use crate::tilemap::{normalized_hamming, LevelError, LevelGrid};

pub const DEFAULT_UNIQUE_THRESHOLD: f64 = 0.10;

/// Indices of the levels kept by a greedy scan in input order. A level is
/// kept when its normalized Hamming distance is at least `threshold` to
/// every goal and to every level kept before it.
pub fn dedup_unique(levels: &[LevelGrid], goals: &[LevelGrid], threshold: f64) -> Result<Vec<usize>, LevelError> {
    let mut kept: Vec<usize> = Vec::new();
    'levels: for (i, level) in levels.iter().enumerate() {
        for other in goals.iter().chain(kept.iter().map(|&k| &levels[k])) {
            if normalized_hamming(level, other)? < threshold {
                continue 'levels;
            }
        }
        kept.push(i);
    }
    Ok(kept)
}

/// Percentage of levels that exactly equal some earlier level.
pub fn duplicate_pct(levels: &[LevelGrid]) -> f64 {
    if levels.is_empty() {
        return 0.0;
    }
    let mut seen = HashSet::with_capacity(levels.len());
    let dupes = levels.iter().filter(|l| !seen.insert(*l)).count();
    100.0 * dupes as f64 / levels.len() as f64
}

/// Mean and sample standard deviation (n − 1 denominator; 0 when n = 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aggregate {
    pub mean: f64,
    pub std: f64,
}

impl Aggregate {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self { mean: 0.0, std: 0.0 };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n < 2 {
            0.0
        } else {
            let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
            libm::sqrt(ss / (n - 1) as f64)
        };
        Self { mean, std }
    }
}

/// Metrics for the outputs of one network.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedMetrics {
    pub trials: usize,
    pub playable: usize,
    pub playable_unique: usize,
    pub playable_pct: f64,
    pub playable_unique_pct: f64,
    /// Exact duplicates among the playable outputs.
    pub duplicate_pct: f64,
}

impl SeedMetrics {
    /// `playable` flags which of `levels` passed the playability check.
    pub fn from_levels(
        levels: &[LevelGrid],
        playable: &[bool],
        goals: &[LevelGrid],
        threshold: f64,
    ) -> Result<Self, LevelError> {
        assert_eq!(levels.len(), playable.len());
        let ok: Vec<LevelGrid> = levels
            .iter()
            .zip(playable)
            .filter(|(_, &p)| p)
            .map(|(l, _)| l.clone())
            .collect();
        let unique = dedup_unique(&ok, goals, threshold)?.len();
        let trials = levels.len();
        let pct = |n: usize| if trials == 0 { 0.0 } else { 100.0 * n as f64 / trials as f64 };
        Ok(Self {
            trials,
            playable: ok.len(),
            playable_unique: unique,
            playable_pct: pct(ok.len()),
            playable_unique_pct: pct(unique),
            duplicate_pct: duplicate_pct(&ok),
        })
    }

    pub fn from_traces(traces: &[GenerationTrace], goals: &[LevelGrid], threshold: f64) -> Result<Self, LevelError> {
        let levels: Vec<LevelGrid> = traces.iter().map(|t| t.final_level.clone()).collect();
        let playable: Vec<bool> = traces.iter().map(|t| t.verdict.playable).collect();
        Self::from_levels(&levels, &playable, goals, threshold)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsSummary {
    pub per_seed: Vec<SeedMetrics>,
    pub playable: Aggregate,
    pub playable_unique: Aggregate,
    pub duplicate: Aggregate,
}

impl MetricsSummary {
    pub fn from_seeds(per_seed: Vec<SeedMetrics>) -> Self {
        let col = |f: fn(&SeedMetrics) -> f64| Aggregate::of(&per_seed.iter().map(f).collect::<Vec<_>>());
        Self {
            playable: col(|m| m.playable_pct),
            playable_unique: col(|m| m.playable_unique_pct),
            duplicate: col(|m| m.duplicate_pct),
            per_seed,
        }
    }

    pub fn single_seed(&self) -> bool {
        self.per_seed.len() == 1
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("no networks to evaluate")]
    NoNetworks,
    #[error(transparent)]
    Generation(#[from] GenerationError),
    #[error(transparent)]
    Level(#[from] LevelError),
}

/// Runs `trials` generations per network (all networks see the same noise
/// streams under `master_seed`) and scores each network's outputs
/// separately.
pub fn evaluate(
    networks: &[Network],
    game: &GameSpec,
    goals: &[LevelGrid],
    config: &GenerationConfig,
    trials: usize,
    master_seed: u64,
) -> Result<(MetricsSummary, Vec<Vec<GenerationTrace>>), EvalError> {
    if networks.is_empty() {
        return Err(EvalError::NoNetworks);
    }
    let mut per_seed = Vec::with_capacity(networks.len());
    let mut traces = Vec::with_capacity(networks.len());
    for net in networks {
        let t = batch_generate(net, game, config, trials, master_seed)?;
        per_seed.push(SeedMetrics::from_traces(&t, goals, DEFAULT_UNIQUE_THRESHOLD)?);
        traces.push(t);
    }
    Ok((MetricsSummary::from_seeds(per_seed), traces))
}
