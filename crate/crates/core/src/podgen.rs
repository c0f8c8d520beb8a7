//! Training data from destruction trajectories.
//!
//! A goal level is overwritten, one location at a time, with the tiles of a
//! random noise level until it has become that noise level. Each edit yields
//! a training example: the level right after the edit, the edited location,
//! and the tile that was there before. Played backwards, the edits repair
//! noise into the goal.

use alloc::vec::Vec;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::games::{check_playable, GameError, GameSpec};
use crate::rng;
use crate::tilemap::{hamming_distance, normalized_hamming, LevelError, LevelGrid, Pos, Tile};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PodgenError {
    #[error("goal set is empty")]
    EmptyGoalSet,
    #[error("goal level {index} is not playable: {reason}")]
    UnplayableGoal { index: usize, reason: &'static str },
    #[error("crop size {0} must be odd and at least 3")]
    BadCropSize(usize),
    #[error("target example count must be positive")]
    ZeroTarget,
    #[error(transparent)]
    Level(#[from] LevelError),
    #[error(transparent)]
    Game(#[from] GameError),
}

/// Order in which locations are visited.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Traversal {
    /// Row-major from (0,0).
    Sequential,
    /// A fresh uniform permutation of all locations, no repeats.
    RandomPermutation,
}

impl Traversal {
    pub fn as_str(self) -> &'static str {
        match self {
            Traversal::Sequential => "sequential",
            Traversal::RandomPermutation => "random",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "sequential" => Some(Traversal::Sequential),
            "random" | "random-permutation" => Some(Traversal::RandomPermutation),
            _ => None,
        }
    }

    /// One pass worth of locations for a `height`×`width` map.
    pub fn order<R: Rng + ?Sized>(self, height: usize, width: usize, rng: &mut R) -> Vec<Pos> {
        let mut order: Vec<Pos> = (0..height * width)
            .map(|i| Pos::new(i / width, i % width))
            .collect();
        if self == Traversal::RandomPermutation {
            order.shuffle(rng);
        }
        order
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DestroyStep {
    pub pos: Pos,
    pub destroy: Tile,
    pub repair: Tile,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trajectory {
    pub start: LevelGrid,
    pub goal: LevelGrid,
    pub steps: Vec<DestroyStep>,
}

impl Trajectory {
    /// Goal with every destroy edit applied in order.
    pub fn replay_forward(&self) -> LevelGrid {
        let mut level = self.goal.clone();
        for step in &self.steps {
            level.set(step.pos, step.destroy);
        }
        level
    }

    /// Start with every repair edit applied in reverse order.
    pub fn replay_backward(&self) -> LevelGrid {
        let mut level = self.start.clone();
        for step in self.steps.iter().rev() {
            level.set(step.pos, step.repair);
        }
        level
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingExample {
    /// Level right after the destructive edit.
    pub level: LevelGrid,
    pub pos: Pos,
    /// Tile that was at `pos` before the edit.
    pub target: Tile,
}

/// Geometry of the one-hot window fed to the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ObservationSpec {
    pub crop_size: usize,
    /// Alphabet size plus one border channel (the last one).
    pub channel_count: usize,
}

impl ObservationSpec {
    pub fn new(crop_size: usize, tile_count: usize) -> Result<Self, PodgenError> {
        if crop_size < 3 || crop_size.is_multiple_of(2) {
            return Err(PodgenError::BadCropSize(crop_size));
        }
        Ok(Self {
            crop_size,
            channel_count: tile_count + 1,
        })
    }

    pub fn border_channel(&self) -> usize {
        self.channel_count - 1
    }
}

/// One-hot `crop × crop × channels` window, stored as the active channel of
/// each spatial position (row-major).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Observation {
    pub crop_size: usize,
    pub channel_count: usize,
    pub active: Vec<u8>,
}

impl Observation {
    pub fn value(&self, row: usize, col: usize, channel: usize) -> f32 {
        if usize::from(self.active[row * self.crop_size + col]) == channel {
            1.0
        } else {
            0.0
        }
    }

    /// Dense `[row][col][channel]` cube.
    pub fn to_dense(&self) -> Vec<f32> {
        let mut dense = alloc::vec![0.0; self.active.len() * self.channel_count];
        for (i, &ch) in self.active.iter().enumerate() {
            dense[i * self.channel_count + usize::from(ch)] = 1.0;
        }
        dense
    }
}

/// Window of `spec.crop_size` centred on `center`; off-map cells take the
/// border channel.
pub fn crop_observation(level: &LevelGrid, center: Pos, spec: &ObservationSpec) -> Observation {
    let mut active = Vec::with_capacity(spec.crop_size * spec.crop_size);
    crop_into(level, center, spec, &mut active);
    Observation {
        crop_size: spec.crop_size,
        channel_count: spec.channel_count,
        active,
    }
}

pub(crate) fn crop_into(level: &LevelGrid, center: Pos, spec: &ObservationSpec, out: &mut Vec<u8>) {
    debug_assert!(level.contains(center));
    let half = (spec.crop_size / 2) as isize;
    let border = spec.border_channel() as u8;
    out.clear();
    for dr in -half..=half {
        for dc in -half..=half {
            let tile = level.get_signed(center.row as isize + dr, center.col as isize + dc);
            out.push(tile.unwrap_or(border));
        }
    }
}

pub fn sample_start_level<R: Rng + ?Sized>(game: &GameSpec, rng: &mut R) -> LevelGrid {
    let dist = WeightedIndex::new(&game.noise_weights).expect("noise weights validated by GameSpec");
    let cells = (0..game.level_height * game.level_width)
        .map(|_| dist.sample(rng) as Tile)
        .collect();
    LevelGrid::new(game.level_height, game.level_width, cells).expect("dimensions match")
}

/// Goal closest to `start` in Hamming distance; ties go to the lowest index.
pub fn select_goal<'a>(start: &LevelGrid, goals: &'a [LevelGrid]) -> Result<(usize, &'a LevelGrid), PodgenError> {
    let mut best: Option<(usize, usize)> = None;
    for (i, goal) in goals.iter().enumerate() {
        let d = hamming_distance(start, goal)?;
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((i, d));
        }
    }
    let (index, _) = best.ok_or(PodgenError::EmptyGoalSet)?;
    Ok((index, &goals[index]))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DestroyConfig {
    pub traversal: Traversal,
    /// Destruction stops once the normalized Hamming distance to the start
    /// level is at most this. Zero means exact equality.
    pub stop_threshold: f64,
}

impl Default for DestroyConfig {
    fn default() -> Self {
        Self {
            traversal: Traversal::RandomPermutation,
            stop_threshold: 0.0,
        }
    }
}

pub fn destroy_trajectory<R: Rng + ?Sized>(
    goal: &LevelGrid,
    start: &LevelGrid,
    config: &DestroyConfig,
    rng: &mut R,
) -> Result<Trajectory, PodgenError> {
    goal.same_shape(start)?;
    let mut current = goal.clone();
    let mut remaining = hamming_distance(&current, start)?;
    let limit = libm::floor(config.stop_threshold * goal.len() as f64) as usize;
    let mut steps = Vec::new();
    for pos in config.traversal.order(goal.height(), goal.width(), rng) {
        if remaining <= limit {
            break;
        }
        let repair = current.get(pos);
        let destroy = start.get(pos);
        current.set(pos, destroy);
        if repair != destroy {
            remaining -= 1;
        }
        steps.push(DestroyStep { pos, destroy, repair });
    }
    debug_assert!(normalized_hamming(&current, start).unwrap() <= config.stop_threshold);
    Ok(Trajectory {
        start: start.clone(),
        goal: goal.clone(),
        steps,
    })
}

/// One example per step; snapshot `i` is the goal with destroy edits
/// `0..=i` applied.
pub fn trajectory_to_examples(traj: &Trajectory) -> Vec<TrainingExample> {
    let mut level = traj.goal.clone();
    traj.steps
        .iter()
        .map(|step| {
            level.set(step.pos, step.destroy);
            TrainingExample {
                level: level.clone(),
                pos: step.pos,
                target: step.repair,
            }
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct DatasetConfig {
    pub target_examples: usize,
    pub destroy: DestroyConfig,
    pub seed: u64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            target_examples: 100_000,
            destroy: DestroyConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub examples: Vec<TrainingExample>,
    pub trajectories: usize,
}

/// Generates whole trajectories until at least `target_examples` examples
/// exist. Trajectory `i` draws from its own stream derived from the seed,
/// so the output does not depend on how the work is scheduled.
pub fn build_examples(
    game: &GameSpec,
    goals: &[LevelGrid],
    config: &DatasetConfig,
) -> Result<Dataset, PodgenError> {
    if config.target_examples == 0 {
        return Err(PodgenError::ZeroTarget);
    }
    if goals.is_empty() {
        return Err(PodgenError::EmptyGoalSet);
    }
    for (index, goal) in goals.iter().enumerate() {
        let verdict = check_playable(game, goal)?;
        if !verdict.playable {
            return Err(PodgenError::UnplayableGoal {
                index,
                reason: verdict.reason.as_str(),
            });
        }
    }
    let mut examples = Vec::with_capacity(config.target_examples + goals[0].len());
    let mut trajectories = 0u64;
    while examples.len() < config.target_examples {
        let mut rng = rng::derived(config.seed, trajectories);
        let start = sample_start_level(game, &mut rng);
        let (_, goal) = select_goal(&start, goals)?;
        let traj = destroy_trajectory(goal, &start, &config.destroy, &mut rng)?;
        examples.extend(trajectory_to_examples(&traj));
        trajectories += 1;
    }
    Ok(Dataset {
        examples,
        trajectories: trajectories as usize,
    })
}
