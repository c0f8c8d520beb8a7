//! Game definitions and playability checks.
//!
//! Each game fixes its tile alphabet, level size, default observation size,
//! and noise distribution. Playability is decided by a flood fill (Zelda) or
//! a bounded search (Sokoban, Danger Dave).

pub mod dave;
pub mod sokoban;
pub mod zelda;

use alloc::collections::{BTreeSet, VecDeque};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::tilemap::{LevelError, LevelGrid, Pos, Tile, TileAlphabet};

pub const DEFAULT_SOKOBAN_BUDGET: usize = 200_000;
pub const DEFAULT_DAVE_BUDGET: usize = 100_000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GameError {
    #[error("unknown game {0:?} (expected zelda, sokoban, or dave)")]
    UnknownGame(alloc::string::String),
    #[error("level is {found_h}x{found_w}, {game} levels are {want_h}x{want_w}")]
    WrongDimensions {
        game: GameId,
        want_h: usize,
        want_w: usize,
        found_h: usize,
        found_w: usize,
    },
    #[error("observation size {0} must be odd and at least 3")]
    BadObsSize(usize),
    #[error("noise weights need {expected} non-negative entries summing to 1, got {found:?}")]
    BadNoiseWeights { expected: usize, found: Vec<f64> },
    #[error(transparent)]
    Level(#[from] LevelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GameId {
    Zelda,
    Sokoban,
    Dave,
}

impl GameId {
    pub const ALL: [GameId; 3] = [GameId::Zelda, GameId::Sokoban, GameId::Dave];

    pub fn as_str(self) -> &'static str {
        match self {
            GameId::Zelda => "zelda",
            GameId::Sokoban => "sokoban",
            GameId::Dave => "dave",
        }
    }
}

impl fmt::Display for GameId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GameId {
    type Err = GameError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "zelda" => Ok(GameId::Zelda),
            "sokoban" => Ok(GameId::Sokoban),
            "dave" | "danger-dave" | "ddave" => Ok(GameId::Dave),
            other => Err(GameError::UnknownGame(other.into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GameSpec {
    pub id: GameId,
    pub alphabet: TileAlphabet,
    pub level_height: usize,
    pub level_width: usize,
    pub default_obs_size: usize,
    pub noise_weights: Vec<f64>,
    pub solver_budget: usize,
}

impl GameSpec {
    pub fn new(id: GameId) -> Self {
        let (tiles, height, width, obs, budget): (&[(&str, char)], _, _, _, _) = match id {
            GameId::Zelda => (&zelda::TILES, 7, 11, 5, 0),
            GameId::Sokoban => (&sokoban::TILES, 5, 5, 3, DEFAULT_SOKOBAN_BUDGET),
            GameId::Dave => (&dave::TILES, 7, 11, 5, DEFAULT_DAVE_BUDGET),
        };
        let alphabet = TileAlphabet::new(id.as_str(), tiles).expect("built-in alphabet is valid");
        let n = alphabet.len();
        Self {
            id,
            alphabet,
            level_height: height,
            level_width: width,
            default_obs_size: obs,
            noise_weights: vec![1.0 / n as f64; n],
            solver_budget: budget,
        }
    }

    pub fn zelda() -> Self {
        Self::new(GameId::Zelda)
    }

    pub fn sokoban() -> Self {
        Self::new(GameId::Sokoban)
    }

    pub fn dave() -> Self {
        Self::new(GameId::Dave)
    }

    pub fn with_noise_weights(mut self, weights: Vec<f64>) -> Result<Self, GameError> {
        let sum: f64 = weights.iter().sum();
        if weights.len() != self.alphabet.len()
            || weights.iter().any(|w| w.is_nan() || *w < 0.0)
            || (sum - 1.0).abs() > 1e-9
        {
            return Err(GameError::BadNoiseWeights {
                expected: self.alphabet.len(),
                found: weights,
            });
        }
        self.noise_weights = weights;
        Ok(self)
    }

    pub fn with_obs_size(mut self, obs: usize) -> Result<Self, GameError> {
        if obs < 3 || obs.is_multiple_of(2) {
            return Err(GameError::BadObsSize(obs));
        }
        self.default_obs_size = obs;
        Ok(self)
    }

    pub fn with_solver_budget(mut self, budget: usize) -> Self {
        self.solver_budget = budget;
        self
    }

    pub fn check_dims(&self, level: &LevelGrid) -> Result<(), GameError> {
        if level.dims() == (self.level_height, self.level_width) {
            Ok(())
        } else {
            Err(GameError::WrongDimensions {
                game: self.id,
                want_h: self.level_height,
                want_w: self.level_width,
                found_h: level.height(),
                found_w: level.width(),
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PlayabilityReason {
    Ok,
    BadTileCounts,
    UnreachableObjective,
    BudgetExhausted,
    NoSolution,
}

impl PlayabilityReason {
    pub fn as_str(self) -> &'static str {
        match self {
            PlayabilityReason::Ok => "ok",
            PlayabilityReason::BadTileCounts => "bad tile counts",
            PlayabilityReason::UnreachableObjective => "unreachable objective",
            PlayabilityReason::BudgetExhausted => "solver budget exhausted",
            PlayabilityReason::NoSolution => "no solution",
        }
    }
}

impl fmt::Display for PlayabilityReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PlayabilityResult {
    pub playable: bool,
    pub reason: PlayabilityReason,
    /// Moves in the solver's solution; only set by search-based checkers.
    pub solution_length: Option<usize>,
}

impl PlayabilityResult {
    pub const fn fail(reason: PlayabilityReason) -> Self {
        Self {
            playable: false,
            reason,
            solution_length: None,
        }
    }

    pub const fn reachable() -> Self {
        Self {
            playable: true,
            reason: PlayabilityReason::Ok,
            solution_length: None,
        }
    }

    pub const fn solved(moves: usize) -> Self {
        Self {
            playable: true,
            reason: PlayabilityReason::Ok,
            solution_length: Some(moves),
        }
    }
}

impl fmt::Display for PlayabilityResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.playable {
            match self.solution_length {
                Some(moves) => write!(f, "playable, moves={moves}"),
                None => f.write_str("playable"),
            }
        } else {
            write!(f, "unplayable, {}", self.reason)
        }
    }
}

pub fn count_tiles(level: &LevelGrid, tile: Tile) -> usize {
    level.cells().iter().filter(|&&t| t == tile).count()
}

/// Occurrences of each tile index, indexed by tile.
pub fn tile_histogram(level: &LevelGrid, tile_count: usize) -> Vec<usize> {
    let mut hist = vec![0; tile_count];
    for &t in level.cells() {
        hist[usize::from(t)] += 1;
    }
    hist
}

/// 4-connected flood fill from `from` over cells whose tile satisfies
/// `passable`, returned as a row-major membership mask. The start cell is
/// always included.
pub fn reachable_mask(level: &LevelGrid, from: Pos, passable: impl Fn(Tile) -> bool) -> Vec<bool> {
    let mut seen = vec![false; level.len()];
    let mut queue = VecDeque::new();
    seen[level.index_of(from)] = true;
    queue.push_back(from);
    while let Some(p) = queue.pop_front() {
        for (dr, dc) in [(-1isize, 0isize), (1, 0), (0, -1), (0, 1)] {
            let (r, c) = (p.row as isize + dr, p.col as isize + dc);
            if let Some(tile) = level.get_signed(r, c) {
                let q = Pos::new(r as usize, c as usize);
                let idx = level.index_of(q);
                if !seen[idx] && passable(tile) {
                    seen[idx] = true;
                    queue.push_back(q);
                }
            }
        }
    }
    seen
}

/// Positions reachable from `from` through tiles in `passable`.
pub fn reachable_set(level: &LevelGrid, from: Pos, passable: &[Tile]) -> BTreeSet<Pos> {
    reachable_mask(level, from, |t| passable.contains(&t))
        .into_iter()
        .enumerate()
        .filter(|(_, hit)| *hit)
        .map(|(i, _)| level.pos_of(i))
        .collect()
}

pub fn check_playable(game: &GameSpec, level: &LevelGrid) -> Result<PlayabilityResult, GameError> {
    game.check_dims(level)?;
    Ok(match game.id {
        GameId::Zelda => zelda::check_zelda(level),
        GameId::Sokoban => sokoban::solve_sokoban(level, game.solver_budget),
        GameId::Dave => dave::solve_dave(level, game.solver_budget),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use crate::tilemap::parse_level;
    use rand::Rng;

    #[test]
    fn built_in_specs_hold_invariants() {
        for id in GameId::ALL {
            let g = GameSpec::new(id);
            assert!(g.default_obs_size % 2 == 1 && g.default_obs_size >= 3);
            let sum: f64 = g.noise_weights.iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
            assert_eq!(g.alphabet.border_sentinel(), g.alphabet.len());
            assert_eq!(id.as_str().parse::<GameId>().unwrap(), id);
        }
        assert_eq!((GameSpec::zelda().level_height, GameSpec::zelda().level_width), (7, 11));
        assert_eq!((GameSpec::dave().level_height, GameSpec::dave().level_width), (7, 11));
        assert_eq!((GameSpec::sokoban().level_height, GameSpec::sokoban().level_width), (5, 5));
        assert_eq!(GameSpec::zelda().alphabet.len(), 8);
    }

    #[test]
    fn noise_weights_are_validated() {
        assert!(GameSpec::sokoban().with_noise_weights(vec![0.5, 0.5]).is_err());
        assert!(GameSpec::sokoban()
            .with_noise_weights(vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0])
            .is_ok());
        assert!(GameSpec::sokoban().with_obs_size(4).is_err());
    }

    #[test]
    fn count_tiles_examples() {
        let z = GameSpec::zelda();
        let empty = LevelGrid::filled(7, 11, zelda::EMPTY);
        assert_eq!(count_tiles(&empty, zelda::WALL), 0);
        let walls = LevelGrid::filled(7, 11, zelda::WALL);
        assert_eq!(count_tiles(&walls, zelda::WALL), 77);
        let two_keys = parse_level("A+.\n.+g", &z.alphabet).unwrap();
        assert_eq!(count_tiles(&two_keys, zelda::KEY), 2);
    }

    #[test]
    fn reachable_set_examples() {
        let open = LevelGrid::new(1, 3, vec![0, 0, 0]).unwrap();
        let all: BTreeSet<Pos> = [Pos::new(0, 0), Pos::new(0, 1), Pos::new(0, 2)].into();
        assert_eq!(reachable_set(&open, Pos::new(0, 0), &[0]), all);
        let blocked = LevelGrid::new(1, 3, vec![0, 1, 0]).unwrap();
        let only: BTreeSet<Pos> = [Pos::new(0, 0)].into();
        assert_eq!(reachable_set(&blocked, Pos::new(0, 0), &[0]), only);
    }

    /// Transitive closure by repeated relaxation of the adjacency relation.
    fn closure_oracle(level: &LevelGrid, from: Pos, passable: &[Tile]) -> BTreeSet<Pos> {
        let mut reach = BTreeSet::from([from]);
        loop {
            let mut grew = false;
            for p in level.positions() {
                if reach.contains(&p) || !passable.contains(&level.get(p)) {
                    continue;
                }
                let adjacent = reach
                    .iter()
                    .any(|q| q.row.abs_diff(p.row) + q.col.abs_diff(p.col) == 1);
                if adjacent {
                    reach.insert(p);
                    grew = true;
                }
            }
            if !grew {
                return reach;
            }
        }
    }

    #[test]
    fn reachable_set_matches_closure_oracle() {
        let mut rng = rng::seeded(11);
        for _ in 0..300 {
            let cells = (0..77).map(|_| if rng.gen_bool(0.4) { 1 } else { 0 }).collect();
            let level = LevelGrid::new(7, 11, cells).unwrap();
            let from = Pos::new(rng.gen_range(0..7), rng.gen_range(0..11));
            assert_eq!(
                reachable_set(&level, from, &[0]),
                closure_oracle(&level, from, &[0])
            );
        }
    }

    #[test]
    fn check_playable_dispatch() {
        let z = GameSpec::zelda();
        let open = parse_level(
            "...........\n.A.........\n...........\n.....+.....\n...........\n.........g.\n...........",
            &z.alphabet,
        )
        .unwrap();
        assert!(check_playable(&z, &open).unwrap().playable);

        let s = GameSpec::sokoban();
        let two_crates = parse_level("#####\n#@$$#\n#o..#\n#...#\n#####", &s.alphabet).unwrap();
        let r = check_playable(&s, &two_crates).unwrap();
        assert_eq!(r.reason, PlayabilityReason::BadTileCounts);

        let d = GameSpec::dave();
        let no_door = parse_level(
            "...........\n...........\n...........\n...........\n...........\n.A...H.....\n###########",
            &d.alphabet,
        )
        .unwrap();
        assert_eq!(
            check_playable(&d, &no_door).unwrap().reason,
            PlayabilityReason::BadTileCounts
        );

        let wrong = LevelGrid::filled(5, 5, 0);
        assert!(matches!(
            check_playable(&z, &wrong),
            Err(GameError::WrongDimensions { .. })
        ));
    }

    #[test]
    fn display_forms() {
        assert_eq!(PlayabilityResult::solved(1).to_string(), "playable, moves=1");
        assert_eq!(
            PlayabilityResult::fail(PlayabilityReason::BudgetExhausted).to_string(),
            "unplayable, solver budget exhausted"
        );
    }
}
