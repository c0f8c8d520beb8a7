//! Danger Dave playability: collect the chalice, then reach the door, never
//! touching a spike.
//!
//! The movement model is a small deterministic platformer on the tile grid:
//!
//! * Cells outside the map and `solid` tiles block movement; everything else
//!   is open.
//! * A player standing on a blocking cell may walk one tile left or right,
//!   or jump (optionally drifting left or right).
//! * A jump rises one tile per step for up to two tiles, ending early when a
//!   blocking cell is overhead. Afterwards gravity pulls the player down one
//!   tile per step until they land.
//! * While rising or falling the player may drift one tile sideways per step.
//!   Each step applies the horizontal part first, then the vertical part.
//! * Entering a spike is fatal. The chalice is picked up on entry; entering
//!   the door while holding it wins. Diamonds are decoration.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::games::{tile_histogram, PlayabilityReason, PlayabilityResult};
use crate::tilemap::{LevelGrid, Tile};

pub const EMPTY: Tile = 0;
pub const SOLID: Tile = 1;
pub const PLAYER: Tile = 2;
pub const CHALICE: Tile = 3;
pub const DOOR: Tile = 4;
pub const SPIKE: Tile = 5;
pub const DIAMOND: Tile = 6;

pub const TILES: [(&str, char); 7] = [
    ("empty", '.'),
    ("solid", '#'),
    ("player", 'A'),
    ("chalice", 'H'),
    ("door", 'g'),
    ("spike", 'x'),
    ("diamond", '$'),
];

/// Tiles a jump can rise above the standing row.
pub const JUMP_HEIGHT: u8 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DaveState {
    pub row: usize,
    pub col: usize,
    /// Rising steps still available; zero when standing or falling.
    pub rise: u8,
    pub has_chalice: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Action {
    pub dx: i8,
    pub jump: bool,
}

impl Action {
    pub const ALL: [Action; 6] = [
        Action { dx: -1, jump: false },
        Action { dx: 0, jump: false },
        Action { dx: 1, jump: false },
        Action { dx: -1, jump: true },
        Action { dx: 0, jump: true },
        Action { dx: 1, jump: true },
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    /// The action is not available in this state.
    Invalid,
    Dead,
    Moved(DaveState),
    Won(DaveState),
}

fn blocked(level: &LevelGrid, row: isize, col: isize) -> bool {
    level.get_signed(row, col).is_none_or(|t| t == SOLID)
}

pub fn is_grounded(level: &LevelGrid, s: DaveState) -> bool {
    s.rise == 0 && blocked(level, s.row as isize + 1, s.col as isize)
}

pub fn start_state(level: &LevelGrid) -> Option<DaveState> {
    let index = level.cells().iter().position(|&t| t == PLAYER)?;
    let pos = level.pos_of(index);
    Some(DaveState {
        row: pos.row,
        col: pos.col,
        rise: 0,
        has_chalice: false,
    })
}

/// Advances one step under the movement model.
pub fn step(level: &LevelGrid, s: DaveState, action: Action) -> StepOutcome {
    let grounded = is_grounded(level, s);
    if grounded && !action.jump && action.dx == 0 {
        return StepOutcome::Invalid;
    }
    if !grounded && action.jump {
        return StepOutcome::Invalid;
    }
    let mut next = s;

    // Returns Some(outcome) when entering the cell ends the episode.
    let enter = |next: &mut DaveState| -> Option<StepOutcome> {
        match level.get(crate::tilemap::Pos::new(next.row, next.col)) {
            SPIKE => Some(StepOutcome::Dead),
            CHALICE => {
                next.has_chalice = true;
                None
            }
            DOOR if next.has_chalice => Some(StepOutcome::Won(*next)),
            _ => None,
        }
    };

    if action.dx != 0 {
        let col = s.col as isize + isize::from(action.dx);
        if !blocked(level, s.row as isize, col) {
            next.col = col as usize;
            if let Some(end) = enter(&mut next) {
                return end;
            }
        }
    }

    let (row, col) = (next.row as isize, next.col as isize);
    let vertical = if grounded {
        if action.jump {
            if blocked(level, row - 1, col) {
                next.rise = 0;
                None
            } else {
                next.rise = JUMP_HEIGHT - 1;
                Some(row - 1)
            }
        } else {
            None
        }
    } else if s.rise > 0 {
        if blocked(level, row - 1, col) {
            next.rise = 0;
            None
        } else {
            next.rise = s.rise - 1;
            Some(row - 1)
        }
    } else if blocked(level, row + 1, col) {
        None
    } else {
        Some(row + 1)
    };
    if let Some(row) = vertical {
        next.row = row as usize;
        if let Some(end) = enter(&mut next) {
            return end;
        }
    }
    StepOutcome::Moved(next)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DaveOutcome {
    pub result: PlayabilityResult,
    pub actions: Option<Vec<Action>>,
    pub expanded: usize,
}

fn state_index(level: &LevelGrid, s: DaveState) -> usize {
    let cell = s.row * level.width() + s.col;
    (cell * usize::from(JUMP_HEIGHT) + usize::from(s.rise)) * 2 + usize::from(s.has_chalice)
}

/// Breadth-first search over movement states; gives up after `budget`
/// expansions. The returned action list is a shortest winning sequence.
pub fn search(level: &LevelGrid, budget: usize) -> DaveOutcome {
    let hist = tile_histogram(level, TILES.len());
    if hist[usize::from(PLAYER)] != 1 || hist[usize::from(CHALICE)] != 1 || hist[usize::from(DOOR)] != 1 {
        return DaveOutcome {
            result: PlayabilityResult::fail(PlayabilityReason::BadTileCounts),
            actions: None,
            expanded: 0,
        };
    }
    let start = start_state(level).expect("exactly one player");
    let slots = level.len() * usize::from(JUMP_HEIGHT) * 2;
    let mut parent: Vec<Option<(usize, Action)>> = vec![None; slots];
    let mut seen = vec![false; slots];
    let mut queue = VecDeque::from([start]);
    seen[state_index(level, start)] = true;
    let mut expanded = 0;

    let path_to = |parent: &[Option<(usize, Action)>], mut index: usize, last: Action| {
        let mut actions = vec![last];
        while let Some((prev, action)) = parent[index] {
            actions.push(action);
            index = prev;
        }
        actions.reverse();
        actions
    };

    while let Some(s) = queue.pop_front() {
        if expanded >= budget {
            return DaveOutcome {
                result: PlayabilityResult::fail(PlayabilityReason::BudgetExhausted),
                actions: None,
                expanded,
            };
        }
        expanded += 1;
        let here = state_index(level, s);
        for action in Action::ALL {
            match step(level, s, action) {
                StepOutcome::Invalid | StepOutcome::Dead => {}
                StepOutcome::Won(_) => {
                    let actions = path_to(&parent, here, action);
                    return DaveOutcome {
                        result: PlayabilityResult::solved(actions.len()),
                        actions: Some(actions),
                        expanded,
                    };
                }
                StepOutcome::Moved(next) => {
                    let index = state_index(level, next);
                    if !seen[index] {
                        seen[index] = true;
                        parent[index] = Some((here, action));
                        queue.push_back(next);
                    }
                }
            }
        }
    }
    DaveOutcome {
        result: PlayabilityResult::fail(PlayabilityReason::NoSolution),
        actions: None,
        expanded,
    }
}

pub fn solve_dave(level: &LevelGrid, budget: usize) -> PlayabilityResult {
    search(level, budget).result
}
