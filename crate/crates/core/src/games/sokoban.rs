//! Sokoban playability via A* over (player, crate set) states.
//!
//! Cells outside the grid behave as walls. Every walk or push costs one
//! move. The heuristic sums, over crates, the Manhattan distance to the
//! nearest target; a push moves one crate by one cell, so it is admissible
//! and consistent and the returned solution is shortest in moves.

use alloc::collections::BinaryHeap;
use alloc::vec::Vec;
use core::cmp::{Ordering, Reverse};

use hashbrown::HashMap;

use crate::games::{tile_histogram, PlayabilityReason, PlayabilityResult};
use crate::tilemap::{LevelGrid, Tile};

pub const EMPTY: Tile = 0;
pub const WALL: Tile = 1;
pub const PLAYER: Tile = 2;
pub const CRATE: Tile = 3;
pub const TARGET: Tile = 4;
pub const CRATE_ON_TARGET: Tile = 5;
pub const PLAYER_ON_TARGET: Tile = 6;

pub const TILES: [(&str, char); 7] = [
    ("empty", '.'),
    ("wall", '#'),
    ("player", '@'),
    ("crate", '$'),
    ("target", 'o'),
    ("crate_on_target", '*'),
    ("player_on_target", '%'),
];

/// Largest board the bitset state encoding supports.
pub const MAX_CELLS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dir {
    Up,
    Down,
    Left,
    Right,
}

impl Dir {
    pub const ALL: [Dir; 4] = [Dir::Up, Dir::Down, Dir::Left, Dir::Right];

    pub fn delta(self) -> (isize, isize) {
        match self {
            Dir::Up => (-1, 0),
            Dir::Down => (1, 0),
            Dir::Left => (0, -1),
            Dir::Right => (0, 1),
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Dir::Up => 'u',
            Dir::Down => 'd',
            Dir::Left => 'l',
            Dir::Right => 'r',
        }
    }
}

/// Static part of a puzzle: walls and targets as cell bitsets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Board {
    pub height: usize,
    pub width: usize,
    pub walls: u64,
    pub targets: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct State {
    pub player: u8,
    pub crates: u64,
}

impl State {
    fn key(self) -> u128 {
        (u128::from(self.crates) << 8) | u128::from(self.player)
    }
}

impl Board {
    /// Neighbouring cell index, or `None` off the board.
    pub fn step(&self, cell: usize, dir: Dir) -> Option<usize> {
        let (dr, dc) = dir.delta();
        let r = (cell / self.width) as isize + dr;
        let c = (cell % self.width) as isize + dc;
        if r < 0 || c < 0 || r as usize >= self.height || c as usize >= self.width {
            None
        } else {
            Some(r as usize * self.width + c as usize)
        }
    }

    fn open(&self, cell: usize) -> bool {
        self.walls & (1 << cell) == 0
    }

    /// Walks or pushes; `None` when the move is blocked.
    pub fn apply(&self, state: State, dir: Dir) -> Option<State> {
        let next = self.step(usize::from(state.player), dir)?;
        if !self.open(next) {
            return None;
        }
        let mut crates = state.crates;
        if crates & (1 << next) != 0 {
            let beyond = self.step(next, dir)?;
            if !self.open(beyond) || crates & (1 << beyond) != 0 {
                return None;
            }
            crates = (crates & !(1 << next)) | (1 << beyond);
        }
        Some(State {
            player: next as u8,
            crates,
        })
    }

    pub fn is_solved(&self, state: State) -> bool {
        state.crates & !self.targets == 0
    }
}

/// Splits a level into board and initial state after checking tile counts:
/// one player, and as many crates as targets (at least one).
pub fn decode(level: &LevelGrid) -> Result<(Board, State), PlayabilityReason> {
    assert!(
        level.len() <= MAX_CELLS,
        "sokoban boards are limited to {MAX_CELLS} cells"
    );
    let hist = tile_histogram(level, TILES.len());
    let players = hist[usize::from(PLAYER)] + hist[usize::from(PLAYER_ON_TARGET)];
    let crates = hist[usize::from(CRATE)] + hist[usize::from(CRATE_ON_TARGET)];
    let targets = hist[usize::from(TARGET)]
        + hist[usize::from(CRATE_ON_TARGET)]
        + hist[usize::from(PLAYER_ON_TARGET)];
    if players != 1 || crates != targets || crates == 0 {
        return Err(PlayabilityReason::BadTileCounts);
    }
    let mut board = Board {
        height: level.height(),
        width: level.width(),
        walls: 0,
        targets: 0,
    };
    let mut state = State { player: 0, crates: 0 };
    for (i, &tile) in level.cells().iter().enumerate() {
        let bit = 1u64 << i;
        match tile {
            WALL => board.walls |= bit,
            PLAYER => state.player = i as u8,
            PLAYER_ON_TARGET => {
                state.player = i as u8;
                board.targets |= bit;
            }
            CRATE => state.crates |= bit,
            TARGET => board.targets |= bit,
            CRATE_ON_TARGET => {
                state.crates |= bit;
                board.targets |= bit;
            }
            _ => {}
        }
    }
    Ok((board, state))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchOutcome {
    pub result: PlayabilityResult,
    pub moves: Option<Vec<Dir>>,
    pub expanded: usize,
}

struct OpenEntry {
    f: usize,
    g: usize,
    order: usize,
    state: State,
}

impl PartialEq for OpenEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for OpenEntry {}
impl PartialOrd for OpenEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for OpenEntry {
    // max-heap: lowest f first, then deepest g, then oldest insertion
    fn cmp(&self, other: &Self) -> Ordering {
        (Reverse(self.f), self.g, Reverse(self.order)).cmp(&(
            Reverse(other.f),
            other.g,
            Reverse(other.order),
        ))
    }
}

fn heuristic(crates: u64, target_distance: &[usize]) -> usize {
    let mut bits = crates;
    let mut total = 0;
    while bits != 0 {
        let cell = bits.trailing_zeros() as usize;
        total += target_distance[cell];
        bits &= bits - 1;
    }
    total
}

/// A* search that gives up after `budget` node expansions.
pub fn search(level: &LevelGrid, budget: usize) -> SearchOutcome {
    let (board, start) = match decode(level) {
        Ok(decoded) => decoded,
        Err(reason) => {
            return SearchOutcome {
                result: PlayabilityResult::fail(reason),
                moves: None,
                expanded: 0,
            }
        }
    };
    let target_cells: Vec<usize> = (0..level.len()).filter(|&i| board.targets & (1 << i) != 0).collect();
    let target_distance: Vec<usize> = (0..level.len())
        .map(|i| {
            let (r, c) = (i / board.width, i % board.width);
            target_cells
                .iter()
                .map(|&t| r.abs_diff(t / board.width) + c.abs_diff(t % board.width))
                .min()
                .unwrap_or(0)
        })
        .collect();

    // best g and parent link per discovered state
    let mut nodes: HashMap<u128, (usize, Option<(State, Dir)>)> = HashMap::new();
    let mut closed: HashMap<u128, ()> = HashMap::new();
    let mut open = BinaryHeap::new();
    let mut order = 0;
    nodes.insert(start.key(), (0, None));
    open.push(OpenEntry {
        f: heuristic(start.crates, &target_distance),
        g: 0,
        order,
        state: start,
    });
    let mut expanded = 0;

    while let Some(entry) = open.pop() {
        let key = entry.state.key();
        if closed.contains_key(&key) || nodes[&key].0 < entry.g {
            continue;
        }
        if board.is_solved(entry.state) {
            let mut moves = Vec::with_capacity(entry.g);
            let mut cursor = entry.state;
            while let Some((parent, dir)) = nodes[&cursor.key()].1 {
                moves.push(dir);
                cursor = parent;
            }
            moves.reverse();
            return SearchOutcome {
                result: PlayabilityResult::solved(moves.len()),
                moves: Some(moves),
                expanded,
            };
        }
        if expanded >= budget {
            return SearchOutcome {
                result: PlayabilityResult::fail(PlayabilityReason::BudgetExhausted),
                moves: None,
                expanded,
            };
        }
        expanded += 1;
        closed.insert(key, ());
        for dir in Dir::ALL {
            let Some(next) = board.apply(entry.state, dir) else {
                continue;
            };
            let next_key = next.key();
            let g = entry.g + 1;
            if closed.contains_key(&next_key) {
                continue;
            }
            if nodes.get(&next_key).is_some_and(|&(best, _)| best <= g) {
                continue;
            }
            nodes.insert(next_key, (g, Some((entry.state, dir))));
            order += 1;
            open.push(OpenEntry {
                f: g + heuristic(next.crates, &target_distance),
                g,
                order,
                state: next,
            });
        }
    }
    SearchOutcome {
        result: PlayabilityResult::fail(PlayabilityReason::NoSolution),
        moves: None,
        expanded,
    }
}

pub fn solve_sokoban(level: &LevelGrid, budget: usize) -> PlayabilityResult {
    search(level, budget).result
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::GameSpec;
    use crate::rng;
    use crate::tilemap::parse_level;
    use alloc::collections::{BTreeMap, VecDeque};
    use rand::seq::SliceRandom;
    use rand::Rng;

    fn level(text: &str) -> LevelGrid {
        parse_level(text, &GameSpec::sokoban().alphabet).unwrap()
    }

    /// Replays moves with a tile-level simulation independent of the bitset
    /// encoding used by the solver.
    fn replay_solves(level: &LevelGrid, moves: &[Dir]) -> bool {
        let (h, w) = (level.height() as isize, level.width() as isize);
        let at = |r: isize, c: isize| (r * w + c) as usize;
        let mut tiles: Vec<Tile> = level.cells().to_vec();
        let mut player = tiles
            .iter()
            .position(|&t| t == PLAYER || t == PLAYER_ON_TARGET)
            .unwrap();
        let has_crate = |t: Tile| t == CRATE || t == CRATE_ON_TARGET;
        let is_target = |t: Tile| matches!(t, TARGET | CRATE_ON_TARGET | PLAYER_ON_TARGET);
        for &dir in moves {
            let (dr, dc) = dir.delta();
            let (r, c) = ((player / w as usize) as isize, (player % w as usize) as isize);
            let (r1, c1) = (r + dr, c + dc);
            if r1 < 0 || c1 < 0 || r1 >= h || c1 >= w || tiles[at(r1, c1)] == WALL {
                return false;
            }
            if has_crate(tiles[at(r1, c1)]) {
                let (r2, c2) = (r1 + dr, c1 + dc);
                if r2 < 0 || c2 < 0 || r2 >= h || c2 >= w {
                    return false;
                }
                let t2 = tiles[at(r2, c2)];
                if t2 == WALL || has_crate(t2) {
                    return false;
                }
                tiles[at(r2, c2)] = if is_target(t2) { CRATE_ON_TARGET } else { CRATE };
            }
            let t1 = tiles[at(r1, c1)];
            tiles[at(r1, c1)] = if is_target(t1) { PLAYER_ON_TARGET } else { PLAYER };
            tiles[player] = if is_target(tiles[player]) { TARGET } else { EMPTY };
            player = at(r1, c1);
        }
        !tiles.contains(&CRATE)
    }

    /// Exhaustive breadth-first search over the full reachable state space;
    /// returns the shortest solution length if any.
    fn bfs_oracle(level: &LevelGrid) -> Option<usize> {
        let (board, start) = decode(level).ok()?;
        let mut dist = BTreeMap::from([(start, 0usize)]);
        let mut queue = VecDeque::from([start]);
        while let Some(s) = queue.pop_front() {
            let d = dist[&s];
            if board.is_solved(s) {
                return Some(d);
            }
            for dir in Dir::ALL {
                if let Some(n) = board.apply(s, dir) {
                    if let alloc::collections::btree_map::Entry::Vacant(e) = dist.entry(n) {
                        e.insert(d + 1);
                        queue.push_back(n);
                    }
                }
            }
        }
        None
    }

    #[test]
    fn single_push() {
        let lvl = level("#####\n#@$o#\n#####\n#####\n#####");
        let out = search(&lvl, 1000);
        assert_eq!(out.result, PlayabilityResult::solved(1));
        assert_eq!(out.moves.unwrap(), [Dir::Right]);
    }

    #[test]
    fn corner_crate_is_dead() {
        let lvl = level("#####\n#$..#\n#.@.#\n#..o#\n#####");
        assert_eq!(
            solve_sokoban(&lvl, 200_000).reason,
            PlayabilityReason::NoSolution
        );
    }

    #[test]
    fn tight_budget_is_reported_separately() {
        let lvl = level(".....\n.@...\n..$..\n.....\n....o");
        assert!(solve_sokoban(&lvl, 200_000).playable);
        assert_eq!(
            solve_sokoban(&lvl, 1).reason,
            PlayabilityReason::BudgetExhausted
        );
    }

    #[test]
    fn already_solved_and_composites() {
        let lvl = level("#####\n#@*.#\n#...#\n#...#\n#####");
        assert_eq!(solve_sokoban(&lvl, 10), PlayabilityResult::solved(0));
        let lvl = level("#####\n#%$.#\n#...#\n#...#\n#####");
        assert_eq!(solve_sokoban(&lvl, 100), PlayabilityResult::solved(5));
        let bad = level("#####\n#@$$#\n#o..#\n#...#\n#####");
        assert_eq!(solve_sokoban(&bad, 10).reason, PlayabilityReason::BadTileCounts);
        let none = level("#####\n#@..#\n#...#\n#...#\n#####");
        assert_eq!(solve_sokoban(&none, 10).reason, PlayabilityReason::BadTileCounts);
    }

    fn random_instance(rng: &mut rng::PodRng) -> LevelGrid {
        let mut cells = [EMPTY; 25];
        for cell in cells.iter_mut() {
            if rng.gen_bool(0.25) {
                *cell = WALL;
            }
        }
        let mut free: Vec<usize> = (0..25).collect();
        free.shuffle(rng);
        let crates = rng.gen_range(1..=2);
        let player = free.pop().unwrap();
        cells[player] = PLAYER;
        for _ in 0..crates {
            let t = free.pop().unwrap();
            cells[t] = TARGET;
        }
        for _ in 0..crates {
            let c = free.pop().unwrap();
            cells[c] = CRATE;
        }
        // occasionally start with a crate already home
        if rng.gen_bool(0.1) {
            if let Some(t) = cells.iter().position(|&t| t == TARGET) {
                if let Some(c) = cells.iter().position(|&t| t == CRATE) {
                    cells[t] = CRATE_ON_TARGET;
                    cells[c] = EMPTY;
                }
            }
        }
        LevelGrid::new(5, 5, cells.to_vec()).unwrap()
    }

    #[test]
    fn astar_matches_bfs_oracle() {
        let mut rng = rng::seeded(2024);
        let mut solvable = 0;
        for _ in 0..600 {
            let lvl = random_instance(&mut rng);
            let out = search(&lvl, 200_000);
            let oracle = bfs_oracle(&lvl);
            assert_eq!(out.result.playable, oracle.is_some(), "{lvl:?}");
            assert_eq!(out.result.solution_length, oracle);
            if let Some(moves) = out.moves {
                assert!(replay_solves(&lvl, &moves));
                solvable += 1;
            }
        }
        assert!(solvable > 50, "suite too easy to be informative: {solvable}");
    }
}
