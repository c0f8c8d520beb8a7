//! Zelda dungeon rooms: the player must be able to walk to both the key and
//! the door. Enemies do not block movement since the player can fight them.

use crate::games::{reachable_mask, tile_histogram, PlayabilityReason, PlayabilityResult};
use crate::tilemap::{LevelGrid, Tile};

pub const EMPTY: Tile = 0;
pub const WALL: Tile = 1;
pub const PLAYER: Tile = 2;
pub const KEY: Tile = 3;
pub const DOOR: Tile = 4;
pub const BAT: Tile = 5;
pub const SCORPION: Tile = 6;
pub const SPIDER: Tile = 7;

pub const TILES: [(&str, char); 8] = [
    ("empty", '.'),
    ("wall", 'w'),
    ("player", 'A'),
    ("key", '+'),
    ("door", 'g'),
    ("bat", '1'),
    ("scorpion", '2'),
    ("spider", '3'),
];

pub fn is_enemy(tile: Tile) -> bool {
    matches!(tile, BAT | SCORPION | SPIDER)
}

pub fn check_zelda(level: &LevelGrid) -> PlayabilityResult {
    let hist = tile_histogram(level, TILES.len());
    if hist[usize::from(PLAYER)] != 1 || hist[usize::from(KEY)] != 1 || hist[usize::from(DOOR)] != 1 {
        return PlayabilityResult::fail(PlayabilityReason::BadTileCounts);
    }
    let find = |tile| level.cells().iter().position(|&t| t == tile).unwrap();
    let player = level.pos_of(find(PLAYER));
    let reach = reachable_mask(level, player, |t| t != WALL);
    if reach[find(KEY)] && reach[find(DOOR)] {
        PlayabilityResult::reachable()
    } else {
        PlayabilityResult::fail(PlayabilityReason::UnreachableObjective)
    }
}
