//! Level grids, tile alphabets, distances, and the plain-text level format.
//!
//! A level is stored as compact tile indices in row-major order, addressed
//! by `(row, col)` from the top-left corner. The alphabet owns the mapping
//! between indices, names, and the single ASCII character each tile uses in
//! the text format.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

/// Index of a tile within its game's alphabet.
pub type Tile = u8;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LevelError {
    #[error("alphabet needs at least 2 tiles, got {0}")]
    AlphabetTooSmall(usize),
    #[error("alphabet has {0} tiles, at most 255 are supported")]
    AlphabetTooLarge(usize),
    #[error("character {0:?} is used by more than one tile")]
    DuplicateChar(char),
    #[error("tile character {0:?} is not printable ASCII")]
    NonAsciiChar(char),
    #[error("level text is empty")]
    Empty,
    #[error("ragged row {row}: expected {expected} tiles, found {found}")]
    RaggedRow { row: usize, expected: usize, found: usize },
    #[error("unknown character {ch:?} at ({row},{col})")]
    UnknownChar { row: usize, col: usize, ch: char },
    #[error("grid of {height}x{width} needs {expected} cells, got {found}")]
    CellCount { height: usize, width: usize, expected: usize, found: usize },
    #[error("dimension mismatch: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
}

/// A grid coordinate, row first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pos {
    pub row: usize,
    pub col: usize,
}

impl Pos {
    pub const fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.row, self.col)
    }
}

/// Ordered set of named tiles for one game.
///
/// The index one past the last tile is reserved as the border sentinel. It
/// never appears inside a grid; observations use it for cells that fall
/// outside the map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TileAlphabet {
    game_id: String,
    names: Vec<String>,
    chars: Vec<char>,
    lookup: [Option<Tile>; 128],
}

impl TileAlphabet {
    pub fn new(game_id: &str, tiles: &[(&str, char)]) -> Result<Self, LevelError> {
        if tiles.len() < 2 {
            return Err(LevelError::AlphabetTooSmall(tiles.len()));
        }
        if tiles.len() > usize::from(Tile::MAX) {
            return Err(LevelError::AlphabetTooLarge(tiles.len()));
        }
        let mut lookup = [None; 128];
        for (index, &(_, ch)) in tiles.iter().enumerate() {
            if !ch.is_ascii_graphic() {
                return Err(LevelError::NonAsciiChar(ch));
            }
            let slot = &mut lookup[ch as usize];
            if slot.is_some() {
                return Err(LevelError::DuplicateChar(ch));
            }
            *slot = Some(index as Tile);
        }
        Ok(Self {
            game_id: game_id.to_string(),
            names: tiles.iter().map(|(name, _)| name.to_string()).collect(),
            chars: tiles.iter().map(|&(_, ch)| ch).collect(),
            lookup,
        })
    }

    pub fn game_id(&self) -> &str {
        &self.game_id
    }

    pub fn len(&self) -> usize {
        self.chars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chars.is_empty()
    }

    /// Pseudo-tile index for out-of-map cells; always `self.len()`.
    pub fn border_sentinel(&self) -> usize {
        self.len()
    }

    pub fn char_of(&self, tile: Tile) -> Option<char> {
        self.chars.get(usize::from(tile)).copied()
    }

    pub fn tile_of(&self, ch: char) -> Option<Tile> {
        if ch.is_ascii() {
            self.lookup[ch as usize]
        } else {
            None
        }
    }

    pub fn name_of(&self, tile: Tile) -> Option<&str> {
        self.names.get(usize::from(tile)).map(String::as_str)
    }

    pub fn tile_named(&self, name: &str) -> Option<Tile> {
        self.names.iter().position(|n| n == name).map(|i| i as Tile)
    }

    pub fn tiles(&self) -> impl Iterator<Item = (Tile, &str, char)> + '_ {
        self.names
            .iter()
            .zip(&self.chars)
            .enumerate()
            .map(|(i, (name, &ch))| (i as Tile, name.as_str(), ch))
    }
}

/// Rectangular, row-major grid of tile indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LevelGrid {
    height: usize,
    width: usize,
    cells: Vec<Tile>,
}

impl LevelGrid {
    pub fn new(height: usize, width: usize, cells: Vec<Tile>) -> Result<Self, LevelError> {
        if height * width != cells.len() || height == 0 || width == 0 {
            return Err(LevelError::CellCount {
                height,
                width,
                expected: height * width,
                found: cells.len(),
            });
        }
        Ok(Self { height, width, cells })
    }

    pub fn filled(height: usize, width: usize, tile: Tile) -> Self {
        assert!(height > 0 && width > 0, "grid dimensions must be positive");
        Self {
            height,
            width,
            cells: alloc::vec![tile; height * width],
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn cells(&self) -> &[Tile] {
        &self.cells
    }

    pub fn contains(&self, pos: Pos) -> bool {
        pos.row < self.height && pos.col < self.width
    }

    pub fn index_of(&self, pos: Pos) -> usize {
        debug_assert!(self.contains(pos));
        pos.row * self.width + pos.col
    }

    pub fn pos_of(&self, index: usize) -> Pos {
        Pos::new(index / self.width, index % self.width)
    }

    pub fn get(&self, pos: Pos) -> Tile {
        self.cells[self.index_of(pos)]
    }

    /// Tile at a signed coordinate, or `None` off the map.
    pub fn get_signed(&self, row: isize, col: isize) -> Option<Tile> {
        if row < 0 || col < 0 || row as usize >= self.height || col as usize >= self.width {
            None
        } else {
            Some(self.cells[row as usize * self.width + col as usize])
        }
    }

    pub fn set(&mut self, pos: Pos, tile: Tile) {
        let index = self.index_of(pos);
        self.cells[index] = tile;
    }

    /// All positions in row-major order.
    pub fn positions(&self) -> impl Iterator<Item = Pos> {
        let width = self.width;
        (0..self.cells.len()).map(move |i| Pos::new(i / width, i % width))
    }

    pub fn same_shape(&self, other: &LevelGrid) -> Result<(), LevelError> {
        if self.dims() == other.dims() {
            Ok(())
        } else {
            Err(LevelError::DimensionMismatch(
                self.height,
                self.width,
                other.height,
                other.width,
            ))
        }
    }
}

/// Parses newline-separated rows, one character per tile.
///
/// A single trailing newline (and `\r` line endings) is accepted.
pub fn parse_level(text: &str, alphabet: &TileAlphabet) -> Result<LevelGrid, LevelError> {
    let text = text.strip_suffix('\n').unwrap_or(text);
    if text.is_empty() {
        return Err(LevelError::Empty);
    }
    let mut cells = Vec::with_capacity(text.len());
    let mut width = None;
    let mut height = 0;
    for (row, line) in text.split('\n').enumerate() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        let mut count = 0;
        for (col, ch) in line.chars().enumerate() {
            let tile = alphabet
                .tile_of(ch)
                .ok_or(LevelError::UnknownChar { row, col, ch })?;
            cells.push(tile);
            count += 1;
        }
        match width {
            None => width = Some(count),
            Some(expected) if expected != count => {
                return Err(LevelError::RaggedRow {
                    row,
                    expected,
                    found: count,
                })
            }
            Some(_) => {}
        }
        height += 1;
    }
    let width = width.unwrap_or(0);
    LevelGrid::new(height, width, cells)
}

/// Inverse of [`parse_level`]; rows joined by `\n`, no trailing newline.
///
/// Panics if the grid holds a tile outside the alphabet.
pub fn serialize_level(level: &LevelGrid, alphabet: &TileAlphabet) -> String {
    let mut out = String::with_capacity(level.len() + level.height());
    for (i, row) in level.cells.chunks(level.width).enumerate() {
        if i > 0 {
            out.push('\n');
        }
        for &tile in row {
            out.push(
                alphabet
                    .char_of(tile)
                    .expect("grid tile outside its alphabet"),
            );
        }
    }
    out
}

/// Number of positions at which two equally-shaped grids differ.
pub fn hamming_distance(a: &LevelGrid, b: &LevelGrid) -> Result<usize, LevelError> {
    a.same_shape(b)?;
    Ok(a.cells.iter().zip(&b.cells).filter(|(x, y)| x != y).count())
}

/// Hamming distance as a fraction of the cell count.
pub fn normalized_hamming(a: &LevelGrid, b: &LevelGrid) -> Result<f64, LevelError> {
    Ok(hamming_distance(a, b)? as f64 / a.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn two_tiles() -> TileAlphabet {
        TileAlphabet::new("test", &[("empty", '.'), ("wall", 'w')]).unwrap()
    }

    #[test]
    fn parse_maps_chars() {
        let grid = parse_level("w.\n.w", &two_tiles()).unwrap();
        assert_eq!(grid.dims(), (2, 2));
        assert_eq!(grid.cells(), &[1, 0, 0, 1]);
    }

    #[test]
    fn parse_rejects_ragged_rows() {
        let err = parse_level("w.\n.ww", &two_tiles()).unwrap_err();
        assert_eq!(
            err,
            LevelError::RaggedRow {
                row: 1,
                expected: 2,
                found: 3
            }
        );
    }

    #[test]
    fn parse_rejects_unknown_char() {
        let err = parse_level("x.", &two_tiles()).unwrap_err();
        assert_eq!(err, LevelError::UnknownChar { row: 0, col: 0, ch: 'x' });
    }

    #[test]
    fn parse_ignores_trailing_newline_and_cr() {
        let a = parse_level("w.\r\n.w\n", &two_tiles()).unwrap();
        let b = parse_level("w.\n.w", &two_tiles()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn serialize_small_grids() {
        let alphabet = two_tiles();
        assert_eq!(serialize_level(&LevelGrid::filled(1, 1, 0), &alphabet), ".");
        let grid = LevelGrid::new(2, 2, vec![1, 0, 0, 1]).unwrap();
        assert_eq!(serialize_level(&grid, &alphabet), "w.\n.w");
    }

    #[test]
    fn alphabet_rejects_duplicates_and_tiny_sets() {
        assert_eq!(
            TileAlphabet::new("x", &[("a", '.')]).unwrap_err(),
            LevelError::AlphabetTooSmall(1)
        );
        assert_eq!(
            TileAlphabet::new("x", &[("a", '.'), ("b", '.')]).unwrap_err(),
            LevelError::DuplicateChar('.')
        );
        assert_eq!(two_tiles().border_sentinel(), 2);
    }

    #[test]
    fn hamming_examples() {
        let a = LevelGrid::new(2, 2, vec![0, 0, 1, 1]).unwrap();
        let mut b = a.clone();
        assert_eq!(hamming_distance(&a, &b).unwrap(), 0);
        b.set(Pos::new(1, 0), 0);
        assert_eq!(hamming_distance(&a, &b).unwrap(), 1);
        assert_eq!(normalized_hamming(&a, &b).unwrap(), 0.25);
        let inverted = LevelGrid::new(2, 2, vec![1, 1, 0, 0]).unwrap();
        assert_eq!(normalized_hamming(&a, &inverted).unwrap(), 1.0);
        let other = LevelGrid::filled(1, 4, 0);
        assert!(matches!(
            hamming_distance(&a, &other),
            Err(LevelError::DimensionMismatch(2, 2, 1, 4))
        ));
    }

    #[test]
    fn eight_of_seventy_seven_clears_ten_percent() {
        let a = LevelGrid::filled(7, 11, 0);
        let mut b = a.clone();
        for col in 0..8 {
            b.set(Pos::new(3, col), 1);
        }
        let d = normalized_hamming(&a, &b).unwrap();
        assert!((d - 8.0 / 77.0).abs() < 1e-12);
        assert!((d - 0.1039).abs() < 1e-4);
        assert!(d >= 0.10);
    }

    fn grid_strategy(tiles: u8) -> impl Strategy<Value = LevelGrid> {
        (1usize..9, 1usize..13).prop_flat_map(move |(h, w)| {
            proptest::collection::vec(0..tiles, h * w)
                .prop_map(move |cells| LevelGrid::new(h, w, cells).unwrap())
        })
    }

    fn triple(tiles: u8) -> impl Strategy<Value = (LevelGrid, LevelGrid, LevelGrid)> {
        (1usize..6, 1usize..6).prop_flat_map(move |(h, w)| {
            let cells = move || {
                proptest::collection::vec(0..tiles, h * w)
                    .prop_map(move |c| LevelGrid::new(h, w, c).unwrap())
            };
            (cells(), cells(), cells())
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn text_round_trip(grid in grid_strategy(2)) {
            let alphabet = two_tiles();
            let text = serialize_level(&grid, &alphabet);
            prop_assert_eq!(parse_level(&text, &alphabet).unwrap(), grid);
        }

        #[test]
        fn hamming_is_a_metric((a, b, c) in triple(3)) {
            let ab = hamming_distance(&a, &b).unwrap();
            let ba = hamming_distance(&b, &a).unwrap();
            let bc = hamming_distance(&b, &c).unwrap();
            let ac = hamming_distance(&a, &c).unwrap();
            prop_assert_eq!(ab, ba);
            prop_assert_eq!(ab == 0, a == b);
            prop_assert!(ac <= ab + bc);
            let n = normalized_hamming(&a, &b).unwrap();
            prop_assert!((0.0..=1.0).contains(&n));
        }
    }
}
