//! Training examples as JSON lines: a header line, then one example per
//! line.
//!
//! ```text
//! {"game":"zelda","goal_set_hash":"…","seed":7,"traversal":"random","count":3,"trajectories":1}
//! {"level":"w..\n...","row":0,"col":2,"target":1}
//! ```

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use pod_core::tilemap::{parse_level, serialize_level};
use pod_core::{GameId, GameSpec, Pos, TrainingExample};

use crate::error::{io_at, PodError, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub game: String,
    pub goal_set_hash: String,
    pub seed: u64,
    pub traversal: String,
    pub count: usize,
    pub trajectories: usize,
}

impl DatasetHeader {
    pub fn game_spec(&self) -> Result<GameSpec> {
        let id: GameId = self.game.parse()?;
        Ok(GameSpec::new(id))
    }
}

#[derive(Serialize, Deserialize)]
struct Line {
    level: String,
    row: usize,
    col: usize,
    target: u8,
}

pub fn write_dataset(path: &Path, header: &DatasetHeader, examples: &[TrainingExample], game: &GameSpec) -> Result<()> {
    let file = File::create(path).map_err(io_at(path))?;
    let mut out = BufWriter::new(file);
    json_line(&mut out, header).map_err(io_at(path))?;
    for ex in examples {
        let line = Line {
            level: serialize_level(&ex.level, &game.alphabet),
            row: ex.pos.row,
            col: ex.pos.col,
            target: ex.target,
        };
        json_line(&mut out, &line).map_err(io_at(path))?;
    }
    out.flush().map_err(io_at(path))
}

pub fn read_dataset(path: &Path) -> Result<(DatasetHeader, GameSpec, Vec<TrainingExample>)> {
    let file = File::open(path).map_err(io_at(path))?;
    let mut lines = BufReader::new(file).lines();
    let bad = |n: usize, msg: String| PodError::invalid(format!("{}:{n}: {msg}", path.display()));
    let first = lines
        .next()
        .ok_or_else(|| bad(1, "empty dataset file".into()))?
        .map_err(io_at(path))?;
    let header: DatasetHeader = serde_json::from_str(&first).map_err(|e| bad(1, e.to_string()))?;
    let game = header.game_spec()?;
    let mut examples = Vec::with_capacity(header.count);
    for (i, line) in lines.enumerate() {
        let n = i + 2;
        let line = line.map_err(io_at(path))?;
        if line.is_empty() {
            continue;
        }
        let rec: Line = serde_json::from_str(&line).map_err(|e| bad(n, e.to_string()))?;
        let level = parse_level(&rec.level, &game.alphabet).map_err(|e| bad(n, e.to_string()))?;
        game.check_dims(&level).map_err(|e| bad(n, e.to_string()))?;
        let pos = Pos::new(rec.row, rec.col);
        if !level.contains(pos) || usize::from(rec.target) >= game.alphabet.len() {
            return Err(bad(n, format!("position {pos} or target {} out of range", rec.target)));
        }
        examples.push(TrainingExample {
            level,
            pos,
            target: rec.target,
        });
    }
    if examples.len() != header.count {
        return Err(PodError::invalid(format!(
            "{}: header promises {} examples, found {}",
            path.display(),
            header.count,
            examples.len()
        )));
    }
    Ok((header, game, examples))
}

pub(crate) fn json_line<T: Serialize>(out: &mut impl Write, value: &T) -> std::io::Result<()> {
    serde_json::to_writer(&mut *out, value).map_err(std::io::Error::other)?;
    out.write_all(b"\n")
}
