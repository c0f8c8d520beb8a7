//! Goal level directories: one level per `.txt` file, loaded in file-name
//! order.

use std::fs;
use std::path::{Path, PathBuf};

use pod_core::games::check_playable;
use pod_core::tilemap::{parse_level, serialize_level};
use pod_core::{GameSpec, LevelGrid};

use crate::error::{io_at, PodError, Result};
use crate::hashing::sha256_hex;

pub fn level_files(dir: &Path) -> Result<Vec<PathBuf>> {
    if !dir.is_dir() {
        return Err(PodError::invalid(format!("goal directory {} does not exist", dir.display())));
    }
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_at(dir))? {
        let path = entry.map_err(io_at(dir))?.path();
        if path.extension().is_some_and(|e| e == "txt") {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

pub fn read_level(game: &GameSpec, path: &Path) -> Result<LevelGrid> {
    let text = fs::read_to_string(path).map_err(io_at(path))?;
    let level = parse_level(&text, &game.alphabet)
        .map_err(|e| PodError::invalid(format!("{}: {e}", path.display())))?;
    game.check_dims(&level)
        .map_err(|e| PodError::invalid(format!("{}: {e}", path.display())))?;
    Ok(level)
}

/// Every level in `dir`, each required to be playable. `limit` keeps only
/// the first few files.
pub fn load_goal_dir(game: &GameSpec, dir: &Path, limit: Option<usize>) -> Result<Vec<LevelGrid>> {
    let mut files = level_files(dir)?;
    if let Some(n) = limit {
        files.truncate(n);
    }
    if files.is_empty() {
        return Err(PodError::invalid(format!("no .txt levels in {}", dir.display())));
    }
    let mut goals = Vec::with_capacity(files.len());
    for path in &files {
        let level = read_level(game, path)?;
        let verdict = check_playable(game, &level)?;
        if !verdict.playable {
            return Err(PodError::invalid(format!("{}: goal is {verdict}", path.display())));
        }
        goals.push(level);
    }
    Ok(goals)
}

/// Content hash of a goal set, independent of file names.
pub fn goal_set_hash(game: &GameSpec, goals: &[LevelGrid]) -> String {
    let mut text = String::from(game.id.as_str());
    for g in goals {
        text.push_str("\n\n");
        text.push_str(&serialize_level(g, &game.alphabet));
    }
    sha256_hex(text.as_bytes())
}
