//! Flattened one-hot level encodings for external projection tools.

use std::path::Path;

use pod_core::LevelGrid;

use crate::error::{io_at, PodError, Result};

/// CSV with header `c0..cN,label`: goals first (label `goal`), then
/// `levels` (label `generated`). Column `cell * tile_count + tile` is 1
/// when that cell holds that tile.
pub fn export_level_vectors(levels: &[LevelGrid], goals: &[LevelGrid], tile_count: usize, path: &Path) -> Result<()> {
    let dims = goals.first().or(levels.first()).map(LevelGrid::dims);
    if let Some(d) = dims {
        if goals.iter().chain(levels).any(|l| l.dims() != d) {
            return Err(PodError::invalid("levels differ in size"));
        }
    }
    let width = dims.map_or(0, |(h, w)| h * w * tile_count);
    let to_err = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(io) => io_at(path)(io),
        other => PodError::invalid(format!("{other:?}")),
    };
    let mut out = csv::Writer::from_path(path).map_err(to_err)?;
    let mut header: Vec<String> = (0..width).map(|i| format!("c{i}")).collect();
    header.push("label".into());
    out.write_record(&header).map_err(to_err)?;
    let tagged = goals.iter().map(|l| (l, "goal")).chain(levels.iter().map(|l| (l, "generated")));
    for (level, label) in tagged {
        let mut row = vec!["0"; width + 1];
        for (cell, &tile) in level.cells().iter().enumerate() {
            row[cell * tile_count + usize::from(tile)] = "1";
        }
        row[width] = label;
        out.write_record(&row).map_err(to_err)?;
    }
    out.flush().map_err(io_at(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use pod_core::podgen::sample_start_level;
    use pod_core::{rng, GameSpec};

    #[test]
    fn zelda_rows_have_616_bits() {
        let dir = tempfile::tempdir().unwrap();
        let game = GameSpec::zelda();
        let level = sample_start_level(&game, &mut rng::seeded(0));
        let goal = sample_start_level(&game, &mut rng::seeded(1));
        let path = dir.path().join("v.csv");
        export_level_vectors(std::slice::from_ref(&level), &[goal], 8, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("c0,c1,"));
        assert!(lines[0].ends_with("c615,label"));
        assert!(lines[1].ends_with(",goal"));
        let row: Vec<&str> = lines[2].split(',').collect();
        assert_eq!(row.len(), 617);
        assert_eq!(row[616], "generated");
        assert_eq!(row[..616].iter().filter(|&&v| v == "1").count(), 77);
        let first = usize::from(level.cells()[0]);
        assert_eq!(row[first], "1");
    }

    #[test]
    fn empty_list_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.csv");
        export_level_vectors(&[], &[], 8, &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "label\n");
    }
}
