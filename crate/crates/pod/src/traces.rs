//! Generation traces as JSON lines:
//! `{"trial": i, "terminated_by": "playable", "steps": n, "final": "<level>"}`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use pod_core::tilemap::serialize_level;
use pod_core::{GameSpec, GenerationTrace};

use crate::dataset::json_line;
use crate::error::{io_at, Result};

#[derive(Serialize)]
struct TraceLine<'a> {
    trial: usize,
    terminated_by: &'a str,
    steps: usize,
    #[serde(rename = "final")]
    final_level: String,
}

pub fn write_traces(path: &Path, traces: &[GenerationTrace], game: &GameSpec) -> Result<()> {
    let file = File::create(path).map_err(io_at(path))?;
    let mut out = BufWriter::new(file);
    for (trial, t) in traces.iter().enumerate() {
        let line = TraceLine {
            trial,
            terminated_by: t.terminated_by.as_str(),
            steps: t.steps.len(),
            final_level: serialize_level(&t.final_level, &game.alphabet),
        };
        json_line(&mut out, &line).map_err(io_at(path))?;
    }
    out.flush().map_err(io_at(path))
}
