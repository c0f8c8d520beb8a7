//! Trained networks on disk: `manifest.json` describes the network and
//! lists every parameter tensor; `weights.bin` holds the tensors back to
//! back as little-endian `f32`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use pod_core::nn::{ParamSet, PARAM_NAMES};
use pod_core::{GameId, GameSpec, Network, NetworkSpec, NetworkState, TrainConfig};

use crate::error::{io_at, PodError, Result};
use crate::hashing::sha256_hex;

pub const MANIFEST: &str = "manifest.json";
pub const WEIGHTS: &str = "weights.bin";
pub const LOSS_LOG: &str = "loss.csv";
const FORMAT: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSettings {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f32,
    pub rho: f32,
    pub epsilon: f32,
}

impl From<&TrainConfig> for TrainSettings {
    fn from(c: &TrainConfig) -> Self {
        Self {
            epochs: c.epochs,
            batch_size: c.batch_size,
            learning_rate: c.learning_rate,
            rho: c.rho,
            epsilon: c.epsilon,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamEntry {
    pub name: String,
    pub shape: Vec<usize>,
    /// Byte offset into `weights.bin`.
    pub offset: usize,
    pub bytes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: u32,
    pub game: String,
    pub crop_size: usize,
    pub input_channels: usize,
    pub conv_channels: [usize; 3],
    pub action_count: usize,
    pub seed: u64,
    pub train: TrainSettings,
    /// Hash of the dataset file the network was trained on, when known.
    pub dataset_sha256: Option<String>,
    pub final_loss: Option<f32>,
    pub params: Vec<ParamEntry>,
    pub weights_sha256: String,
}

impl Manifest {
    pub fn spec(&self) -> Result<NetworkSpec> {
        Ok(NetworkSpec::new(
            self.crop_size,
            self.input_channels,
            self.conv_channels,
            self.action_count,
        )?)
    }

    pub fn game_spec(&self) -> Result<GameSpec> {
        let id: GameId = self.game.parse()?;
        Ok(GameSpec::new(id))
    }
}

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub manifest: Manifest,
    pub network: Network,
}

fn encode(params: &ParamSet<f32>) -> Vec<u8> {
    params
        .tensors
        .iter()
        .flatten()
        .flat_map(|v| v.to_le_bytes())
        .collect()
}

/// Builds the manifest for `network` without touching the disk.
pub fn manifest_for(
    network: &Network,
    game: &GameSpec,
    train: &TrainConfig,
    dataset_sha256: Option<String>,
    final_loss: Option<f32>,
) -> (Manifest, Vec<u8>) {
    let blob = encode(&network.state.params);
    let mut offset = 0;
    let params = network
        .spec
        .param_shapes()
        .into_iter()
        .zip(PARAM_NAMES)
        .map(|(shape, name)| {
            let bytes = shape.iter().product::<usize>() * 4;
            let entry = ParamEntry {
                name: name.to_string(),
                shape,
                offset,
                bytes,
            };
            offset += bytes;
            entry
        })
        .collect();
    let spec = network.spec;
    let manifest = Manifest {
        format: FORMAT,
        game: game.id.as_str().to_string(),
        crop_size: spec.crop_size,
        input_channels: spec.input_channels,
        conv_channels: spec.conv_channels,
        action_count: spec.action_count,
        seed: network.state.seed,
        train: train.into(),
        dataset_sha256,
        final_loss,
        params,
        weights_sha256: sha256_hex(&blob),
    };
    (manifest, blob)
}

pub fn save(dir: &Path, manifest: &Manifest, blob: &[u8]) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_at(dir))?;
    let mpath = dir.join(MANIFEST);
    let mut text = serde_json::to_string_pretty(manifest)?;
    text.push('\n');
    fs::write(&mpath, text).map_err(io_at(&mpath))?;
    let wpath = dir.join(WEIGHTS);
    fs::write(&wpath, blob).map_err(io_at(&wpath))
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join(MANIFEST);
    let text = fs::read_to_string(&path).map_err(io_at(&path))?;
    serde_json::from_str(&text).map_err(|e| PodError::invalid(format!("{}: {e}", path.display())))
}

pub fn load(dir: &Path) -> Result<Checkpoint> {
    let manifest = read_manifest(dir)?;
    if manifest.format != FORMAT {
        return Err(PodError::invalid(format!(
            "{}: unsupported checkpoint format {}",
            dir.display(),
            manifest.format
        )));
    }
    let spec = manifest.spec()?;
    let wpath = dir.join(WEIGHTS);
    let blob = fs::read(&wpath).map_err(io_at(&wpath))?;

    let shapes = spec.param_shapes();
    if manifest.params.len() != shapes.len() {
        return Err(PodError::invalid(format!(
            "{}: manifest lists {} tensors, network has {}",
            dir.display(),
            manifest.params.len(),
            shapes.len()
        )));
    }
    let mut params = ParamSet::<f32>::zeros(&spec);
    let mut expected_offset = 0;
    for ((entry, shape), tensor) in manifest.params.iter().zip(&shapes).zip(&mut params.tensors) {
        if &entry.shape != shape || entry.bytes != tensor.len() * 4 || entry.offset != expected_offset {
            return Err(PodError::invalid(format!(
                "{}: tensor {} has shape {:?} at offset {}, network expects {:?} at offset {}",
                dir.display(),
                entry.name,
                entry.shape,
                entry.offset,
                shape,
                expected_offset
            )));
        }
        expected_offset += entry.bytes;
    }
    if blob.len() != expected_offset {
        return Err(PodError::invalid(format!(
            "{}: expected {expected_offset} bytes, found {}",
            wpath.display(),
            blob.len()
        )));
    }
    for (entry, tensor) in manifest.params.iter().zip(&mut params.tensors) {
        let bytes = &blob[entry.offset..entry.offset + entry.bytes];
        for (v, chunk) in tensor.iter_mut().zip(bytes.chunks_exact(4)) {
            *v = f32::from_le_bytes(chunk.try_into().unwrap());
        }
    }
    let network = Network {
        spec,
        state: NetworkState {
            accum: ParamSet::zeros(&spec),
            params,
            seed: manifest.seed,
        },
    };
    Ok(Checkpoint { manifest, network })
}
