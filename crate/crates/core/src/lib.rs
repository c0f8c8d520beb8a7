//! Core algorithms for learning iterative tile-level generators from a
//! handful of example levels.
//!
//! Goal levels are destroyed tile by tile into random noise; the reversed
//! destruction trace supervises a small convolutional repair policy, which
//! then grows new levels out of fresh noise one tile at a time.
//!
//! The crate is `no_std` (with `alloc`) when built without the default `std`
//! feature. File formats, the command line, and experiment orchestration live
//! in the `pod` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod eval;
pub mod games;
pub mod generator;
pub mod nn;
pub mod podgen;
pub mod rng;
pub mod tilemap;

pub use games::{GameId, GameSpec, PlayabilityReason, PlayabilityResult};
pub use generator::{GenerationConfig, GenerationTrace, Termination};
pub use nn::{Network, NetworkSpec, NetworkState, TrainConfig};
pub use podgen::{ObservationSpec, Traversal, Trajectory, TrainingExample};
pub use tilemap::{LevelGrid, Pos, Tile, TileAlphabet};
