//! Convolutional repair policy.
//!
//! Architecture: three 3×3 same-padded convolutions with rectifiers
//! (2×2 max pooling after the second), a fully connected layer to one logit
//! per tile, and a softmax. Trained with RMSprop on categorical
//! cross-entropy.

mod kernels;
mod pass;
mod real;
mod train;

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

pub use pass::{loss, loss_and_gradients, Batch, Workspace};
pub use real::Real;
pub use train::{rmsprop_step, samples_from_examples, train, Sample, TrainConfig, TrainOutcome};

use crate::podgen::Observation;
use crate::rng;
use crate::tilemap::Tile;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NnError {
    #[error("crop size {0} pools down to zero")]
    CollapsedShape(usize),
    #[error("need at least 2 actions, got {0}")]
    TooFewActions(usize),
    #[error("at most 255 actions are supported, got {0}")]
    TooManyActions(usize),
    #[error("layer widths must be positive: {0:?}")]
    ZeroChannels([usize; 3]),
    #[error("observation is {found_crop}x{found_crop}x{found_channels}, network expects {crop}x{crop}x{channels}")]
    ShapeMismatch {
        crop: usize,
        channels: usize,
        found_crop: usize,
        found_channels: usize,
    },
    #[error("target {target} outside 0..{actions}")]
    TargetOutOfRange { target: Tile, actions: usize },
    #[error("empty batch or dataset")]
    Empty,
    #[error("invalid training config: {0}")]
    BadConfig(&'static str),
}

/// Layer geometry. Input is `crop × crop × input_channels`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NetworkSpec {
    pub crop_size: usize,
    pub input_channels: usize,
    pub conv_channels: [usize; 3],
    pub action_count: usize,
}

pub const CONV1_W: usize = 0;
pub const CONV1_B: usize = 1;
pub const CONV2_W: usize = 2;
pub const CONV2_B: usize = 3;
pub const CONV3_W: usize = 4;
pub const CONV3_B: usize = 5;
pub const FC_W: usize = 6;
pub const FC_B: usize = 7;
pub const PARAM_NAMES: [&str; 8] = [
    "conv1.weight",
    "conv1.bias",
    "conv2.weight",
    "conv2.bias",
    "conv3.weight",
    "conv3.bias",
    "fc.weight",
    "fc.bias",
];

pub const PAPER_CHANNELS: [usize; 3] = [128, 128, 256];

impl NetworkSpec {
    pub fn new(
        crop_size: usize,
        input_channels: usize,
        conv_channels: [usize; 3],
        action_count: usize,
    ) -> Result<Self, NnError> {
        if crop_size / 2 == 0 {
            return Err(NnError::CollapsedShape(crop_size));
        }
        if action_count < 2 {
            return Err(NnError::TooFewActions(action_count));
        }
        if action_count > 255 {
            return Err(NnError::TooManyActions(action_count));
        }
        if conv_channels.contains(&0) || input_channels == 0 {
            return Err(NnError::ZeroChannels(conv_channels));
        }
        Ok(Self {
            crop_size,
            input_channels,
            conv_channels,
            action_count,
        })
    }

    pub fn pooled_size(&self) -> usize {
        self.crop_size / 2
    }

    pub fn flat_len(&self) -> usize {
        self.pooled_size() * self.pooled_size() * self.conv_channels[2]
    }

    /// Parameter shapes in storage order, matching [`PARAM_NAMES`].
    pub fn param_shapes(&self) -> [Vec<usize>; 8] {
        let [c1, c2, c3] = self.conv_channels;
        [
            vec![3, 3, self.input_channels, c1],
            vec![c1],
            vec![3, 3, c1, c2],
            vec![c2],
            vec![3, 3, c2, c3],
            vec![c3],
            vec![self.flat_len(), self.action_count],
            vec![self.action_count],
        ]
    }

    /// `(rows, cols, channels)` after each stage: conv1, conv2, pool, conv3.
    pub fn layer_shapes(&self) -> [(usize, usize, usize); 4] {
        let (s, p) = (self.crop_size, self.pooled_size());
        let [c1, c2, c3] = self.conv_channels;
        [(s, s, c1), (s, s, c2), (p, p, c2), (p, p, c3)]
    }

    fn fan_in(&self, tensor: usize) -> Option<usize> {
        let [c1, c2, _] = self.conv_channels;
        match tensor {
            CONV1_W => Some(9 * self.input_channels),
            CONV2_W => Some(9 * c1),
            CONV3_W => Some(9 * c2),
            FC_W => Some(self.flat_len()),
            _ => None,
        }
    }
}

/// The eight parameter tensors (or gradients, or optimizer accumulators).
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet<F> {
    pub tensors: [Vec<F>; 8],
}

impl<F: Real> ParamSet<F> {
    pub fn zeros(spec: &NetworkSpec) -> Self {
        Self {
            tensors: spec
                .param_shapes()
                .map(|shape| vec![F::ZERO; shape.iter().product()]),
        }
    }

    pub fn fill_zero(&mut self) {
        for t in &mut self.tensors {
            t.fill(F::ZERO);
        }
    }

    pub fn len(&self) -> usize {
        self.tensors.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cast<G: Real>(&self) -> ParamSet<G> {
        ParamSet {
            tensors: core::array::from_fn(|i| {
                self.tensors[i].iter().map(|v| G::from_f64(v.to_f64())).collect()
            }),
        }
    }

    pub fn matches(&self, spec: &NetworkSpec) -> bool {
        self.tensors
            .iter()
            .zip(spec.param_shapes())
            .all(|(t, shape)| t.len() == shape.iter().product::<usize>())
    }
}

/// Trainable state: weights, RMSprop accumulators, and the init seed.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState {
    pub params: ParamSet<f32>,
    pub accum: ParamSet<f32>,
    pub seed: u64,
}

impl NetworkState {
    /// Weights uniform in ±√(6 / fan_in), biases and accumulators zero.
    pub fn init(spec: &NetworkSpec, seed: u64) -> Self {
        let mut rng = rng::derived(seed, rng::STREAM_INIT);
        let mut params = ParamSet::<f32>::zeros(spec);
        for (i, tensor) in params.tensors.iter_mut().enumerate() {
            if let Some(fan_in) = spec.fan_in(i) {
                let limit = libm::sqrtf(6.0 / fan_in as f32);
                for w in tensor.iter_mut() {
                    *w = rng.gen_range(-limit..limit);
                }
            }
        }
        Self {
            accum: ParamSet::zeros(spec),
            params,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub spec: NetworkSpec,
    pub state: NetworkState,
}

impl Network {
    pub fn init(spec: NetworkSpec, seed: u64) -> Self {
        Self {
            state: NetworkState::init(&spec, seed),
            spec,
        }
    }

    pub fn check_obs(&self, obs: &Observation) -> Result<(), NnError> {
        if obs.crop_size != self.spec.crop_size || obs.channel_count != self.spec.input_channels {
            return Err(NnError::ShapeMismatch {
                crop: self.spec.crop_size,
                channels: self.spec.input_channels,
                found_crop: obs.crop_size,
                found_channels: obs.channel_count,
            });
        }
        Ok(())
    }

    /// Action probabilities for one observation.
    pub fn forward(&self, obs: &Observation) -> Result<Vec<f32>, NnError> {
        self.check_obs(obs)?;
        let mut ws = Workspace::new(&self.spec);
        Ok(ws.forward(&self.spec, &self.state.params, &obs.active).to_vec())
    }

    /// Most probable action; ties go to the lowest tile index.
    pub fn predict(&self, active: &[u8], ws: &mut Workspace<f32>) -> Tile {
        argmax(ws.forward(&self.spec, &self.state.params, active)) as Tile
    }

    pub fn describe(&self) -> String {
        let [c1, c2, c3] = self.spec.conv_channels;
        alloc::format!(
            "crop {} x{} -> conv{c1} -> conv{c2} -> pool -> conv{c3} -> fc{}",
            self.spec.crop_size,
            self.spec.input_channels,
            self.spec.action_count
        )
    }
}

/// Index of the largest entry, first one on ties.
pub fn argmax<F: Real>(values: &[F]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conv1_shape_for_crop5_nine_channels() {
        let spec = NetworkSpec::new(5, 9, PAPER_CHANNELS, 8).unwrap();
        assert_eq!(spec.param_shapes()[CONV1_W], [3, 3, 9, 128]);
        assert_eq!(
            spec.layer_shapes(),
            [(5, 5, 128), (5, 5, 128), (2, 2, 128), (2, 2, 256)]
        );
        assert_eq!(spec.flat_len(), 1024);
        assert_eq!(spec.param_shapes()[FC_W], [1024, 8]);
    }

    #[test]
    fn degenerate_specs_rejected() {
        assert_eq!(
            NetworkSpec::new(1, 9, PAPER_CHANNELS, 8).unwrap_err(),
            NnError::CollapsedShape(1)
        );
        assert_eq!(
            NetworkSpec::new(5, 9, PAPER_CHANNELS, 1).unwrap_err(),
            NnError::TooFewActions(1)
        );
        assert!(NetworkSpec::new(5, 9, [4, 0, 4], 8).is_err());
    }

    #[test]
    fn init_is_seeded_and_scaled() {
        let spec = NetworkSpec::new(5, 9, [8, 8, 16], 8).unwrap();
        let a = NetworkState::init(&spec, 3);
        assert_eq!(a, NetworkState::init(&spec, 3));
        assert_ne!(a.params, NetworkState::init(&spec, 4).params);
        let limit = libm::sqrtf(6.0 / 81.0);
        assert!(a.params.tensors[CONV1_W].iter().all(|w| w.abs() <= limit));
        assert!(a.params.tensors[CONV1_B].iter().all(|&b| b == 0.0));
        assert!(a.accum.tensors.iter().flatten().all(|&v| v == 0.0));
        assert!(a.params.matches(&spec));
    }

    #[test]
    fn argmax_prefers_lowest_index() {
        assert_eq!(argmax(&[0.25f32, 0.25, 0.25, 0.25]), 0);
        assert_eq!(argmax(&[0.1f32, 0.5, 0.5]), 1);
    }
}
