use alloc::vec::Vec;

use rand::seq::SliceRandom;

use super::pass::Workspace;
use super::{Network, NetworkSpec, NetworkState, NnError, ParamSet};
use crate::podgen::{crop_observation, ObservationSpec, Observation, TrainingExample};
use crate::rng;
use crate::tilemap::Tile;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub learning_rate: f32,
    pub epochs: usize,
    pub rho: f32,
    pub epsilon: f32,
    /// Seed for per-epoch shuffling; defaults to a stream of the init seed.
    pub shuffle_seed: Option<u64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 64,
            learning_rate: 0.001,
            epochs: 500,
            rho: 0.9,
            epsilon: 1e-8,
            shuffle_seed: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NnError> {
        if self.batch_size == 0 {
            return Err(NnError::BadConfig("batch_size must be at least 1"));
        }
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 {
            return Err(NnError::BadConfig("learning_rate must be positive"));
        }
        if self.rho.is_nan() || self.rho <= 0.0 || self.rho >= 1.0 {
            return Err(NnError::BadConfig("rho must lie in (0, 1)"));
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return Err(NnError::BadConfig("epsilon must be positive"));
        }
        Ok(())
    }
}

/// v ← ρv + (1−ρ)g², w ← w − lr·g / (√v + ε), elementwise.
pub fn rmsprop_step(state: &mut NetworkState, grads: &ParamSet<f32>, config: &TrainConfig) {
    let (rho, lr, eps) = (config.rho, config.learning_rate, config.epsilon);
    for ((w, v), g) in state
        .params
        .tensors
        .iter_mut()
        .zip(&mut state.accum.tensors)
        .zip(&grads.tensors)
    {
        for ((wi, vi), &gi) in w.iter_mut().zip(v.iter_mut()).zip(g) {
            *vi = rho * *vi + (1.0 - rho) * gi * gi;
            *wi -= lr * gi / (libm::sqrtf(*vi) + eps);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Sample {
    pub obs: Observation,
    pub target: Tile,
}

pub fn samples_from_examples(examples: &[TrainingExample], spec: &ObservationSpec) -> Vec<Sample> {
    examples
        .iter()
        .map(|ex| Sample {
            obs: crop_observation(&ex.level, ex.pos, spec),
            target: ex.target,
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub network: Network,
    /// Mean training loss per epoch, measured before each minibatch update.
    pub epoch_losses: Vec<f32>,
}

/// Minibatch RMSprop from a fresh initialization. Every epoch reshuffles
/// and visits every sample once; the last short batch is kept.
/// `on_epoch(epoch, mean_loss)` is called after each epoch.
pub fn train(
    samples: &[Sample],
    spec: NetworkSpec,
    config: &TrainConfig,
    seed: u64,
    mut on_epoch: impl FnMut(usize, f32),
) -> Result<TrainOutcome, NnError> {
    config.validate()?;
    if samples.is_empty() {
        return Err(NnError::Empty);
    }
    for s in samples {
        if s.obs.crop_size != spec.crop_size || s.obs.channel_count != spec.input_channels {
            return Err(NnError::ShapeMismatch {
                crop: spec.crop_size,
                channels: spec.input_channels,
                found_crop: s.obs.crop_size,
                found_channels: s.obs.channel_count,
            });
        }
        if usize::from(s.target) >= spec.action_count {
            return Err(NnError::TargetOutOfRange {
                target: s.target,
                actions: spec.action_count,
            });
        }
    }

    let mut network = Network::init(spec, seed);
    let mut shuffle = match config.shuffle_seed {
        Some(s) => rng::seeded(s),
        None => rng::derived(seed, rng::STREAM_SHUFFLE),
    };
    let mut ws = Workspace::<f32>::new(&spec);
    let mut grads = ParamSet::<f32>::zeros(&spec);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut epoch_losses = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        order.shuffle(&mut shuffle);
        let mut total = 0.0f64;
        for batch in order.chunks(config.batch_size) {
            grads.fill_zero();
            let scale = 1.0 / batch.len() as f32;
            for &i in batch {
                let s = &samples[i];
                let l = ws.accumulate(&spec, &network.state.params, &s.obs.active, s.target, scale, &mut grads);
                total += f64::from(l);
            }
            rmsprop_step(&mut network.state, &grads, config);
        }
        let mean = (total / samples.len() as f64) as f32;
        epoch_losses.push(mean);
        on_epoch(epoch, mean);
    }
    Ok(TrainOutcome {
        network,
        epoch_losses,
    })
}
