//! Level generation by iterated learned repair.
//!
//! A noise level is walked location by location; at each location the
//! network sees a crop centred there and its most probable tile is written
//! back. Playability is checked before the first write and after every
//! write, and generation stops as soon as the level is playable or the pass
//! budget runs out.

use alloc::vec::Vec;

use rand::Rng;

use crate::games::{check_playable, GameError, GameSpec, PlayabilityResult};
use crate::nn::{Network, Workspace};
use crate::podgen::{crop_into, sample_start_level, ObservationSpec, Traversal};
use crate::rng;
use crate::tilemap::{LevelGrid, Pos, Tile};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GenerationError {
    #[error("network predicts {network} tiles but the game has {game}")]
    ActionMismatch { network: usize, game: usize },
    #[error("network expects {network_crop}x{network_crop}x{network_channels} crops, config asks for {crop}x{crop}x{channels}")]
    ObservationMismatch {
        network_crop: usize,
        network_channels: usize,
        crop: usize,
        channels: usize,
    },
    #[error("max_passes must be at least 1")]
    ZeroPasses,
    #[error("trials must be at least 1")]
    ZeroTrials,
    #[error(transparent)]
    Game(#[from] GameError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GenerationConfig {
    pub traversal: Traversal,
    /// Step budget in full passes over the map.
    pub max_passes: usize,
    pub obs: ObservationSpec,
}

impl GenerationConfig {
    pub const DEFAULT_PASSES: usize = 3;

    pub fn new(obs: ObservationSpec) -> Self {
        Self {
            traversal: Traversal::RandomPermutation,
            max_passes: Self::DEFAULT_PASSES,
            obs,
        }
    }

    /// Configuration matching a network's input geometry.
    pub fn for_network(network: &Network) -> Self {
        Self::new(ObservationSpec {
            crop_size: network.spec.crop_size,
            channel_count: network.spec.input_channels,
        })
    }

    pub fn with_traversal(mut self, traversal: Traversal) -> Self {
        self.traversal = traversal;
        self
    }

    pub fn with_passes(mut self, max_passes: usize) -> Self {
        self.max_passes = max_passes;
        self
    }

    pub fn step_limit(&self, game: &GameSpec) -> usize {
        self.max_passes * game.level_height * game.level_width
    }

    fn check(&self, network: &Network, game: &GameSpec) -> Result<(), GenerationError> {
        if self.max_passes == 0 {
            return Err(GenerationError::ZeroPasses);
        }
        if network.spec.action_count != game.alphabet.len() {
            return Err(GenerationError::ActionMismatch {
                network: network.spec.action_count,
                game: game.alphabet.len(),
            });
        }
        if network.spec.crop_size != self.obs.crop_size
            || network.spec.input_channels != self.obs.channel_count
            || self.obs.channel_count != game.alphabet.len() + 1
        {
            return Err(GenerationError::ObservationMismatch {
                network_crop: network.spec.crop_size,
                network_channels: network.spec.input_channels,
                crop: self.obs.crop_size,
                channels: self.obs.channel_count,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Termination {
    Playable,
    Budget,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::Playable => "playable",
            Termination::Budget => "budget",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenerationTrace {
    pub start: LevelGrid,
    pub final_level: LevelGrid,
    /// Every write in order, including writes that kept the current tile.
    pub steps: Vec<(Pos, Tile)>,
    pub terminated_by: Termination,
    /// Verdict on `final_level`.
    pub verdict: PlayabilityResult,
}

impl GenerationTrace {
    pub fn replay(&self) -> LevelGrid {
        let mut level = self.start.clone();
        for &(pos, tile) in &self.steps {
            level.set(pos, tile);
        }
        level
    }
}

/// Most probable tile for `pos`; ties go to the lowest index.
pub fn repair_action(network: &Network, obs: &ObservationSpec, level: &LevelGrid, pos: Pos) -> Tile {
    let mut ws = Workspace::new(&network.spec);
    let mut crop = Vec::new();
    crop_into(level, pos, obs, &mut crop);
    network.predict(&crop, &mut ws)
}

pub fn generate_level<R: Rng + ?Sized>(
    network: &Network,
    game: &GameSpec,
    config: &GenerationConfig,
    rng: &mut R,
) -> Result<GenerationTrace, GenerationError> {
    config.check(network, game)?;
    let mut ws = Workspace::new(&network.spec);
    let mut crop = Vec::with_capacity(config.obs.crop_size * config.obs.crop_size);
    let start = sample_start_level(game, rng);
    let mut level = start.clone();
    let mut steps = Vec::new();
    let mut verdict = check_playable(game, &level)?;

    'passes: for _ in 0..config.max_passes {
        if verdict.playable {
            break;
        }
        for pos in config.traversal.order(game.level_height, game.level_width, rng) {
            crop_into(&level, pos, &config.obs, &mut crop);
            let tile = network.predict(&crop, &mut ws);
            steps.push((pos, tile));
            if level.get(pos) != tile {
                level.set(pos, tile);
                // An unchanged level keeps its previous verdict.
                verdict = check_playable(game, &level)?;
                if verdict.playable {
                    break 'passes;
                }
            }
        }
    }

    Ok(GenerationTrace {
        start,
        final_level: level,
        steps,
        terminated_by: if verdict.playable {
            Termination::Playable
        } else {
            Termination::Budget
        },
        verdict,
    })
}

/// `trials` independent generations; trial `i` draws from stream `i` of
/// `master_seed`.
pub fn batch_generate(
    network: &Network,
    game: &GameSpec,
    config: &GenerationConfig,
    trials: usize,
    master_seed: u64,
) -> Result<Vec<GenerationTrace>, GenerationError> {
    if trials == 0 {
        return Err(GenerationError::ZeroTrials);
    }
    (0..trials)
        .map(|i| generate_level(network, game, config, &mut rng::derived(master_seed, i as u64)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{zelda, GameId};
    use crate::nn::{NetworkSpec, FC_B};

    fn zero_network(game: &GameSpec, crop: usize) -> Network {
        let spec = NetworkSpec::new(crop, game.alphabet.len() + 1, [4, 4, 8], game.alphabet.len()).unwrap();
        let mut net = Network::init(spec, 0);
        for t in &mut net.state.params.tensors {
            t.fill(0.0);
        }
        net
    }

    /// Zero weights with one favoured tile, so every prediction is `tile`.
    fn constant_network(game: &GameSpec, crop: usize, tile: Tile) -> Network {
        let mut net = zero_network(game, crop);
        net.state.params.tensors[FC_B][usize::from(tile)] = 1.0;
        net
    }

    #[test]
    fn zero_network_repairs_to_tile_zero() {
        let game = GameSpec::zelda();
        let net = zero_network(&game, 5);
        let cfg = GenerationConfig::for_network(&net);
        let level = sample_start_level(&game, &mut rng::seeded(1));
        for pos in level.positions() {
            assert_eq!(repair_action(&net, &cfg.obs, &level, pos), 0);
        }
    }

    #[test]
    fn one_pass_never_playable_takes_every_cell() {
        let game = GameSpec::zelda();
        // all walls: no player, never playable
        let net = constant_network(&game, 5, zelda::WALL);
        for traversal in [Traversal::Sequential, Traversal::RandomPermutation] {
            let cfg = GenerationConfig::for_network(&net).with_passes(1).with_traversal(traversal);
            let trace = generate_level(&net, &game, &cfg, &mut rng::seeded(4)).unwrap();
            assert_eq!(trace.steps.len(), 77);
            assert_eq!(trace.terminated_by, Termination::Budget);
            assert_eq!(trace.final_level, LevelGrid::filled(7, 11, zelda::WALL));
            let mut seen: Vec<Pos> = trace.steps.iter().map(|s| s.0).collect();
            seen.sort();
            seen.dedup();
            assert_eq!(seen.len(), 77);
        }
    }

    #[test]
    fn sequential_passes_restart_at_origin() {
        let game = GameSpec::zelda();
        let net = constant_network(&game, 5, zelda::WALL);
        let cfg = GenerationConfig::for_network(&net)
            .with_passes(3)
            .with_traversal(Traversal::Sequential);
        let trace = generate_level(&net, &game, &cfg, &mut rng::seeded(4)).unwrap();
        assert_eq!(trace.steps.len(), 3 * 77);
        for pass in 0..3 {
            assert_eq!(trace.steps[pass * 77].0, Pos::new(0, 0));
            assert_eq!(trace.steps[pass * 77 + 76].0, Pos::new(6, 10));
        }
    }

    #[test]
    fn playable_start_takes_no_steps() {
        let game = GameSpec::zelda();
        let net = zero_network(&game, 5);
        let cfg = GenerationConfig::for_network(&net);
        // noise that is mostly empty floor is occasionally playable as drawn
        let mut weights = alloc::vec![0.0; 8];
        weights[usize::from(zelda::EMPTY)] = 200.0;
        weights[usize::from(zelda::PLAYER)] = 1.0;
        weights[usize::from(zelda::KEY)] = 1.0;
        weights[usize::from(zelda::DOOR)] = 1.0;
        let total: f64 = weights.iter().sum();
        let weights = weights.iter().map(|w| w / total).collect();
        let biased = game.clone().with_noise_weights(weights).unwrap();
        let seed = (0..10_000u64)
            .find(|&s| {
                let l = sample_start_level(&biased, &mut rng::seeded(s));
                check_playable(&biased, &l).unwrap().playable
            })
            .expect("some draw is playable");
        let trace = generate_level(&net, &biased, &cfg, &mut rng::seeded(seed)).unwrap();
        assert!(trace.steps.is_empty());
        assert_eq!(trace.terminated_by, Termination::Playable);
        assert_eq!(trace.start, trace.final_level);
    }

    #[test]
    fn replay_and_flags_hold_over_many_runs() {
        for id in GameId::ALL {
            let game = GameSpec::new(id);
            let crop = game.default_obs_size;
            let spec = NetworkSpec::new(crop, game.alphabet.len() + 1, [4, 4, 8], game.alphabet.len()).unwrap();
            let net = Network::init(spec, 11);
            let cfg = GenerationConfig::for_network(&net);
            let limit = cfg.step_limit(&game);
            let runs = if id == GameId::Zelda { 1000 } else { 150 };
            let traces = batch_generate(&net, &game, &cfg, runs, 5).unwrap();
            for t in &traces {
                assert_eq!(t.replay(), t.final_level);
                assert!(t.steps.len() <= limit);
                let verdict = check_playable(&game, &t.final_level).unwrap();
                assert_eq!(verdict, t.verdict);
                assert_eq!(verdict.playable, t.terminated_by == Termination::Playable);
            }
        }
    }

    #[test]
    fn batch_is_deterministic_and_matches_single_runs() {
        let game = GameSpec::zelda();
        let spec = NetworkSpec::new(5, 9, [4, 4, 8], 8).unwrap();
        let net = Network::init(spec, 3);
        let cfg = GenerationConfig::for_network(&net);
        let a = batch_generate(&net, &game, &cfg, 20, 9).unwrap();
        assert_eq!(a, batch_generate(&net, &game, &cfg, 20, 9).unwrap());
        let single = generate_level(&net, &game, &cfg, &mut rng::derived(9, 0)).unwrap();
        assert_eq!(batch_generate(&net, &game, &cfg, 1, 9).unwrap(), alloc::vec![single]);
        assert_ne!(a, batch_generate(&net, &game, &cfg, 20, 10).unwrap());
    }

    #[test]
    fn mismatched_network_rejected() {
        let game = GameSpec::sokoban();
        let spec = NetworkSpec::new(5, 9, [4, 4, 8], 8).unwrap();
        let net = Network::init(spec, 3);
        let cfg = GenerationConfig::for_network(&net);
        assert!(matches!(
            generate_level(&net, &game, &cfg, &mut rng::seeded(0)),
            Err(GenerationError::ActionMismatch { .. })
        ));
        let zelda = GameSpec::zelda();
        let bad = GenerationConfig::new(ObservationSpec::new(3, 8).unwrap());
        assert!(matches!(
            generate_level(&net, &zelda, &bad, &mut rng::seeded(0)),
            Err(GenerationError::ObservationMismatch { .. })
        ));
        assert_eq!(
            batch_generate(&net, &zelda, &cfg.with_passes(0), 1, 0).unwrap_err(),
            GenerationError::ZeroPasses
        );
    }
}
