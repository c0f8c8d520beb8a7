//! Dataset, training and generation wired together on a small Sokoban run.

use pod_core::eval::evaluate;
use pod_core::games::check_playable;
use pod_core::nn::{samples_from_examples, train};
use pod_core::podgen::{build_examples, DatasetConfig};
use pod_core::tilemap::parse_level;
use pod_core::{GameSpec, GenerationConfig, LevelGrid, NetworkSpec, ObservationSpec, Termination, TrainConfig};

const GOALS: [&str; 3] = [
    ".....\n.@$o.\n.....\n.#...\n.....\n",
    "#....\n.@...\n.$...\n.o...\n.....\n",
    "o...#\n.$...\n..@..\n.....\n#....\n",
];

fn goals(game: &GameSpec) -> Vec<LevelGrid> {
    GOALS.iter().map(|t| parse_level(t, &game.alphabet).unwrap()).collect()
}

#[test]
fn small_sokoban_run() {
    let game = GameSpec::sokoban();
    let goals = goals(&game);
    for g in &goals {
        assert!(check_playable(&game, g).unwrap().playable);
    }
    let data = build_examples(&game, &goals, &DatasetConfig { target_examples: 600, seed: 4, ..Default::default() }).unwrap();
    assert!(data.examples.len() >= 600);

    let obs = ObservationSpec::new(3, game.alphabet.len()).unwrap();
    let samples = samples_from_examples(&data.examples, &obs);
    let spec = NetworkSpec::new(3, obs.channel_count, [8, 8, 16], game.alphabet.len()).unwrap();
    let config = TrainConfig { epochs: 5, ..TrainConfig::default() };
    let out = train(&samples, spec, &config, 1, |_, _| {}).unwrap();
    assert!(out.epoch_losses.last().unwrap() < &out.epoch_losses[0]);

    let gen = GenerationConfig::for_network(&out.network);
    let (summary, traces) = evaluate(std::slice::from_ref(&out.network), &game, &goals, &gen, 40, 9).unwrap();
    assert_eq!(traces[0].len(), 40);
    let limit = gen.step_limit(&game);
    for t in &traces[0] {
        assert_eq!(t.replay(), t.final_level);
        assert!(t.steps.len() <= limit);
        assert_eq!(t.verdict, check_playable(&game, &t.final_level).unwrap());
        match t.terminated_by {
            Termination::Playable => assert!(t.verdict.playable),
            Termination::Budget => assert_eq!(t.steps.len(), limit),
        }
    }
    let seed = &summary.per_seed[0];
    assert_eq!(seed.trials, 40);
    assert!(seed.playable_unique <= seed.playable);
    assert!(summary.single_seed());
}
