use std::path::Path;

use quadsec::dynamics::PhysicalParams;
use quadsec::env::{
    compose_commands, AttackSource, Controller, EnvConfig, LayeredEnv, Layers, QuadEnv,
    RewardWeights, Role,
};
use quadsec::nn::checkpoint::{content_hash, Checkpoint};
use quadsec::nn::{init, MlpSpec, PolicyParams};
use quadsec::ppo::Environment;
use quadsec::training::{
    early_stop, evaluate_policy, grid_search, train, ConfigLoader, GridSpec, Profile, RunConfig,
    RunManifest, BEST_CHECKPOINT, DIAGNOSTICS_FILE, FINAL_CHECKPOINT, MANIFEST_FILE,
};
use quadsec::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn tiny(role: Role) -> RunConfig {
    let mut c = RunConfig::preset(role, Profile::Desk);
    c.ppo.steps_per_actor = 64;
    c.ppo.actors = 2;
    c.ppo.minibatch_size = 64;
    c.ppo.epochs = 2;
    c.network.hidden = vec![8];
    c.training.max_iterations = 2;
    c.training.eval_every = 1;
    c.training.eval_episodes = 2;
    c.env.horizon_s = 1.0;
    c
}

fn read_manifest(dir: &Path) -> RunManifest {
    serde_json::from_slice(&std::fs::read(dir.join(MANIFEST_FILE)).unwrap()).unwrap()
}

#[test]
fn nominal_smoke_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = train(&tiny(Role::Nominal), dir.path()).unwrap();
    let ck = Checkpoint::load(&dir.path().join(FINAL_CHECKPOINT)).unwrap();
    assert_eq!(ck.params.spec().input_dim, 18);
    Checkpoint::load(&out.best_path).unwrap();
    let rows = csv::Reader::from_path(dir.path().join(DIAGNOSTICS_FILE))
        .unwrap()
        .records()
        .count();
    assert_eq!(rows, 2);
    assert_eq!(out.diagnostics.len(), 2);

    let m = read_manifest(dir.path());
    assert_eq!(m, out.manifest);
    assert_eq!(m.iterations, 2);
    for (name, hash) in &m.checkpoints {
        let bytes = std::fs::read(dir.path().join(name)).unwrap();
        assert_eq!(&content_hash(&bytes), hash, "{name}");
    }
}

#[test]
fn best_checkpoint_is_the_eval_argmax() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = tiny(Role::Nominal);
    c.training.max_iterations = 4;
    c.training.early_stop_patience = 10;
    let out = train(&c, dir.path()).unwrap();
    let m = &out.manifest;
    let best = m
        .evals
        .iter()
        .max_by(|a, b| a.mean_reward.total_cmp(&b.mean_reward))
        .unwrap();
    assert_eq!(m.best_eval_mean, best.mean_reward);
    assert_eq!(m.best_iteration, best.iteration);
    assert_eq!(m.checkpoints[BEST_CHECKPOINT], m.checkpoints[&best.checkpoint]);
}

#[test]
fn adversaries_need_their_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    let err = train(&tiny(Role::Attacker), dir.path()).unwrap_err();
    assert!(matches!(err, Error::Config(_)), "{err}");

    let mut c = tiny(Role::Defender);
    c.checkpoints.nominal = Some(dir.path().join("nope.ckpt"));
    let err = train(&c, dir.path()).unwrap_err();
    assert!(matches!(err, Error::Config(_)), "{err}");
}

#[test]
fn same_config_same_checkpoint() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tiny(Role::Nominal);
    let ma = train(&c, a.path()).unwrap().manifest;
    let mb = train(&c, b.path()).unwrap().manifest;
    assert_eq!(ma.checkpoints[FINAL_CHECKPOINT], mb.checkpoints[FINAL_CHECKPOINT]);

    let mut other = c.clone();
    other.seed = 1;
    let d = tempfile::tempdir().unwrap();
    let md = train(&other, d.path()).unwrap().manifest;
    assert_ne!(ma.checkpoints[FINAL_CHECKPOINT], md.checkpoints[FINAL_CHECKPOINT]);
}

#[test]
fn frozen_layers_are_untouched() {
    let root = tempfile::tempdir().unwrap();
    let nom_dir = root.path().join("nominal");
    train(&tiny(Role::Nominal), &nom_dir).unwrap();
    let nominal = nom_dir.join(FINAL_CHECKPOINT);
    let nominal_hash = content_hash(&std::fs::read(&nominal).unwrap());

    let mut atk = tiny(Role::Attacker);
    atk.checkpoints.nominal = Some(nominal.clone());
    let atk_dir = root.path().join("attacker");
    let m = train(&atk, &atk_dir).unwrap().manifest;
    assert_eq!(m.frozen["nominal"], nominal_hash);
    assert_eq!(content_hash(&std::fs::read(&nominal).unwrap()), nominal_hash);

    let attacker = atk_dir.join(FINAL_CHECKPOINT);
    let attacker_hash = content_hash(&std::fs::read(&attacker).unwrap());
    let mut def = tiny(Role::Defender);
    def.checkpoints.nominal = Some(nominal.clone());
    def.checkpoints.attacker = Some(attacker.clone());
    let m = train(&def, &root.path().join("defender")).unwrap().manifest;
    assert_eq!(m.frozen["nominal"], nominal_hash);
    assert_eq!(m.frozen["attacker"], attacker_hash);
    assert_eq!(content_hash(&std::fs::read(&attacker).unwrap()), attacker_hash);
}

fn controller(seed: u64, bias: [f64; 4]) -> Controller {
    let mut p = init(&MlpSpec::new(18, vec![8], 4).unwrap(), seed).unwrap();
    p.mean_bias_mut().copy_from_slice(&bias);
    Controller::deterministic(p)
}

#[test]
fn defender_collection_sums_all_three_layers() {
    let layers = Layers {
        nominal: Some(controller(1, [1.75, 0.0, 0.0, 0.0])),
        attack: Some(AttackSource::Policy(controller(2, [-0.5, 0.1, 0.0, 0.0]))),
        defense: None,
    };
    let core = QuadEnv::new(EnvConfig::default(), PhysicalParams::default()).unwrap();
    let mut env = LayeredEnv::new(core, RewardWeights::default(), Some(Role::Defender), layers).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    env.reset(&mut rng).unwrap();
    let own = [0.3, -0.05, 0.02, 0.0];
    for _ in 0..20 {
        let (info, cmds, _) = env.advance(Some(&own), Role::Defender, &mut rng).unwrap();
        assert!(info.attack_applied);
        assert_eq!(cmds.defense, Some(own));
        let (expected, _) =
            compose_commands(&cmds.nominal, cmds.attack.as_ref(), Some(&own)).unwrap();
        assert_eq!(info.applied, expected);
        if info.done() {
            break;
        }
    }
}

#[test]
fn zero_policy_evaluation_is_finite_and_repeatable() {
    let spec = MlpSpec::new(18, vec![8], 4).unwrap();
    let zero = PolicyParams::zeros(&spec).unwrap();
    let run = || {
        evaluate_policy(
            Role::Nominal,
            &zero,
            &Layers::default(),
            &EnvConfig::default(),
            &PhysicalParams::default(),
            &RewardWeights::default(),
            20,
            17,
        )
        .unwrap()
    };
    let a = run();
    assert!(a.mean_reward.is_finite());
    assert_eq!(a.outcomes.len(), 20);
    assert_eq!(a, run());
}

#[test]
fn early_stop_examples() {
    assert_eq!(early_stop(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0], 0.01, 3), None);
    assert_eq!(early_stop(&[5.0, 5.0, 5.0, 5.0], 0.01, 3), Some(4));
    // Best-so-far last moves at evaluation 5; three stale ones follow.
    let noisy = [1.0, 3.0, 2.0, 4.0, 6.0, 5.0, 6.02, 5.5, 7.0];
    assert_eq!(early_stop(&noisy, 0.01, 3), Some(8));
}

#[test]
fn two_by_two_grid_trains_four_cells() {
    let dir = tempfile::tempdir().unwrap();
    let mut base = ConfigLoader::new(Role::Nominal, Profile::Desk);
    for o in [
        "ppo.steps_per_actor=64",
        "ppo.actors=1",
        "ppo.epochs=1",
        "network.hidden=[8]",
        "training.max_iterations=1",
        "training.eval_episodes=1",
        "env.horizon_s=0.5",
    ] {
        base.set(o).unwrap();
    }
    let grid = GridSpec::new(Role::Nominal)
        .with("ppo.learning_rate", [1e-4.into(), 3e-4.into()])
        .with("ppo.minibatch_size", [32.into(), 64.into()]);
    let rows = grid_search(&base, &grid, dir.path()).unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.error.is_none()));
    let ranks: Vec<usize> = rows.iter().map(|r| r.rank).collect();
    assert_eq!(ranks, vec![1, 2, 3, 4]);
    let csv_rows = csv::Reader::from_path(dir.path().join("ranking.csv"))
        .unwrap()
        .records()
        .count();
    assert_eq!(csv_rows, 4);
}
