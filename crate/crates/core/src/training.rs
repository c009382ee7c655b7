//! Staged training of the nominal controller, the attacker (against a frozen
//! nominal) and the defender (against frozen nominal and attacker layers),
//! with periodic evaluation, early stopping and hyperparameter grids.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::PhysicalParams;
use crate::env::{
    AttackSource, Controller, EnvConfig, EpisodeOutcome, Layers, LayeredEnv, QuadEnv, RewardWeights,
    Role, ACTION_DIM, OBS_DIM,
};
use crate::error::{Error, Result};
use crate::nn::checkpoint::{content_hash, params_hash, Checkpoint};
use crate::nn::{init, MlpSpec, PolicyParams};
use crate::ppo::{actor_seeds, Actor, IterationStats, Learner};

pub mod config;
pub mod grid;

pub use config::{ConfigLoader, Profile, RunConfig, TrainingConfig};
pub use grid::{grid_search, GridResult, GridSpec};

/// Early-stopping rule: stop once the best evaluation has not improved by
/// more than `delta` (relative) for `patience` consecutive evaluations.
#[derive(Debug, Clone, PartialEq)]
pub struct EarlyStopper {
    pub delta: f64,
    pub patience: usize,
    history: Vec<f64>,
    best: Option<(usize, f64)>,
    stale: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopDecision {
    Continue,
    Stop,
}

impl EarlyStopper {
    pub fn new(delta: f64, patience: usize) -> Self {
        EarlyStopper {
            delta,
            patience,
            history: Vec::new(),
            best: None,
            stale: 0,
        }
    }

    /// Records one evaluation mean. A value counts as an improvement only if
    /// it beats the best so far by more than `delta` relative to it; the best
    /// index tracks the plain argmax either way.
    pub fn push(&mut self, value: f64) -> StopDecision {
        let index = self.history.len();
        self.history.push(value);
        match self.best {
            None => self.best = Some((index, value)),
            Some((_, best)) => {
                if value > best + self.delta * best.abs() {
                    self.stale = 0;
                } else {
                    self.stale += 1;
                }
                if value > best {
                    self.best = Some((index, value));
                }
            }
        }
        if self.history.len() >= 2 && self.stale >= self.patience {
            StopDecision::Stop
        } else {
            StopDecision::Continue
        }
    }

    pub fn history(&self) -> &[f64] {
        &self.history
    }

    /// Index and value of the best evaluation so far.
    pub fn best(&self) -> Option<(usize, f64)> {
        self.best
    }
}

/// Applies [`EarlyStopper`] to a complete history and returns the number of
/// evaluations consumed before the rule fired, or `None` if it never fired.
pub fn early_stop(history: &[f64], delta: f64, patience: usize) -> Option<usize> {
    let mut s = EarlyStopper::new(delta, patience);
    history
        .iter()
        .position(|&v| s.push(v) == StopDecision::Stop)
        .map(|i| i + 1)
}

/// Summary of a deterministic evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub mean_reward: f64,
    pub std_reward: f64,
    pub outcomes: Vec<EpisodeOutcome>,
}

/// Runs `episodes` episodes with every layer frozen (the evaluated policy
/// acting on its mean) and scores them from `role`'s perspective. Episode `i`
/// draws its hover point and spawn from `seed + i`.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_policy(
    role: Role,
    policy: &PolicyParams,
    frozen: &Layers,
    env: &EnvConfig,
    physics: &PhysicalParams,
    weights: &RewardWeights,
    episodes: usize,
    seed: u64,
) -> Result<EvalReport> {
    let mut layers = frozen.clone();
    let own = Controller::deterministic(policy.clone());
    own.check_spec()?;
    match role {
        Role::Nominal => layers.nominal = Some(own),
        Role::Attacker => layers.attack = Some(AttackSource::Policy(own)),
        Role::Defender => layers.defense = Some(own),
    }
    let mut env = LayeredEnv::new(QuadEnv::new(env.clone(), *physics)?, *weights, None, layers)?;
    let mut outcomes = Vec::with_capacity(episodes);
    for i in 0..episodes {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
        env.core.reset(&mut rng);
        outcomes.push(env.run_episode(role, &mut rng)?);
    }
    let n = episodes.max(1) as f64;
    let mean_reward = outcomes.iter().map(|o| o.total_reward).sum::<f64>() / n;
    let var = outcomes
        .iter()
        .map(|o| (o.total_reward - mean_reward).powi(2))
        .sum::<f64>()
        / n;
    Ok(EvalReport {
        mean_reward,
        std_reward: var.sqrt(),
        outcomes,
    })
}

/// The command a fresh policy of `role` emits before training: hover thrust
/// for the nominal controller, nothing for the additive layers.
pub fn neutral_command(role: Role, physics: &PhysicalParams) -> [f64; 4] {
    match role {
        Role::Nominal => [physics.hover_thrust, 0.0, 0.0, 0.0],
        Role::Attacker | Role::Defender => [0.0; 4],
    }
}

/// Fresh policy for `role`, with the mean head biased to the neutral command.
pub fn initial_policy(config: &RunConfig) -> Result<PolicyParams> {
    let spec = MlpSpec::new(OBS_DIM, config.network.hidden.clone(), ACTION_DIM)?;
    let mut params = init(&spec, config.seed)?;
    params
        .mean_bias_mut()
        .copy_from_slice(&neutral_command(config.role, &config.physics));
    Ok(params)
}

/// Frozen checkpoint with the content hash of its file.
#[derive(Debug, Clone)]
pub struct FrozenPolicy {
    pub path: PathBuf,
    pub file_hash: String,
    pub params: PolicyParams,
}

impl FrozenPolicy {
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let ck = Checkpoint::from_bytes(&bytes).map_err(|e| match e {
            Error::Checkpoint(m) => Error::Checkpoint(format!("{}: {m}", path.display())),
            other => other,
        })?;
        let spec = ck.spec();
        if spec.input_dim != OBS_DIM || spec.action_dim != ACTION_DIM {
            return Err(Error::Checkpoint(format!(
                "{}: network is {}->{}, expected {OBS_DIM}->{ACTION_DIM}",
                path.display(),
                spec.input_dim,
                spec.action_dim
            )));
        }
        Ok(FrozenPolicy {
            path: path.to_path_buf(),
            file_hash: content_hash(&bytes),
            params: ck.params,
        })
    }

    fn controller(&self, stochastic: bool) -> Controller {
        Controller {
            params: Arc::new(self.params.clone()),
            stochastic,
        }
    }
}

/// Frozen dependencies of a run, per role.
#[derive(Debug, Clone, Default)]
pub struct FrozenSet {
    pub nominal: Option<FrozenPolicy>,
    pub attacker: Option<FrozenPolicy>,
}

impl FrozenSet {
    /// Loads the checkpoints `config.role` depends on. Missing paths are
    /// configuration errors.
    pub fn load(config: &RunConfig) -> Result<Self> {
        let need = |key: &str, path: &Option<PathBuf>| -> Result<FrozenPolicy> {
            let path = path.as_ref().ok_or_else(|| {
                Error::Config(format!(
                    "{} training requires checkpoints.{key}",
                    config.role
                ))
            })?;
            if !path.exists() {
                return Err(Error::Config(format!(
                    "checkpoints.{key} points to a missing file: {}",
                    path.display()
                )));
            }
            FrozenPolicy::load(path)
        };
        let c = &config.checkpoints;
        Ok(match config.role {
            Role::Nominal => FrozenSet::default(),
            Role::Attacker => FrozenSet {
                nominal: Some(need("nominal", &c.nominal)?),
                attacker: None,
            },
            Role::Defender => FrozenSet {
                nominal: Some(need("nominal", &c.nominal)?),
                attacker: if config.training.defender_random_attack_fraction >= 1.0 {
                    None
                } else {
                    Some(need("attacker", &c.attacker)?)
                },
            },
        })
    }

    /// Layers for training (`stochastic` frozen policies if requested).
    pub fn layers(&self, stochastic: bool) -> Layers {
        Layers {
            nominal: self.nominal.as_ref().map(|f| f.controller(stochastic)),
            attack: self
                .attacker
                .as_ref()
                .map(|f| AttackSource::Policy(f.controller(stochastic))),
            defense: None,
        }
    }

    pub fn hashes(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        if let Some(f) = &self.nominal {
            m.insert("nominal".into(), f.file_hash.clone());
        }
        if let Some(f) = &self.attacker {
            m.insert("attacker".into(), f.file_hash.clone());
        }
        m
    }

    fn params_hashes(&self) -> Vec<String> {
        [&self.nominal, &self.attacker]
            .into_iter()
            .flatten()
            .map(|f| params_hash(&f.params))
            .collect()
    }
}

/// One row of the per-iteration diagnostics log.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsRow {
    pub iteration: usize,
    pub env_steps: usize,
    pub mean_episode_reward: Option<f64>,
    pub episodes: usize,
    pub loss: f64,
    pub policy_objective: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    pub approx_kl: f64,
    pub skipped_minibatches: usize,
    pub eval_mean_reward: Option<f64>,
}

impl DiagnosticsRow {
    fn new(iteration: usize, env_steps: usize, s: &IterationStats) -> Self {
        let m = &s.update.mean;
        DiagnosticsRow {
            iteration,
            env_steps,
            mean_episode_reward: s.mean_episode_return,
            episodes: s.episodes,
            loss: m.loss,
            policy_objective: m.policy_objective,
            value_loss: m.value_loss,
            entropy: m.entropy,
            clip_fraction: m.clip_fraction,
            approx_kl: m.approx_kl,
            skipped_minibatches: s.update.skipped,
            eval_mean_reward: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalPoint {
    pub iteration: usize,
    pub mean_reward: f64,
    pub std_reward: f64,
    pub checkpoint: String,
}

/// JSON manifest written next to every run's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub role: Role,
    pub seed: u64,
    pub actor_seeds: Vec<u64>,
    pub eval_seed: u64,
    pub iterations: usize,
    pub env_steps: usize,
    pub stopped_early: bool,
    pub best_iteration: usize,
    pub best_eval_mean: f64,
    pub evals: Vec<EvalPoint>,
    /// File name to content hash, for every checkpoint the run wrote.
    pub checkpoints: BTreeMap<String, String>,
    /// Content hashes of the frozen checkpoints this run depended on.
    pub frozen: BTreeMap<String, String>,
    pub config: RunConfig,
}

pub const MANIFEST_FILE: &str = "manifest.json";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const BEST_CHECKPOINT: &str = "best.ckpt";
pub const FINAL_CHECKPOINT: &str = "final.ckpt";

/// What [`train`] produced.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub best: Checkpoint,
    pub best_path: PathBuf,
    pub manifest: RunManifest,
    pub diagnostics: Vec<DiagnosticsRow>,
}

fn eval_seed(seed: u64) -> u64 {
    seed ^ 0x5EED_E7A1_0000_0000
}

/// Trains `config.role` and writes checkpoints, diagnostics and a manifest
/// into `out_dir`. Returns the best checkpoint by evaluation mean.
pub fn train(config: &RunConfig, out_dir: &Path) -> Result<TrainOutcome> {
    config.validate()?;
    let frozen = FrozenSet::load(config)?;
    let frozen_before = frozen.params_hashes();
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let tc = &config.training;
    let ppo = &config.ppo;
    let layers = frozen.layers(tc.stochastic_frozen);
    let eval_layers = frozen.layers(false);
    let seeds = actor_seeds(config.seed, ppo.actors);
    let mut actors = Vec::with_capacity(ppo.actors);
    for (i, &s) in seeds.iter().enumerate() {
        let mut actor_layers = layers.clone();
        if config.role == Role::Defender
            && (i as f64 + 0.5) / ppo.actors as f64 <= tc.defender_random_attack_fraction
        {
            actor_layers.attack = Some(AttackSource::Random);
        }
        let env = LayeredEnv::new(
            QuadEnv::new(config.env.clone(), config.physics)?,
            config.rewards,
            Some(config.role),
            actor_layers,
        )?;
        actors.push(Actor::new(env, s));
    }

    let mut learner = Learner::new(initial_policy(config)?);
    let mut update_rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));
    let mut stopper = EarlyStopper::new(tc.early_stop_delta, tc.early_stop_patience);
    let mut diagnostics = Vec::new();
    let mut evals = Vec::new();
    let mut checkpoints = BTreeMap::new();
    let mut best: Option<Checkpoint> = None;
    let mut stopped_early = false;
    let mut iterations = 0;
    let steps_per_iter = ppo.steps_per_actor * ppo.actors;
    let seed_eval = eval_seed(config.seed);

    let mut csv = csv::Writer::from_path(out_dir.join(DIAGNOSTICS_FILE))
        .map_err(|e| Error::Config(format!("cannot open diagnostics log: {e}")))?;
    for it in 1..=tc.max_iterations {
        let stats = learner.iterate(&mut actors, ppo, &mut update_rng)?;
        iterations = it;
        let mut row = DiagnosticsRow::new(it, it * steps_per_iter, &stats);
        let due = it % tc.eval_every == 0 || it == tc.max_iterations;
        if due {
            let report = evaluate_policy(
                config.role,
                &learner.params,
                &eval_layers,
                &config.env,
                &config.physics,
                &config.rewards,
                tc.eval_episodes,
                seed_eval,
            )?;
            row.eval_mean_reward = Some(report.mean_reward);
            let ck = Checkpoint {
                params: learner.params.clone(),
                adam: Some(learner.adam.clone()),
                seed: config.seed,
            };
            let name = format!("iter_{it:04}.ckpt");
            let bytes = ck.to_bytes();
            let path = out_dir.join(&name);
            fs::write(&path, &bytes).map_err(|e| Error::io(&path, e))?;
            checkpoints.insert(name.clone(), content_hash(&bytes));
            evals.push(EvalPoint {
                iteration: it,
                mean_reward: report.mean_reward,
                std_reward: report.std_reward,
                checkpoint: name,
            });
            let decision = stopper.push(report.mean_reward);
            if stopper.best().map(|(i, _)| i) == Some(evals.len() - 1) {
                best = Some(ck);
            }
            log::info!(
                "{} iter {it}: eval mean {:.2} (best {:.2})",
                config.role,
                report.mean_reward,
                stopper.best().map_or(f64::NAN, |b| b.1)
            );
            if decision == StopDecision::Stop {
                stopped_early = true;
            }
        }
        csv.serialize(&row)?;
        diagnostics.push(row);
        if stopped_early {
            break;
        }
    }
    csv.flush().map_err(|e| Error::io(out_dir.join(DIAGNOSTICS_FILE), e))?;

    let final_ck = Checkpoint {
        params: learner.params.clone(),
        adam: Some(learner.adam.clone()),
        seed: config.seed,
    };
    let final_bytes = final_ck.to_bytes();
    let final_path = out_dir.join(FINAL_CHECKPOINT);
    fs::write(&final_path, &final_bytes).map_err(|e| Error::io(&final_path, e))?;
    checkpoints.insert(FINAL_CHECKPOINT.into(), content_hash(&final_bytes));

    let best = best.unwrap_or(final_ck);
    let best_bytes = best.to_bytes();
    let best_path = out_dir.join(BEST_CHECKPOINT);
    fs::write(&best_path, &best_bytes).map_err(|e| Error::io(&best_path, e))?;
    checkpoints.insert(BEST_CHECKPOINT.into(), content_hash(&best_bytes));

    if frozen.params_hashes() != frozen_before {
        return Err(Error::Contract("frozen layer parameters changed during training".into()));
    }
    for f in [&frozen.nominal, &frozen.attacker].into_iter().flatten() {
        if FrozenPolicy::load(&f.path)?.file_hash != f.file_hash {
            return Err(Error::Contract(format!(
                "frozen checkpoint {} changed on disk during training",
                f.path.display()
            )));
        }
    }

    let (best_index, best_eval_mean) = stopper.best().unwrap_or((0, f64::NAN));
    let manifest = RunManifest {
        role: config.role,
        seed: config.seed,
        actor_seeds: seeds,
        eval_seed: seed_eval,
        iterations,
        env_steps: iterations * steps_per_iter,
        stopped_early,
        best_iteration: evals.get(best_index).map_or(iterations, |e| e.iteration),
        best_eval_mean,
        evals,
        checkpoints,
        frozen: frozen.hashes(),
        config: config.clone(),
    };
    write_json(&out_dir.join(MANIFEST_FILE), &manifest)?;
    Ok(TrainOutcome {
        best,
        best_path,
        manifest,
        diagnostics,
    })
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Deduplicated cartesian product of per-key value lists, in key order.
pub fn cartesian(values: &BTreeMap<String, Vec<toml::Value>>) -> Vec<Vec<(String, toml::Value)>> {
    let mut combos: Vec<Vec<(String, toml::Value)>> = vec![Vec::new()];
    for (key, list) in values {
        let mut seen = BTreeSet::new();
        let unique: Vec<&toml::Value> = list.iter().filter(|v| seen.insert(v.to_string())).collect();
        combos = combos
            .into_iter()
            .flat_map(|c| {
                unique.iter().map(move |v| {
                    let mut c = c.clone();
                    c.push((key.clone(), (*v).clone()));
                    c
                })
            })
            .collect();
    }
    combos
}
