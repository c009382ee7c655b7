//! Run configuration: named presets, TOML files and dotted overrides,
//! merged in that order and then checked strictly.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::dynamics::PhysicalParams;
use crate::env::{EnvConfig, RewardWeights, Role};
use crate::error::{Error, Result};
use crate::ppo::PpoConfig;

/// Named budget presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// Reduced budget that finishes in minutes on one core.
    Desk,
    /// The published final hyperparameters.
    Paper,
}

impl Profile {
    pub fn as_str(self) -> &'static str {
        match self {
            Profile::Desk => "desk",
            Profile::Paper => "paper",
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Profile::Desk),
            "paper" => Ok(Profile::Paper),
            other => Err(Error::Config(format!(
                "unknown profile {other:?} (expected desk or paper)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub hidden: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingConfig {
    pub max_iterations: usize,
    /// Evaluate (and checkpoint) every this many iterations.
    pub eval_every: usize,
    pub eval_episodes: usize,
    /// Relative improvement below which an evaluation counts as stale.
    pub early_stop_delta: f64,
    pub early_stop_patience: usize,
    /// Sample frozen layers from their distribution instead of using the mean.
    pub stochastic_frozen: bool,
    /// Share of defender actors whose attack layer is the random baseline
    /// instead of the frozen attacker.
    pub defender_random_attack_fraction: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointPaths {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nominal: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attacker: Option<PathBuf>,
}

/// Everything a training run needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub role: Role,
    pub profile: Profile,
    pub seed: u64,
    pub ppo: PpoConfig,
    pub env: EnvConfig,
    pub physics: PhysicalParams,
    pub rewards: RewardWeights,
    pub network: NetworkConfig,
    pub training: TrainingConfig,
    #[serde(default)]
    pub checkpoints: CheckpointPaths,
}

impl RunConfig {
    /// The built-in preset for `role` under `profile`.
    pub fn preset(role: Role, profile: Profile) -> Self {
        let nominal = role == Role::Nominal;
        let (hidden, learning_rate, minibatch_size) = if nominal {
            (vec![128, 64], 3e-4, 256)
        } else {
            (vec![64, 64], 1e-4, 128)
        };
        let mut ppo = PpoConfig {
            learning_rate,
            minibatch_size,
            epochs: 10,
            gamma: 0.99,
            ..PpoConfig::default()
        };
        let training = match profile {
            Profile::Desk => {
                ppo.steps_per_actor = 2048;
                ppo.actors = 4;
                ppo.entropy_coef = DESK_ENTROPY_COEF;
                TrainingConfig {
                    max_iterations: 150,
                    eval_every: 45,
                    eval_episodes: 20,
                    early_stop_delta: 0.01,
                    early_stop_patience: 3,
                    stochastic_frozen: false,
                    defender_random_attack_fraction: DEFENDER_RANDOM_FRACTION,
                }
            }
            Profile::Paper => {
                ppo.steps_per_actor = 5120;
                ppo.actors = 5;
                TrainingConfig {
                    max_iterations: 1000,
                    eval_every: 45,
                    eval_episodes: 20,
                    early_stop_delta: 0.01,
                    early_stop_patience: 3,
                    stochastic_frozen: false,
                    defender_random_attack_fraction: 0.0,
                }
            }
        };
        RunConfig {
            role,
            profile,
            seed: 0,
            ppo,
            env: EnvConfig::default(),
            physics: PhysicalParams::default(),
            rewards: RewardWeights::default(),
            network: NetworkConfig { hidden },
            training,
            checkpoints: CheckpointPaths::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.ppo.validate()?;
        self.physics.validate()?;
        self.env.validate(&self.physics)?;
        self.rewards.validate()?;
        let t = &self.training;
        let bad = |key: &str, why: &str| Err(Error::Config(format!("training.{key}: {why}")));
        if self.network.hidden.is_empty() || self.network.hidden.contains(&0) {
            return Err(Error::Config(
                "network.hidden: need at least one layer, all widths positive".into(),
            ));
        }
        if t.max_iterations == 0 {
            return bad("max_iterations", "must be positive");
        }
        if t.eval_every == 0 {
            return bad("eval_every", "must be positive");
        }
        if t.eval_episodes == 0 {
            return bad("eval_episodes", "must be positive");
        }
        if !(t.early_stop_delta >= 0.0 && t.early_stop_delta.is_finite()) {
            return bad("early_stop_delta", "must be finite and non-negative");
        }
        if t.early_stop_patience == 0 {
            return bad("early_stop_patience", "must be positive");
        }
        if !(0.0..=1.0).contains(&t.defender_random_attack_fraction) {
            return bad("defender_random_attack_fraction", "must lie in [0, 1]");
        }
        Ok(())
    }
}

/// Entropy bonus of the desk profile. The published 0.05 makes the
/// state-independent log-std grow without bound at this budget.
pub const DESK_ENTROPY_COEF: f64 = 0.0;

/// Desk defenders train a quarter of their actors against the random attack.
pub const DEFENDER_RANDOM_FRACTION: f64 = 0.25;

/// Layered configuration builder: preset, then files, then `key=value`
/// overrides, checked once at the end.
#[derive(Debug, Clone)]
pub struct ConfigLoader {
    tree: Table,
}

impl ConfigLoader {
    pub fn new(role: Role, profile: Profile) -> Self {
        ConfigLoader {
            tree: to_table(&RunConfig::preset(role, profile)),
        }
    }

    /// Starts from the preset named inside `path` (top-level `role` and
    /// `profile`, defaulting to nominal and desk), then merges the file.
    pub fn from_file(path: &Path) -> Result<Self> {
        Self::resolve(None, None, Some(path))
    }

    /// Picks the preset from the explicit `role`/`profile`, else from the
    /// file's top-level keys, else nominal/desk; then merges the file. The
    /// explicit values win over the file's.
    pub fn resolve(role: Option<Role>, profile: Option<Profile>, file: Option<&Path>) -> Result<Self> {
        let table = file.map(read_table).transpose()?;
        let from_file = |key: &str| -> Result<Option<String>> {
            match table.as_ref().and_then(|t| t.get(key)) {
                Some(Value::String(s)) => Ok(Some(s.clone())),
                Some(_) => Err(Error::Config(format!("{key}: expected a string"))),
                None => Ok(None),
            }
        };
        let role = match role {
            Some(r) => r,
            None => from_file("role")?.map(|s| s.parse()).transpose()?.unwrap_or(Role::Nominal),
        };
        let profile = match profile {
            Some(p) => p,
            None => from_file("profile")?
                .map(|s| s.parse())
                .transpose()?
                .unwrap_or(Profile::Desk),
        };
        let mut loader = ConfigLoader::new(role, profile);
        if let Some(t) = table {
            merge(&mut loader.tree, t, "")?;
        }
        loader.tree.insert("role".into(), Value::String(role.as_str().into()));
        loader.tree.insert("profile".into(), Value::String(profile.as_str().into()));
        Ok(loader)
    }

    pub fn merge_file(&mut self, path: &Path) -> Result<&mut Self> {
        let file = read_table(path)?;
        merge(&mut self.tree, file, "")?;
        Ok(self)
    }

    /// Applies one `dotted.key=value` override. The value is read as a TOML
    /// literal and falls back to a bare string.
    pub fn set(&mut self, assignment: &str) -> Result<&mut Self> {
        let (key, raw) = assignment.split_once('=').ok_or_else(|| {
            Error::Config(format!("override {assignment:?} is not of the form key=value"))
        })?;
        let key = key.trim();
        if key.is_empty() || key.split('.').any(str::is_empty) {
            return Err(Error::Config(format!("override {assignment:?} has an empty key")));
        }
        let value = parse_literal(raw.trim());
        let mut patch = Table::new();
        let mut parts: Vec<&str> = key.split('.').collect();
        let leaf = parts.pop().expect("split yields at least one part");
        let mut cursor = &mut patch;
        for p in parts {
            cursor = cursor
                .entry(p.to_string())
                .or_insert_with(|| Value::Table(Table::new()))
                .as_table_mut()
                .expect("freshly inserted table");
        }
        cursor.insert(leaf.to_string(), value);
        merge(&mut self.tree, patch, "")?;
        Ok(self)
    }

    /// The role the tree currently names, without validating anything else.
    pub fn role(&self) -> Result<Role> {
        match self.tree.get("role") {
            Some(Value::String(s)) => s.parse(),
            _ => Err(Error::Config("role: expected a string".into())),
        }
    }

    pub fn build(&self) -> Result<RunConfig> {
        let config: RunConfig = Value::Table(self.tree.clone())
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
        config.validate()?;
        Ok(config)
    }
}

fn parse_literal(raw: &str) -> Value {
    toml::from_str::<Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

fn read_table(path: &Path) -> Result<Table> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.parse::<Table>()
        .map_err(|e| Error::Config(format!("{}: {}", path.display(), e.message())))
}

fn to_table(config: &RunConfig) -> Table {
    match Value::try_from(config).expect("RunConfig serializes to TOML") {
        Value::Table(t) => t,
        _ => unreachable!("structs serialize to tables"),
    }
}

/// Recursive merge. Tables merge key by key; anything else replaces. A table
/// may not overwrite a scalar or the other way round.
fn merge(base: &mut Table, patch: Table, prefix: &str) -> Result<()> {
    for (key, value) in patch {
        let path = if prefix.is_empty() {
            key.clone()
        } else {
            format!("{prefix}.{key}")
        };
        match (base.get_mut(&key), value) {
            (Some(Value::Table(b)), Value::Table(p)) => merge(b, p, &path)?,
            (Some(Value::Table(_)), _) => {
                return Err(Error::Config(format!("{path}: expected a table")));
            }
            (Some(_), Value::Table(_)) => {
                return Err(Error::Config(format!("{path}: expected a value, got a table")));
            }
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
    Ok(())
}

/// Every configurable key with its default for `role` under `profile`, as
/// `(dotted.key, value)` pairs in document order.
pub fn config_keys(role: Role, profile: Profile) -> Vec<(String, String)> {
    fn walk(t: &Table, prefix: &str, out: &mut Vec<(String, String)>) {
        for (k, v) in t {
            let key = if prefix.is_empty() {
                k.clone()
            } else {
                format!("{prefix}.{k}")
            };
            match v {
                Value::Table(inner) => walk(inner, &key, out),
                other => out.push((key, other.to_string())),
            }
        }
    }
    let mut out = Vec::new();
    walk(&to_table(&RunConfig::preset(role, profile)), "", &mut out);
    out.push(("checkpoints.nominal".into(), "(path)".into()));
    out.push(("checkpoints.attacker".into(), "(path)".into()));
    out
}
