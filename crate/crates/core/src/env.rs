//! Layered quadrotor environments for the nominal, attacker and defender
//! roles.
//!
//! Every control tick each layer emits a raw 4-channel command. Commands are
//! summed channel-wise (nominal + attack + defense) and saturated once, so a
//! layer can cancel or overpower another. The attack layer only takes effect
//! once `t >= attack_start`.
//!
//! A crash ends the episode. When `crash_absorbing` is set, the wreck keeps
//! paying its tracking term (without survival bonus or action cost) for the
//! rest of the horizon, which matches the finite-horizon objective each role
//! optimizes.

use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use nalgebra::Vector3;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    self, clamp_command, ControlCommand, CrashCause, PhysicalParams, QuadrotorState, RATE_LIMIT,
    THRUST_MAX, THRUST_MIN,
};
use crate::error::{Error, Result};
use crate::nn::{forward, PolicyParams};
use crate::ppo::{gaussian_log_prob, Absorbing, EnvStep, Environment};

pub const OBS_DIM: usize = 18;
pub const ACTION_DIM: usize = 4;

/// Observation component names in layout order.
pub const OBS_FIELDS: [&str; OBS_DIM] = [
    "p", "q", "r", "phi", "theta", "psi", "vx", "vy", "vz", "x", "y", "z", "p_prev", "q_prev",
    "r_prev", "x_h", "y_h", "z_h",
];

/// Header of trajectory CSV files.
pub const TRAJECTORY_HEADER: [&str; 20] = [
    "t", "x", "y", "z", "phi", "theta", "psi", "v_b", "p_b", "q_b", "r_b", "v_a", "p_a", "q_a",
    "r_a", "v_d", "p_d", "q_d", "r_d", "dist",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Nominal,
    Attacker,
    Defender,
}

impl Role {
    pub const ALL: [Role; 3] = [Role::Nominal, Role::Attacker, Role::Defender];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Nominal => "nominal",
            Role::Attacker => "attacker",
            Role::Defender => "defender",
        }
    }

    fn slot(self) -> usize {
        self as usize
    }
}

impl std::fmt::Display for Role {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Role {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nominal" => Ok(Role::Nominal),
            "attacker" => Ok(Role::Attacker),
            "defender" => Ok(Role::Defender),
            _ => Err(Error::Config(format!(
                "unknown role {s:?} (expected nominal, attacker or defender)"
            ))),
        }
    }
}

/// The 18-component agent input.
///
/// Layout: body rates, Euler angles, inertial velocity, position, the
/// layer's own previous body-rate command, hover point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation(pub [f64; OBS_DIM]);

impl Observation {
    pub fn new(state: &QuadrotorState, prev_rates: [f64; 3], hover: &Vector3<f64>) -> Self {
        let mut o = [0.0; OBS_DIM];
        o[0..3].copy_from_slice(state.body_rates.as_slice());
        o[3..6].copy_from_slice(state.attitude.as_slice());
        o[6..9].copy_from_slice(state.velocity.as_slice());
        o[9..12].copy_from_slice(state.position.as_slice());
        o[12..15].copy_from_slice(&prev_rates);
        o[15..18].copy_from_slice(hover.as_slice());
        Observation(o)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RewardWeights {
    /// Diagonal position-error weights `Q`.
    pub q: [f64; 3],
    /// Diagonal attitude weights `L` (nominal role only).
    pub l: [f64; 3],
    /// Diagonal action-cost weights `R` (attacker and defender roles).
    pub r_cost: [f64; 4],
    /// Per-step survival constant (nominal role only).
    pub survival_bonus: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        RewardWeights {
            q: [1.0, 1.0, 1.0],
            l: [1.0, 1.0, 0.0],
            r_cost: [0.01, 0.05, 0.05, 0.05],
            survival_bonus: 1.5,
        }
    }
}

impl RewardWeights {
    pub fn validate(&self) -> Result<()> {
        let ok = self.q.iter().chain(&self.l).all(|w| w.is_finite() && *w >= 0.0)
            && self.r_cost.iter().all(|w| w.is_finite() && *w > 0.0)
            && self.survival_bonus.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::Config(
                "reward weights: q and l must be >= 0, r_cost > 0, all finite".into(),
            ))
        }
    }
}

fn quad_form(w: &[f64], x: &[f64]) -> f64 {
    w.iter().zip(x).map(|(w, x)| w * x * x).sum()
}

fn tracking_error(state: &QuadrotorState, hover: &Vector3<f64>, w: &RewardWeights) -> f64 {
    quad_form(&w.q, (state.position - hover).as_slice())
}

/// Per-step reward of `role` after the transition into `next`. `own` is the
/// role's raw command, before composition.
pub fn reward(
    role: Role,
    next: &QuadrotorState,
    hover: &Vector3<f64>,
    own: &[f64; 4],
    w: &RewardWeights,
) -> f64 {
    let x = tracking_error(next, hover, w);
    match role {
        Role::Nominal => w.survival_bonus - x - quad_form(&w.l, next.attitude.as_slice()),
        Role::Attacker => x - quad_form(&w.r_cost, own),
        Role::Defender => -x - quad_form(&w.r_cost, own),
    }
}

/// Per-step value of a wreck at `state`: the role's tracking term alone.
pub fn wreck_reward(
    role: Role,
    state: &QuadrotorState,
    hover: &Vector3<f64>,
    w: &RewardWeights,
) -> f64 {
    let x = tracking_error(state, hover, w);
    match role {
        Role::Nominal => -x - quad_form(&w.l, state.attitude.as_slice()),
        Role::Attacker => x,
        Role::Defender => -x,
    }
}

/// Channel-wise sum of the present layers, then saturation.
pub fn compose_commands(
    nominal: &[f64; 4],
    attack: Option<&[f64; 4]>,
    defense: Option<&[f64; 4]>,
) -> Result<(ControlCommand, bool)> {
    let mut sum = *nominal;
    for layer in [attack, defense].into_iter().flatten() {
        for (s, c) in sum.iter_mut().zip(layer) {
            *s += c;
        }
    }
    clamp_command(sum)
}

/// One draw of the random false-data baseline: every channel uniform over its
/// admissible range.
pub fn random_attack(rng: &mut ChaCha8Rng) -> [f64; 4] {
    [
        rng.random_range(THRUST_MIN..=THRUST_MAX),
        rng.random_range(-RATE_LIMIT..=RATE_LIMIT),
        rng.random_range(-RATE_LIMIT..=RATE_LIMIT),
        rng.random_range(-RATE_LIMIT..=RATE_LIMIT),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvConfig {
    /// Lower corner of the hover-point sampling box (m).
    pub hover_low: [f64; 3],
    pub hover_high: [f64; 3],
    /// Lower corner of the spawn sampling box (m).
    pub spawn_low: [f64; 3],
    pub spawn_high: [f64; 3],
    pub horizon_s: f64,
    /// Time at which the attack layer starts acting (s).
    pub attack_start_s: f64,
    /// Wrecks keep paying their tracking term until the horizon.
    pub crash_absorbing: bool,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            hover_low: [-1.0, -1.0, 0.0],
            hover_high: [1.0, 1.0, 2.0],
            spawn_low: [-1.0, -1.0, 0.0],
            spawn_high: [1.0, 1.0, 2.0],
            horizon_s: 10.0,
            attack_start_s: 0.0,
            crash_absorbing: true,
        }
    }
}

impl EnvConfig {
    pub fn horizon_steps(&self, dt: f64) -> usize {
        (self.horizon_s / dt).round() as usize
    }

    pub fn validate(&self, physics: &PhysicalParams) -> Result<()> {
        let boxes = [
            ("env.hover", self.hover_low, self.hover_high),
            ("env.spawn", self.spawn_low, self.spawn_high),
        ];
        for (name, lo, hi) in boxes {
            if lo.iter().chain(&hi).any(|v| !v.is_finite()) || lo.iter().zip(&hi).any(|(l, h)| l > h)
            {
                return Err(Error::Config(format!("{name}_low must not exceed {name}_high")));
            }
        }
        if self.horizon_s.is_nan() || self.horizon_s <= 0.0 || self.horizon_steps(physics.dt) == 0 {
            return Err(Error::Config(format!(
                "env.horizon_s must cover at least one step, got {}",
                self.horizon_s
            )));
        }
        if !(self.attack_start_s >= 0.0 && self.attack_start_s < self.horizon_s) {
            return Err(Error::Config(format!(
                "env.attack_start_s must lie in [0, horizon), got {}",
                self.attack_start_s
            )));
        }
        Ok(())
    }
}

fn uniform_point(rng: &mut ChaCha8Rng, lo: &[f64; 3], hi: &[f64; 3]) -> Vector3<f64> {
    Vector3::from_fn(|i, _| {
        if lo[i] == hi[i] {
            lo[i]
        } else {
            rng.random_range(lo[i]..=hi[i])
        }
    })
}

/// Per-layer raw commands for one tick. The attack slot may be filled before
/// the attack starts; it is then logged but not applied.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LayerCommands {
    pub nominal: [f64; 4],
    pub attack: Option<[f64; 4]>,
    pub defense: Option<[f64; 4]>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    pub prev: QuadrotorState,
    pub next: QuadrotorState,
    pub applied: ControlCommand,
    pub clipped: bool,
    pub attack_applied: bool,
    pub crash: Option<CrashCause>,
    /// Horizon reached without a crash.
    pub truncated: bool,
    /// Time of the tick this step started at (s).
    pub t: f64,
}

impl StepInfo {
    pub fn done(&self) -> bool {
        self.crash.is_some() || self.truncated
    }
}

/// The quadrotor plant, hover target and episode clock shared by all roles.
#[derive(Debug, Clone)]
pub struct QuadEnv {
    pub config: EnvConfig,
    pub physics: PhysicalParams,
    horizon: usize,
    attack_start: usize,
    state: QuadrotorState,
    hover: Vector3<f64>,
    k: usize,
    /// Previous body-rate command of each layer, indexed by [`Role`].
    prev_rates: [[f64; 3]; 3],
    done: bool,
}

impl QuadEnv {
    pub fn new(config: EnvConfig, physics: PhysicalParams) -> Result<Self> {
        physics.validate()?;
        config.validate(&physics)?;
        let horizon = config.horizon_steps(physics.dt);
        let attack_start = (config.attack_start_s / physics.dt).round() as usize;
        Ok(QuadEnv {
            config,
            physics,
            horizon,
            attack_start,
            state: QuadrotorState::at_rest(Vector3::zeros()),
            hover: Vector3::zeros(),
            k: 0,
            prev_rates: [[0.0; 3]; 3],
            done: true,
        })
    }

    /// Starts an episode at a random spawn with a random hover point.
    pub fn reset(&mut self, rng: &mut ChaCha8Rng) {
        let hover = uniform_point(rng, &self.config.hover_low, &self.config.hover_high);
        let spawn = uniform_point(rng, &self.config.spawn_low, &self.config.spawn_high);
        self.reset_to(spawn, hover);
    }

    /// Starts an episode at fixed points.
    pub fn reset_to(&mut self, spawn: Vector3<f64>, hover: Vector3<f64>) {
        self.state = QuadrotorState::at_rest(spawn);
        self.hover = hover;
        self.k = 0;
        self.prev_rates = [[0.0; 3]; 3];
        self.done = false;
    }

    pub fn state(&self) -> &QuadrotorState {
        &self.state
    }

    pub fn hover(&self) -> &Vector3<f64> {
        &self.hover
    }

    pub fn steps_taken(&self) -> usize {
        self.k
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn time(&self) -> f64 {
        self.k as f64 * self.physics.dt
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn attack_active(&self) -> bool {
        self.k >= self.attack_start
    }

    /// Observation as seen by the layer `role`.
    pub fn observation(&self, role: Role) -> Observation {
        Observation::new(&self.state, self.prev_rates[role.slot()], &self.hover)
    }

    pub fn distance(&self) -> f64 {
        (self.state.position - self.hover).norm()
    }

    /// Composes the layer commands and advances the plant one tick.
    pub fn step(&mut self, cmds: &LayerCommands) -> Result<StepInfo> {
        if self.done {
            return Err(Error::Contract("step called on a finished episode".into()));
        }
        let attack_applied = cmds.attack.is_some() && self.attack_active();
        let attack = cmds.attack.as_ref().filter(|_| attack_applied);
        let (applied, clipped) = compose_commands(&cmds.nominal, attack, cmds.defense.as_ref())?;
        let prev = self.state;
        let outcome = dynamics::step(&prev, &applied, &self.physics);
        let t = self.time();
        self.state = outcome.state;
        self.k += 1;
        let rates = |c: &[f64; 4]| [1, 2, 3].map(|i| c[i].clamp(-RATE_LIMIT, RATE_LIMIT));
        self.prev_rates[Role::Nominal.slot()] = rates(&cmds.nominal);
        if let Some(a) = &cmds.attack {
            self.prev_rates[Role::Attacker.slot()] = rates(a);
        }
        if let Some(d) = &cmds.defense {
            self.prev_rates[Role::Defender.slot()] = rates(d);
        }
        let truncated = outcome.crash.is_none() && self.k >= self.horizon;
        self.done = outcome.crash.is_some() || truncated;
        Ok(StepInfo {
            prev,
            next: outcome.state,
            applied,
            clipped,
            attack_applied,
            crash: outcome.crash,
            truncated,
            t,
        })
    }
}

/// A trained policy acting on its own layer's observation.
#[derive(Debug, Clone)]
pub struct Controller {
    pub params: Arc<PolicyParams>,
    /// Sample from the Gaussian instead of acting on its mean.
    pub stochastic: bool,
}

impl Controller {
    pub fn deterministic(params: PolicyParams) -> Self {
        Controller {
            params: Arc::new(params),
            stochastic: false,
        }
    }

    pub fn check_spec(&self) -> Result<()> {
        let spec = self.params.spec();
        if spec.input_dim != OBS_DIM || spec.action_dim != ACTION_DIM {
            return Err(Error::Checkpoint(format!(
                "controller expects {}-dim observations and {}-dim actions, got {} and {}",
                OBS_DIM, ACTION_DIM, spec.input_dim, spec.action_dim
            )));
        }
        Ok(())
    }

    pub fn act(&self, obs: &Observation, rng: &mut ChaCha8Rng) -> Result<[f64; 4]> {
        let out = forward(&self.params, obs.as_slice())?;
        let mut a = [0.0; 4];
        for (j, slot) in a.iter_mut().enumerate() {
            *slot = out.mean[j];
            if self.stochastic {
                let eps: f64 = rand_distr::Distribution::sample(&rand_distr::StandardNormal, rng);
                *slot += self.params.log_std()[j].exp() * eps;
            }
        }
        Ok(a)
    }

    /// Log-density of `action` under this controller's policy.
    pub fn log_prob(&self, obs: &Observation, action: &[f64]) -> Result<f64> {
        let out = forward(&self.params, obs.as_slice())?;
        Ok(gaussian_log_prob(&out.mean, self.params.log_std(), action))
    }
}

/// What occupies the attack slot.
#[derive(Debug, Clone)]
pub enum AttackSource {
    Policy(Controller),
    Random,
}

/// Occupants of the three layers. The learner's own slot, if any, must be
/// empty here.
#[derive(Debug, Clone, Default)]
pub struct Layers {
    pub nominal: Option<Controller>,
    pub attack: Option<AttackSource>,
    pub defense: Option<Controller>,
}

/// Episode record with one row per survived step.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub t: f64,
    /// Pre-step state.
    pub state: QuadrotorState,
    pub nominal: [f64; 4],
    /// Attack command issued at this tick, `None` when no attacker exists.
    pub attack: Option<[f64; 4]>,
    pub attack_applied: bool,
    pub defense: Option<[f64; 4]>,
    pub applied: ControlCommand,
    pub dist: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeOutcome {
    pub crashed: bool,
    pub crash_cause: Option<CrashCause>,
    pub steps: usize,
    /// Distance to the hover point of the last state reached (m).
    pub final_distance: f64,
    /// Sum of the evaluated role's rewards, plus the wreck remainder when
    /// crashes are absorbing.
    pub total_reward: f64,
    pub hover: Vector3<f64>,
    pub trajectory: Vec<TrajectoryRow>,
}

impl EpisodeOutcome {
    /// Crash time (s), when it crashed.
    pub fn time_to_crash(&self, dt: f64) -> Option<f64> {
        self.crashed.then_some(self.steps as f64 * dt)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
        self.write_rows(&mut w)?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn write_rows<W: Write>(&self, w: &mut csv::Writer<W>) -> Result<()> {
        w.write_record(TRAJECTORY_HEADER)?;
        for row in &self.trajectory {
            let s = &row.state;
            let mut rec = vec![row.t];
            rec.extend_from_slice(s.position.as_slice());
            rec.extend_from_slice(s.attitude.as_slice());
            rec.extend_from_slice(&row.nominal);
            rec.extend_from_slice(&row.attack.filter(|_| row.attack_applied).unwrap_or([0.0; 4]));
            rec.extend_from_slice(&row.defense.unwrap_or([0.0; 4]));
            rec.push(row.dist);
            w.write_record(rec.iter().map(|v| v.to_string()))?;
        }
        Ok(())
    }
}

/// A quadrotor environment seen from one role, with every other layer filled
/// by a frozen controller (or the random attack).
#[derive(Debug, Clone)]
pub struct LayeredEnv {
    pub core: QuadEnv,
    pub weights: RewardWeights,
    /// The learning layer, or `None` when every layer is frozen.
    pub role: Option<Role>,
    pub layers: Layers,
}

impl LayeredEnv {
    pub fn new(
        core: QuadEnv,
        weights: RewardWeights,
        role: Option<Role>,
        layers: Layers,
    ) -> Result<Self> {
        weights.validate()?;
        let occupied = [
            layers.nominal.is_some(),
            layers.attack.is_some(),
            layers.defense.is_some(),
        ];
        if let Some(r) = role {
            if occupied[r.slot()] {
                return Err(Error::Config(format!(
                    "the {r} layer is being trained and cannot also be frozen"
                )));
            }
        }
        if role != Some(Role::Nominal) && layers.nominal.is_none() {
            return Err(Error::Config("a nominal controller is required".into()));
        }
        if role == Some(Role::Defender) && layers.attack.is_none() {
            return Err(Error::Config("defender training requires an attack layer".into()));
        }
        for c in [layers.nominal.as_ref(), layers.defense.as_ref()].into_iter().flatten() {
            c.check_spec()?;
        }
        if let Some(AttackSource::Policy(c)) = &layers.attack {
            c.check_spec()?;
        }
        Ok(LayeredEnv {
            core,
            weights,
            role,
            layers,
        })
    }

    /// Fills every frozen slot and the learner's slot, then steps the plant.
    fn layer_commands(
        &self,
        learner: Option<&[f64]>,
        rng: &mut ChaCha8Rng,
    ) -> Result<LayerCommands> {
        let own = match (self.role, learner) {
            (Some(_), Some(a)) => {
                let a: [f64; 4] = a.try_into().map_err(|_| Error::DimensionMismatch {
                    expected: ACTION_DIM,
                    got: a.len(),
                })?;
                if a.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite("action"));
                }
                Some(a)
            }
            (None, None) => None,
            _ => return Err(Error::Contract("learner action does not match role".into())),
        };
        let core = &self.core;
        let pick = |role: Role, frozen: Option<&Controller>, rng: &mut ChaCha8Rng| {
            if self.role == Some(role) {
                Ok(own)
            } else {
                frozen.map(|c| c.act(&core.observation(role), rng)).transpose()
            }
        };
        let nominal = pick(Role::Nominal, self.layers.nominal.as_ref(), rng)?
            .ok_or_else(|| Error::Config("a nominal controller is required".into()))?;
        let attack = match (&self.layers.attack, self.role) {
            (_, Some(Role::Attacker)) => own,
            (Some(AttackSource::Policy(c)), _) => Some(c.act(&core.observation(Role::Attacker), rng)?),
            (Some(AttackSource::Random), _) => Some(random_attack(rng)),
            (None, _) => None,
        };
        let defense = pick(Role::Defender, self.layers.defense.as_ref(), rng)?;
        Ok(LayerCommands {
            nominal,
            attack,
            defense,
        })
    }

    /// One tick. Returns the step record and the reward of `reward_role`.
    pub fn advance(
        &mut self,
        learner: Option<&[f64]>,
        reward_role: Role,
        rng: &mut ChaCha8Rng,
    ) -> Result<(StepInfo, LayerCommands, f64)> {
        let cmds = self.layer_commands(learner, rng)?;
        let info = self.core.step(&cmds)?;
        let own = match reward_role {
            Role::Nominal => Some(cmds.nominal),
            Role::Attacker => cmds.attack.filter(|_| info.attack_applied),
            Role::Defender => cmds.defense,
        }
        .unwrap_or([0.0; 4]);
        let r = reward(reward_role, &info.next, self.core.hover(), &own, &self.weights);
        Ok((info, cmds, r))
    }

    /// Remaining-horizon payout of a wreck, if crashes are absorbing.
    pub fn absorbing(&self, role: Role, info: &StepInfo) -> Option<Absorbing> {
        (info.crash.is_some() && self.core.config.crash_absorbing).then(|| Absorbing {
            reward_per_step: wreck_reward(role, &info.next, self.core.hover(), &self.weights),
            steps: self.core.horizon() - self.core.steps_taken(),
        })
    }

    /// Plays one full episode from the current reset with every layer frozen,
    /// scoring it from `reward_role`'s perspective.
    pub fn run_episode(
        &mut self,
        reward_role: Role,
        rng: &mut ChaCha8Rng,
    ) -> Result<EpisodeOutcome> {
        if self.role.is_some() {
            return Err(Error::Contract("run_episode needs every layer frozen".into()));
        }
        let hover = *self.core.hover();
        let mut trajectory = Vec::with_capacity(self.core.horizon());
        let mut total = 0.0;
        loop {
            let dist = self.core.distance();
            let (info, cmds, r) = self.advance(None, reward_role, rng)?;
            total += r;
            trajectory.push(TrajectoryRow {
                t: info.t,
                state: info.prev,
                nominal: cmds.nominal,
                attack: cmds.attack,
                attack_applied: info.attack_applied,
                defense: cmds.defense,
                applied: info.applied,
                dist,
            });
            if info.done() {
                if let Some(a) = self.absorbing(reward_role, &info) {
                    total += a.total();
                }
                return Ok(EpisodeOutcome {
                    crashed: info.crash.is_some(),
                    crash_cause: info.crash,
                    steps: self.core.steps_taken(),
                    final_distance: self.core.distance(),
                    total_reward: total,
                    hover,
                    trajectory,
                });
            }
        }
    }
}

impl Environment for LayeredEnv {
    fn obs_dim(&self) -> usize {
        OBS_DIM
    }

    fn action_dim(&self) -> usize {
        ACTION_DIM
    }

    fn reset(&mut self, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        let role = self
            .role
            .ok_or_else(|| Error::Contract("training environment needs a learning role".into()))?;
        self.core.reset(rng);
        Ok(self.core.observation(role).0.to_vec())
    }

    fn step(&mut self, action: &[f64], rng: &mut ChaCha8Rng) -> Result<EnvStep> {
        let role = self
            .role
            .ok_or_else(|| Error::Contract("training environment needs a learning role".into()))?;
        let (info, _, reward) = self.advance(Some(action), role, rng)?;
        Ok(EnvStep {
            obs: self.core.observation(role).0.to_vec(),
            reward,
            terminated: info.crash.is_some(),
            truncated: info.truncated,
            absorbing: self.absorbing(role, &info),
        })
    }
}
