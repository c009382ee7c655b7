//! Proximal policy optimization over the shared actor-critic network.
//!
//! The policy is a diagonal Gaussian with state-dependent mean and a free
//! `log_std` vector. Rollouts are fixed-length segments of `T` steps from each
//! of `N` actors. Advantages are truncated n-step returns minus the critic's
//! estimate, and the update minimizes
//!
//! ```text
//! loss = -(L_clip - c1 * L_vf + c2 * entropy)
//! ```
//!
//! over `K` epochs of shuffled minibatches.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{adam_step, forward, AdamState, BatchForward, Gradients, PolicyParams};

pub mod toy;

/// `0.5 * ln(2 * pi)`.
const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;
const ADV_NORM_EPS: f64 = 1e-8;
/// Consecutive skipped minibatches tolerated before an update aborts.
pub const MAX_CONSECUTIVE_SKIPS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PpoConfig {
    /// Timesteps per actor per iteration (`T`).
    pub steps_per_actor: usize,
    /// Parallel actors (`N`).
    pub actors: usize,
    /// Passes over the buffer per iteration (`K`).
    pub epochs: usize,
    /// Minibatch size (`M`).
    pub minibatch_size: usize,
    pub gamma: f64,
    pub clip_epsilon: f64,
    /// Value loss weight `c1`.
    pub value_coef: f64,
    /// Entropy bonus weight `c2`.
    pub entropy_coef: f64,
    pub learning_rate: f64,
    /// Standardize advantages within each minibatch.
    pub normalize_advantages: bool,
    /// Global gradient-norm clip; `0` disables it.
    pub max_grad_norm: f64,
    /// Fit the critic to standardized return targets (running mean and std).
    pub normalize_values: bool,
}

impl Default for PpoConfig {
    fn default() -> Self {
        PpoConfig {
            steps_per_actor: 2048,
            actors: 4,
            epochs: 10,
            minibatch_size: 256,
            gamma: 0.99,
            clip_epsilon: 0.2,
            value_coef: 0.5,
            entropy_coef: 0.05,
            learning_rate: 3e-4,
            normalize_advantages: true,
            max_grad_norm: 0.5,
            normalize_values: true,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.steps_per_actor == 0 || self.actors == 0 {
            return bad("ppo.steps_per_actor and ppo.actors must be positive".into());
        }
        if self.minibatch_size == 0 || self.minibatch_size > self.steps_per_actor * self.actors {
            return bad(format!(
                "ppo.minibatch_size must be in 1..=N*T ({}), got {}",
                self.steps_per_actor * self.actors,
                self.minibatch_size
            ));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return bad(format!("ppo.gamma must be in [0, 1), got {}", self.gamma));
        }
        if self.clip_epsilon.is_nan() || self.clip_epsilon <= 0.0 {
            return bad(format!("ppo.clip_epsilon must be positive, got {}", self.clip_epsilon));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("ppo.learning_rate must be positive, got {}", self.learning_rate));
        }
        for (name, v) in [
            ("ppo.value_coef", self.value_coef),
            ("ppo.entropy_coef", self.entropy_coef),
            ("ppo.max_grad_norm", self.max_grad_norm),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be finite and non-negative, got {v}"));
            }
        }
        Ok(())
    }
}

/// Log-density of `action` under `N(mean, diag(exp(log_std))^2)`.
pub fn gaussian_log_prob(mean: &[f64], log_std: &[f64], action: &[f64]) -> f64 {
    mean.iter()
        .zip(log_std)
        .zip(action)
        .map(|((m, ls), a)| {
            let z = (a - m) / ls.exp();
            -0.5 * z * z - ls - HALF_LN_2PI
        })
        .sum()
}

/// Differential entropy of the diagonal Gaussian, which depends on `log_std`
/// only.
pub fn gaussian_entropy(log_std: &[f64]) -> f64 {
    log_std.iter().map(|ls| ls + 0.5 + HALF_LN_2PI).sum()
}

/// Draws a raw (unclamped) action and returns it with its log-density.
pub fn sample_action(
    params: &PolicyParams,
    obs: &[f64],
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<f64>, f64)> {
    let out = forward(params, obs)?;
    let action = sample_from(&out.mean, params.log_std(), rng);
    let log_prob = gaussian_log_prob(&out.mean, params.log_std(), &action);
    Ok((action, log_prob))
}

fn sample_from(mean: &[f64], log_std: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
    mean.iter()
        .zip(log_std)
        .map(|(m, ls)| {
            let eps: f64 = StandardNormal.sample(rng);
            m + ls.exp() * eps
        })
        .collect()
}

/// Importance ratio `pi_theta(a|s) / pi_old(a|s)`.
pub fn ratio(params: &PolicyParams, obs: &[f64], action: &[f64], log_prob_old: f64) -> Result<f64> {
    let out = forward(params, obs)?;
    Ok((gaussian_log_prob(&out.mean, params.log_std(), action) - log_prob_old).exp())
}

/// Result of one environment transition.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvStep {
    pub obs: Vec<f64>,
    pub reward: f64,
    /// The episode hit a true terminal state (no bootstrap).
    pub terminated: bool,
    /// The episode was cut by its time limit (bootstrap from `obs`).
    pub truncated: bool,
    /// Value of a terminal state that keeps paying a constant reward until the
    /// horizon. `None` means the terminal is worth zero.
    pub absorbing: Option<Absorbing>,
}

/// A terminal state that pays `reward_per_step` for `steps` more steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Absorbing {
    pub reward_per_step: f64,
    pub steps: usize,
}

impl Absorbing {
    /// Discounted value `r * (1 + g + ... + g^(n-1))`.
    pub fn value(&self, gamma: f64) -> f64 {
        let n = self.steps as i32;
        let sum = if gamma == 1.0 {
            n as f64
        } else {
            (1.0 - gamma.powi(n)) / (1.0 - gamma)
        };
        self.reward_per_step * sum
    }

    /// Undiscounted remainder `r * n`.
    pub fn total(&self) -> f64 {
        self.reward_per_step * self.steps as f64
    }
}

/// A single-agent episodic environment driven by raw policy actions.
pub trait Environment {
    fn obs_dim(&self) -> usize;
    fn action_dim(&self) -> usize;
    fn reset(&mut self, rng: &mut ChaCha8Rng) -> Result<Vec<f64>>;
    fn step(&mut self, action: &[f64], rng: &mut ChaCha8Rng) -> Result<EnvStep>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub obs: Vec<f64>,
    /// Raw sample, before any clamping by the environment.
    pub action: Vec<f64>,
    pub reward: f64,
    pub value_old: f64,
    pub log_prob_old: f64,
    /// Last step of an episode.
    pub done: bool,
    /// Set on the last transition of each accumulation run: the terminal value
    /// after a true terminal, otherwise the critic's value at the state that
    /// follows.
    pub bootstrap: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RolloutBuffer {
    /// Actor-major: actor `i` owns `transitions[i*T..(i+1)*T]`.
    pub transitions: Vec<Transition>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
    /// Undiscounted returns of episodes that finished during collection,
    /// including the remainder paid by absorbing terminals.
    pub episode_returns: Vec<f64>,
    pub episode_lengths: Vec<usize>,
}

impl RolloutBuffer {
    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn has_advantages(&self) -> bool {
        self.advantages.len() == self.transitions.len() && self.returns.len() == self.transitions.len()
    }
}

/// Fills `advantages` and `returns` (`advantage + value_old`) with truncated
/// n-step estimates. Accumulation restarts after every transition that carries
/// a bootstrap value.
pub fn compute_advantages(buffer: &mut RolloutBuffer, gamma: f64) -> Result<()> {
    let n = buffer.transitions.len();
    if let Some(last) = buffer.transitions.last() {
        if last.bootstrap.is_none() {
            return Err(Error::Contract(
                "last transition of a segment must carry a bootstrap value".into(),
            ));
        }
    }
    let mut adv = vec![0.0; n];
    let mut running = 0.0;
    for (i, t) in buffer.transitions.iter().enumerate().rev() {
        let tail = match t.bootstrap {
            Some(v) => v,
            None => running,
        };
        running = t.reward + gamma * tail;
        adv[i] = running - t.value_old;
    }
    buffer.returns = adv
        .iter()
        .zip(&buffer.transitions)
        .map(|(a, t)| a + t.value_old)
        .collect();
    buffer.advantages = adv;
    Ok(())
}

/// Running mean and variance of return targets. The critic predicts
/// standardized values; collection maps them back to return units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValueNormalizer {
    pub mean: f64,
    pub var: f64,
    pub count: f64,
}

impl Default for ValueNormalizer {
    /// The identity map.
    fn default() -> Self {
        ValueNormalizer {
            mean: 0.0,
            var: 1.0,
            count: 0.0,
        }
    }
}

impl ValueNormalizer {
    const MIN_STD: f64 = 1e-4;

    pub fn std(&self) -> f64 {
        self.var.sqrt().max(Self::MIN_STD)
    }

    pub fn normalize(&self, x: f64) -> f64 {
        (x - self.mean) / self.std()
    }

    pub fn denormalize(&self, x: f64) -> f64 {
        x * self.std() + self.mean
    }

    /// Merges a batch into the running moments (parallel-variance update).
    pub fn observe(&mut self, batch: &[f64]) {
        if batch.is_empty() {
            return;
        }
        let n = batch.len() as f64;
        let mean = batch.iter().sum::<f64>() / n;
        let var = batch.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        if self.count == 0.0 {
            *self = ValueNormalizer { mean, var, count: n };
            return;
        }
        let total = self.count + n;
        let delta = mean - self.mean;
        let m2 = self.var * self.count + var * n + delta * delta * self.count * n / total;
        self.mean += delta * n / total;
        self.var = m2 / total;
        self.count = total;
    }
}

/// Independent per-actor seeds derived from one master seed.
pub fn actor_seeds(master: u64, n: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    (0..n).map(|_| rand::Rng::random(&mut rng)).collect()
}

/// One actor: an environment instance, its private RNG stream, and the
/// episode in progress. Actors persist across iterations so segments can cut
/// through episodes.
pub struct Actor<E> {
    pub env: E,
    rng: ChaCha8Rng,
    obs: Option<Vec<f64>>,
    episode_return: f64,
    episode_len: usize,
}

impl<E: Environment> Actor<E> {
    pub fn new(env: E, seed: u64) -> Self {
        Actor {
            env,
            rng: ChaCha8Rng::seed_from_u64(seed),
            obs: None,
            episode_return: 0.0,
            episode_len: 0,
        }
    }

    fn collect(
        &mut self,
        params: &PolicyParams,
        values: &ValueNormalizer,
        steps: usize,
        gamma: f64,
        buffer: &mut RolloutBuffer,
    ) -> Result<()> {
        for k in 0..steps {
            let obs = match self.obs.take() {
                Some(o) => o,
                None => self.env.reset(&mut self.rng)?,
            };
            let out = forward(params, &obs)?;
            let action = sample_from(&out.mean, params.log_std(), &mut self.rng);
            let log_prob = gaussian_log_prob(&out.mean, params.log_std(), &action);
            let step = self.env.step(&action, &mut self.rng)?;
            if !step.reward.is_finite() {
                return Err(Error::NonFinite("environment reward"));
            }
            self.episode_return += step.reward + step.absorbing.map_or(0.0, |a| a.total());
            self.episode_len += 1;
            let done = step.terminated || step.truncated;
            let last = k + 1 == steps;
            let bootstrap = if step.terminated {
                Some(step.absorbing.map_or(0.0, |a| a.value(gamma)))
            } else if done || last {
                Some(values.denormalize(forward(params, &step.obs)?.value))
            } else {
                None
            };
            buffer.transitions.push(Transition {
                obs,
                action,
                reward: step.reward,
                value_old: values.denormalize(out.value),
                log_prob_old: log_prob,
                done,
                bootstrap,
            });
            if done {
                buffer.episode_returns.push(self.episode_return);
                buffer.episode_lengths.push(self.episode_len);
                self.episode_return = 0.0;
                self.episode_len = 0;
            } else {
                self.obs = Some(step.obs);
            }
        }
        Ok(())
    }
}

/// Runs every actor for `T` steps under the current stochastic policy.
pub fn collect_rollout<E: Environment>(
    actors: &mut [Actor<E>],
    params: &PolicyParams,
    values: &ValueNormalizer,
    steps_per_actor: usize,
    gamma: f64,
) -> Result<RolloutBuffer> {
    let mut buffer = RolloutBuffer {
        transitions: Vec::with_capacity(actors.len() * steps_per_actor),
        ..Default::default()
    };
    for actor in actors.iter_mut() {
        actor.collect(params, values, steps_per_actor, gamma, &mut buffer)?;
    }
    Ok(buffer)
}

/// Loss terms and diagnostics for one minibatch.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct LossReport {
    pub loss: f64,
    /// `L_clip`, the clipped surrogate (to be maximized).
    pub policy_objective: f64,
    /// `L_vf`, mean squared error against the return targets.
    pub value_loss: f64,
    pub entropy: f64,
    /// Fraction of samples whose ratio lies outside `[1 - eps, 1 + eps]`.
    pub clip_fraction: f64,
    /// `mean((r - 1) - ln r)`, a non-negative KL estimate.
    pub approx_kl: f64,
}

/// Borrowed view of the samples a loss is evaluated on.
pub struct Minibatch<'a> {
    pub transitions: Vec<&'a Transition>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl<'a> Minibatch<'a> {
    pub fn from_indices(buffer: &'a RolloutBuffer, indices: &[usize]) -> Self {
        Minibatch {
            transitions: indices.iter().map(|&i| &buffer.transitions[i]).collect(),
            advantages: indices.iter().map(|&i| buffer.advantages[i]).collect(),
            returns: indices.iter().map(|&i| buffer.returns[i]).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }
}

fn normalized(adv: &[f64]) -> Vec<f64> {
    let n = adv.len() as f64;
    let mean = adv.iter().sum::<f64>() / n;
    let var = adv.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    adv.iter().map(|a| (a - mean) / (std + ADV_NORM_EPS)).collect()
}

/// Clipped-surrogate loss without gradients.
pub fn ppo_loss(params: &PolicyParams, batch: &Minibatch, config: &PpoConfig) -> Result<LossReport> {
    loss_impl(params, batch, config, false).map(|(r, _)| r)
}

/// Clipped-surrogate loss and its exact gradient with respect to every
/// parameter, including `log_std`.
pub fn ppo_loss_grad(
    params: &PolicyParams,
    batch: &Minibatch,
    config: &PpoConfig,
) -> Result<(LossReport, Gradients)> {
    loss_impl(params, batch, config, true).map(|(r, g)| (r, g.expect("gradient requested")))
}

fn loss_impl(
    params: &PolicyParams,
    batch: &Minibatch,
    config: &PpoConfig,
    want_grad: bool,
) -> Result<(LossReport, Option<Gradients>)> {
    if batch.is_empty() {
        return Err(Error::InvalidInput("empty minibatch".into()));
    }
    let spec = params.spec();
    let (d, a) = (spec.input_dim, spec.action_dim);
    let b = batch.len();
    let bf = b as f64;
    let mut obs = Vec::with_capacity(b * d);
    for t in &batch.transitions {
        if t.obs.len() != d || t.action.len() != a {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: t.obs.len(),
            });
        }
        obs.extend_from_slice(&t.obs);
    }
    let adv = if config.normalize_advantages && b > 1 {
        normalized(&batch.advantages)
    } else {
        batch.advantages.clone()
    };
    let fwd = BatchForward::run(params, &obs, b);
    let log_std = params.log_std();
    let inv_std: Vec<f64> = log_std.iter().map(|l| (-l).exp()).collect();
    let (lo, hi) = (1.0 - config.clip_epsilon, 1.0 + config.clip_epsilon);

    let mut surrogate = 0.0;
    let mut value_loss = 0.0;
    let mut clipped = 0usize;
    let mut kl = 0.0;
    let mut d_mean = vec![0.0; b * a];
    let mut d_value = vec![0.0; b];
    let mut d_log_std = vec![0.0; a];
    for (i, t) in batch.transitions.iter().enumerate() {
        let mean = &fwd.mean[i * a..(i + 1) * a];
        let logp = gaussian_log_prob(mean, log_std, &t.action);
        let r = (logp - t.log_prob_old).exp();
        let unclipped = r * adv[i];
        let clipped_term = r.clamp(lo, hi) * adv[i];
        surrogate += unclipped.min(clipped_term);
        if !(lo..=hi).contains(&r) {
            clipped += 1;
        }
        kl += (r - 1.0) - (logp - t.log_prob_old);
        let err = fwd.value[i] - batch.returns[i];
        value_loss += err * err;

        if want_grad {
            // d(-min)/dr is -A on the unclipped branch and zero once the clip binds.
            if unclipped <= clipped_term {
                let g = -r * adv[i] / bf;
                for j in 0..a {
                    let z = (t.action[j] - mean[j]) * inv_std[j];
                    d_mean[i * a + j] = g * z * inv_std[j];
                    d_log_std[j] += g * (z * z - 1.0);
                }
            }
            d_value[i] = config.value_coef * 2.0 * err / bf;
        }
    }
    let entropy = gaussian_entropy(log_std);
    let policy_objective = surrogate / bf;
    let value_loss = value_loss / bf;
    let loss = -(policy_objective - config.value_coef * value_loss + config.entropy_coef * entropy);
    if !loss.is_finite() {
        return Err(Error::NonFinite("ppo loss"));
    }
    let report = LossReport {
        loss,
        policy_objective,
        value_loss,
        entropy,
        clip_fraction: clipped as f64 / bf,
        approx_kl: kl / bf,
    };
    if !want_grad {
        return Ok((report, None));
    }
    let mut grads = Gradients::zeros_like(params);
    fwd.backward(params, &obs, &d_mean, &d_value, &mut grads);
    for (g, d) in grads.log_std_mut(params).iter_mut().zip(&d_log_std) {
        *g = d - config.entropy_coef;
    }
    Ok((report, Some(grads)))
}

/// Per-iteration summary of an [`update`].
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct UpdateStats {
    /// Means over the applied minibatches, measured before each step.
    pub mean: LossReport,
    pub minibatches: usize,
    pub skipped: usize,
    pub history: Vec<LossReport>,
}

/// `K` epochs of shuffled minibatch Adam steps. Minibatches with a non-finite
/// loss or gradient are skipped; more than [`MAX_CONSECUTIVE_SKIPS`] in a row
/// aborts.
pub fn update(
    params: &mut PolicyParams,
    adam: &mut AdamState,
    values: &ValueNormalizer,
    buffer: &RolloutBuffer,
    config: &PpoConfig,
    rng: &mut ChaCha8Rng,
) -> Result<UpdateStats> {
    if !buffer.has_advantages() {
        return Err(Error::Contract("advantages must be computed before the update".into()));
    }
    let mut stats = UpdateStats::default();
    if buffer.is_empty() {
        return Ok(stats);
    }
    let mut indices: Vec<usize> = (0..buffer.len()).collect();
    let mut streak = 0;
    for _ in 0..config.epochs {
        indices.shuffle(rng);
        for chunk in indices.chunks(config.minibatch_size) {
            let mut batch = Minibatch::from_indices(buffer, chunk);
            batch.returns.iter_mut().for_each(|r| *r = values.normalize(*r));
            let step = ppo_loss_grad(params, &batch, config).and_then(|(report, mut grads)| {
                if !grads.is_finite() {
                    return Err(Error::NonFinite("gradient"));
                }
                let norm = grads.norm();
                if config.max_grad_norm > 0.0 && norm > config.max_grad_norm {
                    grads.scale(config.max_grad_norm / norm);
                }
                adam_step(params, adam, &grads, config.learning_rate)?;
                Ok(report)
            });
            match step {
                Ok(report) => {
                    streak = 0;
                    stats.history.push(report);
                }
                Err(Error::NonFinite(what)) => {
                    streak += 1;
                    stats.skipped += 1;
                    log::warn!("skipping minibatch: non-finite {what}");
                    if streak > MAX_CONSECUTIVE_SKIPS {
                        return Err(Error::TrainingAborted(format!(
                            "{streak} consecutive minibatches had non-finite {what}"
                        )));
                    }
                }
                Err(e) => return Err(e),
            }
        }
    }
    stats.minibatches = stats.history.len();
    if !stats.history.is_empty() {
        let n = stats.history.len() as f64;
        let mut m = LossReport::default();
        for r in &stats.history {
            m.loss += r.loss / n;
            m.policy_objective += r.policy_objective / n;
            m.value_loss += r.value_loss / n;
            m.entropy += r.entropy / n;
            m.clip_fraction += r.clip_fraction / n;
            m.approx_kl += r.approx_kl / n;
        }
        stats.mean = m;
    }
    Ok(stats)
}

/// Diagnostics for one collect / advantage / update cycle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationStats {
    /// Mean undiscounted return of the episodes that finished during
    /// collection, or `None` if none did.
    pub mean_episode_return: Option<f64>,
    pub episodes: usize,
    pub mean_step_reward: f64,
    pub update: UpdateStats,
}

/// Trainable state carried across iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct Learner {
    pub params: PolicyParams,
    pub adam: AdamState,
    pub values: ValueNormalizer,
}

impl Learner {
    pub fn new(params: PolicyParams) -> Self {
        Learner {
            adam: AdamState::new(&params),
            params,
            values: ValueNormalizer::default(),
        }
    }

    /// One PPO iteration: collect `N x T` transitions, estimate advantages,
    /// refresh the value statistics, and update the parameters in place.
    pub fn iterate<E: Environment>(
        &mut self,
        actors: &mut [Actor<E>],
        config: &PpoConfig,
        rng: &mut ChaCha8Rng,
    ) -> Result<IterationStats> {
        let mut buffer = collect_rollout(
            actors,
            &self.params,
            &self.values,
            config.steps_per_actor,
            config.gamma,
        )?;
        compute_advantages(&mut buffer, config.gamma)?;
        if config.normalize_values {
            self.values.observe(&buffer.returns);
        }
        let update = update(&mut self.params, &mut self.adam, &self.values, &buffer, config, rng)?;
        let episodes = buffer.episode_returns.len();
        let mean_episode_return =
            (episodes > 0).then(|| buffer.episode_returns.iter().sum::<f64>() / episodes as f64);
        let mean_step_reward =
            buffer.transitions.iter().map(|t| t.reward).sum::<f64>() / buffer.len().max(1) as f64;
        Ok(IterationStats {
            mean_episode_return,
            episodes,
            mean_step_reward,
            update,
        })
    }
}
