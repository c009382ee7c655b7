//! Oracles shared by the integration tests and the acceptance report.
#![allow(dead_code)]

use nalgebra::Vector3;
use quadsec::dynamics::{
    angular_transform, motor_mixing, rot_elemental, rot_zyx, step, Axis, ControlCommand,
    PhysicalParams, QuadrotorState,
};
use quadsec::nn::{forward, init, MlpSpec, PolicyParams};
use quadsec::ppo::toy::ToyEnv;
use quadsec::ppo::{
    actor_seeds, compute_advantages, gaussian_log_prob, ppo_loss, ppo_loss_grad, Actor, Learner,
    Minibatch, PpoConfig, RolloutBuffer, Transition,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn transition(reward: f64, value_old: f64, bootstrap: Option<f64>) -> Transition {
    Transition {
        obs: vec![0.0],
        action: vec![0.0],
        reward,
        value_old,
        log_prob_old: 0.0,
        done: bootstrap.is_some(),
        bootstrap,
    }
}

/// Sums the discounted series term by term from each index to the end of its
/// accumulation run.
pub fn brute_force(ts: &[Transition], gamma: f64) -> Vec<f64> {
    (0..ts.len())
        .map(|t| {
            let mut sum = -ts[t].value_old;
            let mut k = t;
            loop {
                sum += gamma.powi((k - t) as i32) * ts[k].reward;
                if let Some(v) = ts[k].bootstrap {
                    sum += gamma.powi((k - t + 1) as i32) * v;
                    break;
                }
                k += 1;
            }
            sum
        })
        .collect()
}

pub fn random_segment(rng: &mut ChaCha8Rng, len: usize) -> Vec<Transition> {
    (0..len)
        .map(|i| {
            let cut = i + 1 == len || rng.random_bool(0.1);
            let terminal = rng.random_bool(0.5);
            let boot = cut.then(|| if terminal { 0.0 } else { rng.random_range(-5.0..5.0) });
            transition(rng.random_range(-2.0..2.0), rng.random_range(-5.0..5.0), boot)
        })
        .collect()
}

/// Largest gap between `compute_advantages` and the brute-force series over
/// `segments` random 32-step segments.
pub fn advantage_oracle_gap(segments: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..segments {
        let ts = random_segment(&mut rng, 32);
        let gamma = rng.random_range(0.8..0.999);
        let mut buf = RolloutBuffer {
            transitions: ts.clone(),
            ..Default::default()
        };
        compute_advantages(&mut buf, gamma).unwrap();
        for (i, (a, b)) in buf.advantages.iter().zip(brute_force(&ts, gamma)).enumerate() {
            worst = worst.max((a - b).abs());
            worst = worst.max((buf.returns[i] - (a + ts[i].value_old)).abs());
        }
    }
    worst
}

/// Samples drawn by a perturbed copy of `params`, so ratios spread on both
/// sides of the clip range.
pub fn off_policy_batch(params: &PolicyParams, n: usize, seed: u64) -> RolloutBuffer {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut behaviour = params.clone();
    for v in behaviour.as_flat_mut() {
        *v += rng.random_range(-0.15..0.15);
    }
    let d = params.spec().input_dim;
    let mut transitions = Vec::new();
    for i in 0..n {
        let obs: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let out = forward(&behaviour, &obs).unwrap();
        let action: Vec<f64> = out.mean.iter().map(|m| m + rng.random_range(-0.8..0.8)).collect();
        transitions.push(Transition {
            log_prob_old: gaussian_log_prob(&out.mean, behaviour.log_std(), &action),
            obs,
            action,
            reward: rng.random_range(-1.0..1.0),
            value_old: out.value,
            done: i + 1 == n,
            bootstrap: (i + 1 == n).then_some(0.0),
        });
    }
    let mut buf = RolloutBuffer {
        transitions,
        ..Default::default()
    };
    compute_advantages(&mut buf, 0.99).unwrap();
    buf
}

/// Worst relative error of the analytic PPO loss gradient against central
/// differences over `minibatches` random `[8, 8]` networks, and whether any
/// sample landed on the clipped branch.
pub fn loss_gradient_fd_error(minibatches: u64) -> (f64, bool) {
    const H: f64 = 1e-6;
    let cfg = PpoConfig {
        entropy_coef: 0.05,
        ..Default::default()
    };
    let spec = MlpSpec::new(18, vec![8, 8], 4).unwrap();
    let mut clipped_somewhere = false;
    let mut worst: f64 = 0.0;
    for m in 0..minibatches {
        let mut p = init(&spec, 100 + m).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(m);
        for v in p.as_flat_mut() {
            *v += rng.random_range(-0.2..0.2);
        }
        let buf = off_policy_batch(&p, 16, 200 + m);
        let idx: Vec<usize> = (0..16).collect();
        let batch = Minibatch::from_indices(&buf, &idx);
        let (report, grads) = ppo_loss_grad(&p, &batch, &cfg).unwrap();
        clipped_somewhere |= report.clip_fraction > 0.0;
        for i in 0..p.len() {
            let loss_at = |delta: f64| {
                let mut q = p.clone();
                q.as_flat_mut()[i] += delta;
                ppo_loss(&q, &batch, &cfg).unwrap().loss
            };
            let numeric = (loss_at(H) - loss_at(-H)) / (2.0 * H);
            let exact = grads.as_flat()[i];
            worst = worst.max((exact - numeric).abs() / exact.abs().max(numeric.abs()).max(1e-6));
        }
    }
    (worst, clipped_somewhere)
}

/// Mean episode return over the first and last iteration of a 50-iteration
/// run on the toy task.
pub fn toy_improvement(seed: u64) -> (f64, f64) {
    let cfg = PpoConfig {
        steps_per_actor: 512,
        actors: 1,
        minibatch_size: 64,
        ..Default::default()
    };
    let mut learner = Learner::new(init(&MlpSpec::new(1, vec![16, 16], 1).unwrap(), seed).unwrap());
    let mut actors: Vec<_> = actor_seeds(seed, 1)
        .into_iter()
        .map(|s| Actor::new(ToyEnv::default(), s))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let returns: Vec<f64> = (0..50)
        .map(|_| learner.iterate(&mut actors, &cfg, &mut rng).unwrap().mean_episode_return.unwrap())
        .collect();
    (returns[0], returns[49])
}

/// Returns are negative; improving by half halves their magnitude.
pub fn improved_by_half(first: f64, last: f64) -> bool {
    last > first + 0.5 * first.abs()
}

type M3 = [[f64; 3]; 3];

// Plain-array matrix product, kept away from nalgebra on purpose.
pub fn matmul(a: &M3, b: &M3) -> M3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

pub fn to_array(m: &nalgebra::Matrix3<f64>) -> M3 {
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = m[(i, j)];
        }
    }
    out
}

pub fn max_gap(a: &M3, b: &M3) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            worst = worst.max((a[i][j] - b[i][j]).abs());
        }
    }
    worst
}

/// Every kinematic invariant checked over `samples` random attitudes. Returns
/// the first violation.
pub fn kinematics_invariants(samples: usize, seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lim = std::f64::consts::FRAC_PI_3 - 1e-6;
    let params = PhysicalParams::default();
    for _ in 0..samples {
        let (phi, theta, psi) = (
            rng.random_range(-lim..lim),
            rng.random_range(-lim..lim),
            rng.random_range(-lim..lim),
        );
        let r = rot_zyx(phi, theta, psi).map_err(|e| e.to_string())?;
        let m = to_array(r.matrix());
        let mut mt = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                mt[i][j] = m[j][i];
            }
        }
        let eye = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let gap = max_gap(&matmul(&mt, &m), &eye);
        if gap > 1e-10 {
            return Err(format!("R^T R deviates from I by {gap:e}"));
        }
        let det = r.matrix().determinant();
        if (det - 1.0).abs() > 1e-10 {
            return Err(format!("det R = {det}"));
        }
        let el = |axis, a| to_array(rot_elemental(axis, a).unwrap().matrix());
        let product = matmul(&matmul(&el(Axis::Z, psi), &el(Axis::Y, theta)), &el(Axis::X, phi));
        let gap = max_gap(&m, &product);
        if gap > 1e-12 {
            return Err(format!("closed form vs composition gap {gap:e}"));
        }

        let pos = Vector3::new(
            rng.random_range(-2.0..2.0),
            rng.random_range(-2.0..2.0),
            rng.random_range(0.1..2.9),
        );
        let mut s = QuadrotorState::at_rest(pos);
        s.attitude.z = psi;
        let hover = ControlCommand {
            thrust: params.hover_thrust,
            ..Default::default()
        };
        let next = step(&s, &hover, &params).state;
        if next.position != s.position || next.attitude != s.attitude {
            return Err(format!("hover is not a fixed point at {pos:?}"));
        }
    }
    if angular_transform(0.0, 0.0).unwrap() != nalgebra::Matrix3::identity() {
        return Err("T(0, 0) is not the identity".into());
    }
    let w = (params.mass * params.gravity / (4.0 * params.lift_constant)).sqrt();
    let f = motor_mixing([w; 4], &params).unwrap();
    if f.thrust_z.abs() > 1e-12 || f.roll_moment != 0.0 || f.pitch_moment != 0.0 || f.yaw_moment != 0.0 {
        return Err(format!("motor mixing does not balance at hover: {f:?}"));
    }
    Ok(())
}
