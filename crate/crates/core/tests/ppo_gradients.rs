use quadsec::nn::{init, MlpSpec, PolicyParams};
use quadsec::ppo::{gaussian_log_prob, ppo_loss, ppo_loss_grad, Minibatch, PpoConfig, Transition};
use quadsec::nn::forward;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const H: f64 = 1e-5;

/// Relative error with an absolute floor so components that are zero up to
/// rounding do not dominate.
fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(1e-6)
}

struct Sample {
    transitions: Vec<Transition>,
    advantages: Vec<f64>,
    returns: Vec<f64>,
}

fn random_batch(params: &PolicyParams, n: usize, rng: &mut ChaCha8Rng) -> Sample {
    let spec = params.spec();
    let mut transitions = Vec::new();
    for _ in 0..n {
        let obs: Vec<f64> = (0..spec.input_dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mean = forward(params, &obs).unwrap().mean;
        let action: Vec<f64> = mean.iter().map(|m| m + rng.random_range(-0.8..0.8)).collect();
        // Old policy differs slightly so ratios spread around 1.
        let lp = gaussian_log_prob(&mean, params.log_std(), &action) + rng.random_range(-0.3..0.3);
        transitions.push(Transition {
            obs,
            action,
            reward: 0.0,
            value_old: 0.0,
            log_prob_old: lp,
            done: false,
            bootstrap: None,
        });
    }
    Sample {
        transitions,
        advantages: (0..n).map(|_| rng.random_range(-2.0..2.0)).collect(),
        returns: (0..n).map(|_| rng.random_range(-2.0..2.0)).collect(),
    }
}

fn check(seed: u64, normalize: bool) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = MlpSpec::new(18, vec![8, 8], 4).unwrap();
    let mut params = init(&spec, seed).unwrap();
    // Larger head weights than the default init so every path carries signal.
    for v in params.as_flat_mut() {
        *v += rng.random_range(-0.3..0.3);
    }
    let s = random_batch(&params, 16, &mut rng);
    let mb = Minibatch {
        transitions: s.transitions.iter().collect(),
        advantages: s.advantages.clone(),
        returns: s.returns.clone(),
    };
    let cfg = PpoConfig {
        normalize_advantages: normalize,
        ..Default::default()
    };
    let (_, grads) = ppo_loss_grad(&params, &mb, &cfg).unwrap();
    let mut worst: f64 = 0.0;
    for i in 0..params.len() {
        let orig = params.as_flat()[i];
        params.as_flat_mut()[i] = orig + H;
        let up = ppo_loss(&params, &mb, &cfg).unwrap().loss;
        params.as_flat_mut()[i] = orig - H;
        let down = ppo_loss(&params, &mb, &cfg).unwrap().loss;
        params.as_flat_mut()[i] = orig;
        let numeric = (up - down) / (2.0 * H);
        worst = worst.max(rel_err(grads.as_flat()[i], numeric));
    }
    worst
}

#[test]
fn ppo_loss_gradient_matches_finite_differences() {
    for seed in 0..20 {
        let e = check(seed, seed % 2 == 0);
        assert!(e < 1e-4, "seed {seed}: max relative error {e:e}");
    }
}
