use proptest::prelude::*;
use quadsec::nn::checkpoint::Checkpoint;
use quadsec::nn::{
    adam_step, backward, forward, init, AdamState, Gradients, MlpSpec, OutputGrad, PolicyParams,
    ADAM_BETA1, ADAM_BETA2, ADAM_EPSILON,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const H: f64 = 1e-5;

fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(1e-6)
}

fn perturbed(spec: &MlpSpec, seed: u64) -> PolicyParams {
    let mut p = init(spec, seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xABCD);
    for v in p.as_flat_mut() {
        *v += rng.random_range(-0.3..0.3);
    }
    p
}

/// Scalar loss `c . mean + d * value + e . log_std` for one observation.
fn linear_loss(p: &PolicyParams, obs: &[f64], g: &OutputGrad) -> f64 {
    let out = forward(p, obs).unwrap();
    let m: f64 = out.mean.iter().zip(&g.mean).map(|(a, b)| a * b).sum();
    let l: f64 = p.log_std().iter().zip(&g.log_std).map(|(a, b)| a * b).sum();
    m + g.value * out.value + l
}

fn max_fd_error(p: &PolicyParams, obs: &[f64], g: &OutputGrad) -> f64 {
    let grads = backward(p, &[(obs.to_vec(), g.clone())]).unwrap();
    let mut worst: f64 = 0.0;
    for i in 0..p.len() {
        let mut plus = p.clone();
        plus.as_flat_mut()[i] += H;
        let mut minus = p.clone();
        minus.as_flat_mut()[i] -= H;
        let numeric = (linear_loss(&plus, obs, g) - linear_loss(&minus, obs, g)) / (2.0 * H);
        worst = worst.max(rel_err(grads.as_flat()[i], numeric));
    }
    worst
}

#[test]
fn value_gradient_matches_finite_differences() {
    let spec = MlpSpec::new(18, vec![8, 8], 4).unwrap();
    let p = perturbed(&spec, 1);
    let obs: Vec<f64> = (0..18).map(|i| (i as f64 * 0.37).sin()).collect();
    let g = OutputGrad {
        mean: vec![0.0; 4],
        value: 1.0,
        log_std: vec![0.0; 4],
    };
    let err = max_fd_error(&p, &obs, &g);
    assert!(err < 1e-5, "max relative error {err}");
}

#[test]
fn adam_first_step_scalar_oracle() {
    let spec = MlpSpec::new(1, vec![1], 1).unwrap();
    let mut p = perturbed(&spec, 2);
    let before = p.as_flat().to_vec();
    let mut grads = Gradients::zeros_like(&p);
    for (i, g) in grads.as_flat_mut().iter_mut().enumerate() {
        *g = 0.1 * (i as f64 + 1.0) * if i % 2 == 0 { 1.0 } else { -1.0 };
    }
    let mut adam = AdamState::new(&p);
    let lr = 1e-3;
    adam_step(&mut p, &mut adam, &grads, lr).unwrap();
    for ((after, b), g) in p.as_flat().iter().zip(&before).zip(grads.as_flat()) {
        let m_hat = (1.0 - ADAM_BETA1) * g / (1.0 - ADAM_BETA1);
        let v_hat = (1.0 - ADAM_BETA2) * g * g / (1.0 - ADAM_BETA2);
        let expected = b - lr * m_hat / (v_hat.sqrt() + ADAM_EPSILON);
        assert!((after - expected).abs() < 1e-15);
        // The first step moves every parameter by almost exactly lr.
        assert!(((b - after).abs() - lr).abs() < 1e-9);
    }
    assert_eq!(adam.step, 1);
}

#[test]
fn adam_second_step_moments_are_ema() {
    let spec = MlpSpec::new(2, vec![3], 1).unwrap();
    let mut p = perturbed(&spec, 3);
    let mut grads = Gradients::zeros_like(&p);
    grads.as_flat_mut().iter_mut().enumerate().for_each(|(i, g)| *g = 0.05 * i as f64 - 0.4);
    let mut adam = AdamState::new(&p);
    adam_step(&mut p, &mut adam, &grads, 1e-4).unwrap();
    adam_step(&mut p, &mut adam, &grads, 1e-4).unwrap();
    for (i, g) in grads.as_flat().iter().enumerate() {
        let m = (1.0 - ADAM_BETA1) * g * (1.0 + ADAM_BETA1);
        let v = (1.0 - ADAM_BETA2) * g * g * (1.0 + ADAM_BETA2);
        assert!((adam.first_moment[i] - m).abs() < 1e-15);
        assert!((adam.second_moment[i] - v).abs() < 1e-15);
    }
    assert_eq!(adam.step, 2);
}

#[test]
fn default_parameter_count() {
    let spec = MlpSpec::new(18, vec![64, 64], 4).unwrap();
    let expected = 18 * 64 + 64 + 64 * 64 + 64 + (64 * 4 + 4) + (64 + 1) + 4;
    assert_eq!(spec.param_count(), expected);
    assert_eq!(init(&spec, 0).unwrap().len(), expected);
}

#[test]
fn init_depends_on_seed_and_sets_log_std() {
    let spec = MlpSpec::new(18, vec![16], 4).unwrap();
    let a = init(&spec, 1).unwrap();
    assert_eq!(a, init(&spec, 1).unwrap());
    assert_ne!(a, init(&spec, 2).unwrap());
    assert!(a.log_std().iter().all(|&l| (l - 0.5f64.ln()).abs() < 1e-15));
}

#[test]
fn checkpoint_file_round_trip() {
    let spec = MlpSpec::new(18, vec![8, 8], 4).unwrap();
    let mut p = perturbed(&spec, 4);
    let mut adam = AdamState::new(&p);
    let grads = backward(
        &p,
        &[(vec![0.1; 18], OutputGrad { mean: vec![1.0; 4], value: 1.0, log_std: vec![0.5; 4] })],
    )
    .unwrap();
    adam_step(&mut p, &mut adam, &grads, 1e-3).unwrap();
    let ck = Checkpoint {
        params: p,
        adam: Some(adam),
        seed: 99,
    };
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.ckpt");
    ck.save(&path).unwrap();
    let back = Checkpoint::load(&path).unwrap();
    assert_eq!(back, ck);
    let bits = |c: &Checkpoint| c.params.as_flat().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&back), bits(&ck));

    let bytes = std::fs::read(&path).unwrap();
    for cut in [0, 7, 8, 40, bytes.len() / 2, bytes.len() - 1] {
        assert!(Checkpoint::from_bytes(&bytes[..cut]).is_err(), "accepted {cut} bytes");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn any_linear_loss_matches_finite_differences(
        seed in 0u64..1000,
        obs in prop::collection::vec(-1.0f64..1.0, 18),
        c in prop::collection::vec(-1.0f64..1.0, 4),
        d in -1.0f64..1.0,
        e in prop::collection::vec(-1.0f64..1.0, 4),
    ) {
        let spec = MlpSpec::new(18, vec![8, 8], 4).unwrap();
        let p = perturbed(&spec, seed);
        let g = OutputGrad { mean: c, value: d, log_std: e };
        let err = max_fd_error(&p, &obs, &g);
        prop_assert!(err < 1e-5, "max relative error {}", err);
    }

    #[test]
    fn log_std_stays_clamped(g in -1e6f64..1e6, steps in 1usize..20) {
        let spec = MlpSpec::new(2, vec![2], 2).unwrap();
        let mut p = init(&spec, 0).unwrap();
        let mut adam = AdamState::new(&p);
        let mut grads = Gradients::zeros_like(&p);
        grads.as_flat_mut().fill(g);
        for _ in 0..steps {
            adam_step(&mut p, &mut adam, &grads, 10.0).unwrap();
        }
        prop_assert!(p.log_std().iter().all(|l| (-20.0..=2.0).contains(l)));
        prop_assert!(p.is_finite());
    }
}
