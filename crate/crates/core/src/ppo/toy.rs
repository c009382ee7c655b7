//! One-dimensional "move toward the origin" task used to smoke-test PPO.
//!
//! The state is a position `x`, the action a velocity clamped to `[-1, 1]`,
//! and each step pays `-|x|`. Episodes start at `x ~ U[-2, 2]` and are
//! truncated after a fixed number of steps.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{EnvStep, Environment};
use crate::error::{Error, Result};

pub const TOY_DT: f64 = 0.1;
pub const TOY_HORIZON: usize = 50;
const START_RANGE: f64 = 2.0;
const X_LIMIT: f64 = 5.0;

#[derive(Debug, Clone, Default)]
pub struct ToyEnv {
    x: f64,
    t: usize,
}

impl Environment for ToyEnv {
    fn obs_dim(&self) -> usize {
        1
    }

    fn action_dim(&self) -> usize {
        1
    }

    fn reset(&mut self, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        self.x = rng.random_range(-START_RANGE..=START_RANGE);
        self.t = 0;
        Ok(vec![self.x])
    }

    fn step(&mut self, action: &[f64], _rng: &mut ChaCha8Rng) -> Result<EnvStep> {
        let &[a] = action else {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: action.len(),
            });
        };
        if !a.is_finite() {
            return Err(Error::NonFinite("toy action"));
        }
        self.x = (self.x + a.clamp(-1.0, 1.0) * TOY_DT).clamp(-X_LIMIT, X_LIMIT);
        self.t += 1;
        Ok(EnvStep {
            obs: vec![self.x],
            reward: -self.x.abs(),
            terminated: false,
            truncated: self.t >= TOY_HORIZON,
            absorbing: None,
        })
    }
}
