//! Gaussian policy with a state-independent log standard deviation and a
//! separate value network of the same shape.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::env::{Observation, OBS_DIM};
use crate::error::{Error, Result};
use crate::policy::Policy;
use crate::rl::mlp::MlpShape;
use crate::rl::normalizer::RunningMeanStd;

pub const LOG_STD_MIN: f64 = -5.0;
pub const LOG_STD_MAX: f64 = 2.0;

/// Network weights, the exploration scale and the observation statistics.
///
/// `theta` is laid out as `[policy net | value net | log_std]`. The policy
/// mean is `action_scale` times the policy network output, in mm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyParameters {
    pub policy_shape: MlpShape,
    pub value_shape: MlpShape,
    pub theta: Vec<f64>,
    pub action_scale: f64,
    pub obs_norm: RunningMeanStd,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyOutput {
    pub mean: f64,
    pub log_std: f64,
    pub value: f64,
}

impl PolicyParameters {
    pub fn init<R: Rng + ?Sized>(
        hidden: &[usize],
        action_scale: f64,
        init_log_std: f64,
        rng: &mut R,
    ) -> Self {
        let policy_shape = MlpShape::new(OBS_DIM, hidden);
        let value_shape = MlpShape::new(OBS_DIM, hidden);
        let mut theta = policy_shape.init(rng, 0.01);
        theta.extend(value_shape.init(rng, 1.0));
        theta.push(init_log_std.clamp(LOG_STD_MIN, LOG_STD_MAX));
        Self {
            policy_shape,
            value_shape,
            theta,
            action_scale,
            obs_norm: RunningMeanStd::new(OBS_DIM),
        }
    }

    /// All-zero weights; useful as a fixed reference.
    pub fn zeros(hidden: &[usize], action_scale: f64, log_std: f64) -> Self {
        let policy_shape = MlpShape::new(OBS_DIM, hidden);
        let value_shape = MlpShape::new(OBS_DIM, hidden);
        let n = policy_shape.num_params() + value_shape.num_params() + 1;
        let mut theta = vec![0.0; n];
        theta[n - 1] = log_std;
        Self {
            policy_shape,
            value_shape,
            theta,
            action_scale,
            obs_norm: RunningMeanStd::new(OBS_DIM),
        }
    }

    pub fn num_params(&self) -> usize {
        self.theta.len()
    }

    pub(crate) fn split(&self) -> (&[f64], &[f64], f64) {
        let np = self.policy_shape.num_params();
        let nv = self.value_shape.num_params();
        (
            &self.theta[..np],
            &self.theta[np..np + nv],
            self.theta[np + nv],
        )
    }

    pub fn log_std(&self) -> f64 {
        self.theta[self.theta.len() - 1]
    }

    pub fn clamp_log_std(&mut self) {
        let last = self.theta.len() - 1;
        self.theta[last] = self.theta[last].clamp(LOG_STD_MIN, LOG_STD_MAX);
    }

    pub fn normalize(&self, obs: &Observation) -> Vec<f64> {
        self.obs_norm.normalize(obs.as_slice())
    }

    /// Forward pass on an already normalized observation.
    pub fn forward_normalized(&self, x: &[f64]) -> PolicyOutput {
        let mut acts = Vec::new();
        let (policy, value, log_std) = self.split();
        let mean = self.action_scale * self.policy_shape.forward(policy, x, &mut acts);
        let value = self.value_shape.forward(value, x, &mut acts);
        PolicyOutput {
            mean,
            log_std,
            value,
        }
    }

    pub fn check_finite(&self) -> Result<()> {
        if self.theta.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite("policy parameters".into()))
        }
    }
}

/// Normalizes `obs` with the stored statistics and evaluates both heads.
pub fn policy_forward(params: &PolicyParameters, obs: &Observation) -> Result<PolicyOutput> {
    let out = params.forward_normalized(&params.normalize(obs));
    if !(out.mean.is_finite() && out.value.is_finite()) {
        return Err(Error::NonFinite("policy network output".into()));
    }
    Ok(out)
}

pub fn gaussian_log_prob(x: f64, mean: f64, log_std: f64) -> f64 {
    let z = (x - mean) / log_std.exp();
    -0.5 * z * z - log_std - 0.5 * (2.0 * PI).ln()
}

pub fn gaussian_entropy(log_std: f64) -> f64 {
    log_std + 0.5 * (1.0 + (2.0 * PI).ln())
}

/// Draws an unclamped action and its log-density.
pub fn sample_action<R: Rng + ?Sized>(mean: f64, log_std: f64, rng: &mut R) -> (f64, f64) {
    let z: f64 = rng.sample(StandardNormal);
    let raw = mean + log_std.exp() * z;
    (raw, gaussian_log_prob(raw, mean, log_std))
}

/// A trained policy acting in an environment: either the mean action or a
/// sample from the Gaussian.
pub struct GaussianPolicy<'a> {
    params: &'a PolicyParameters,
    rng: Option<ChaCha8Rng>,
}

impl<'a> GaussianPolicy<'a> {
    pub fn deterministic(params: &'a PolicyParameters) -> Self {
        Self { params, rng: None }
    }

    pub fn stochastic(params: &'a PolicyParameters, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(1);
        Self {
            params,
            rng: Some(rng),
        }
    }
}

impl Policy for GaussianPolicy<'_> {
    fn act(&mut self, obs: &Observation) -> Result<f64> {
        let out = policy_forward(self.params, obs)?;
        Ok(match self.rng.as_mut() {
            Some(rng) => sample_action(out.mean, out.log_std, rng).0,
            None => out.mean,
        })
    }
}
