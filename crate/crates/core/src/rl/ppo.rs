//! Clipped-surrogate policy optimisation.
//!
//! The loss minimised per minibatch is
//!
//! ```text
//! -mean(min(r * A, clip(r, 1 - eps, 1 + eps) * A))
//!   + vf_coef * mean((V - R)^2)
//!   - ent_coef * H
//! ```
//!
//! where `r` is the probability ratio against the log-probabilities recorded
//! at sampling time and `H` the entropy of the Gaussian head. Gradients are
//! computed analytically through both networks.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::OBS_DIM;
use crate::error::{Error, Result};
use crate::rl::adam::Adam;
use crate::rl::policy::{gaussian_entropy, gaussian_log_prob, PolicyParameters};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PpoConfig {
    pub gamma: f64,
    pub gae_lambda: f64,
    pub clip_eps: f64,
    pub epochs: usize,
    pub minibatch_size: usize,
    pub learning_rate: f64,
    /// Complete episodes collected per iteration.
    pub episodes_per_iteration: usize,
    pub iterations: usize,
    pub vf_coef: f64,
    pub ent_coef: f64,
    /// Global gradient-norm ceiling; non-positive disables clipping.
    pub max_grad_norm: f64,
    pub hidden: Vec<usize>,
    pub init_log_std: f64,
    /// Policy mean = action_scale * network output (mm).
    pub action_scale: f64,
    /// Train on rewards divided by the scenario's reference yield.
    pub normalize_rewards: bool,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            gae_lambda: 0.95,
            clip_eps: 0.2,
            epochs: 10,
            minibatch_size: 64,
            learning_rate: 3e-4,
            episodes_per_iteration: 8,
            iterations: 50,
            vf_coef: 0.5,
            ent_coef: 0.0,
            max_grad_norm: 0.5,
            hidden: vec![64, 64],
            init_log_std: 1.0,
            action_scale: 10.0,
            normalize_rewards: true,
        }
    }
}

impl PpoConfig {
    /// Parses a TOML table; omitted keys keep their defaults.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Parse {
            path: "<ppo config>".into(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Parse { message, .. } => Error::Parse {
                path: path.into(),
                message,
            },
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, key: &str, reason: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::Param {
                    key: key.into(),
                    reason: reason.into(),
                })
            }
        };
        check(
            self.gamma > 0.0 && self.gamma <= 1.0,
            "gamma",
            "must be in (0, 1]",
        )?;
        check(
            self.gae_lambda > 0.0 && self.gae_lambda <= 1.0,
            "gae_lambda",
            "must be in (0, 1]",
        )?;
        check(self.clip_eps > 0.0, "clip_eps", "must be > 0")?;
        check(self.epochs >= 1, "epochs", "must be >= 1")?;
        check(self.minibatch_size >= 1, "minibatch_size", "must be >= 1")?;
        check(self.learning_rate > 0.0, "learning_rate", "must be > 0")?;
        check(
            self.episodes_per_iteration >= 1,
            "episodes_per_iteration",
            "must be >= 1",
        )?;
        check(
            !self.hidden.is_empty() && self.hidden.iter().all(|&h| h > 0),
            "hidden",
            "needs at least one non-empty layer",
        )?;
        check(self.action_scale > 0.0, "action_scale", "must be > 0")?;
        check(self.vf_coef >= 0.0, "vf_coef", "must be >= 0")?;
        Ok(())
    }
}

/// One collected transition.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    /// Observation after normalization with the statistics in force at sampling time.
    pub obs: [f64; OBS_DIM],
    pub raw_action: f64,
    pub applied_action: f64,
    pub log_prob: f64,
    pub reward: f64,
    pub value: f64,
    pub done: bool,
}

/// Transitions of whole episodes laid end to end, with their advantage
/// estimates once computed.
#[derive(Debug, Clone, Default)]
pub struct TrajectoryBuffer {
    pub transitions: Vec<Transition>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl TrajectoryBuffer {
    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn push_episode(&mut self, episode: Vec<Transition>) {
        debug_assert!(episode.last().is_none_or(|t| t.done));
        self.transitions.extend(episode);
    }

    pub fn compute_advantages(&mut self, gamma: f64, lambda: f64) {
        let rewards: Vec<f64> = self.transitions.iter().map(|t| t.reward).collect();
        let values: Vec<f64> = self.transitions.iter().map(|t| t.value).collect();
        let dones: Vec<bool> = self.transitions.iter().map(|t| t.done).collect();
        let (adv, ret) = super::gae::gae_advantages(&rewards, &values, &dones, gamma, lambda);
        self.advantages = adv;
        self.returns = ret;
    }
}

/// A minibatch in the form the loss consumes.
#[derive(Debug, Clone, Default)]
pub struct Minibatch<'a> {
    pub obs: Vec<&'a [f64]>,
    pub raw_actions: Vec<f64>,
    pub old_log_probs: Vec<f64>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl Minibatch<'_> {
    pub fn len(&self) -> usize {
        self.obs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.obs.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct LossBreakdown {
    pub total: f64,
    /// Negated clipped surrogate.
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    pub mean_ratio: f64,
    pub approx_kl: f64,
}

/// Rescales advantages to zero mean and unit (population) standard deviation.
pub fn normalize_advantages(adv: &mut [f64]) {
    if adv.is_empty() {
        return;
    }
    let n = adv.len() as f64;
    let mean = adv.iter().sum::<f64>() / n;
    let std = (adv.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n).sqrt();
    let scale = if std > 1e-12 { 1.0 / std } else { 0.0 };
    adv.iter_mut().for_each(|a| *a = (*a - mean) * scale);
}

/// Loss on a minibatch and its gradient with respect to `params.theta`.
pub fn ppo_loss_and_grad(
    params: &PolicyParameters,
    batch: &Minibatch<'_>,
    cfg: &PpoConfig,
) -> (LossBreakdown, Vec<f64>) {
    let n = batch.len();
    assert!(n > 0, "empty minibatch");
    let inv_n = 1.0 / n as f64;
    let (policy, value, log_std) = params.split();
    let np = policy.len();
    let nv = value.len();
    let mut grad = vec![0.0; params.num_params()];
    let (g_policy, rest) = grad.split_at_mut(np);
    let (g_value, g_log_std) = rest.split_at_mut(nv);
    let sigma2 = (2.0 * log_std).exp();
    let (lo, hi) = (1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps);

    let mut surrogate = 0.0;
    let mut value_loss = 0.0;
    let mut clipped = 0usize;
    let mut ratio_sum = 0.0;
    let mut kl = 0.0;
    let mut d_log_std = 0.0;
    let mut acts_p = Vec::new();
    let mut acts_v = Vec::new();

    for i in 0..n {
        let x = batch.obs[i];
        let mean = params.action_scale * params.policy_shape.forward(policy, x, &mut acts_p);
        let v = params.value_shape.forward(value, x, &mut acts_v);
        let a = batch.raw_actions[i];
        let adv = batch.advantages[i];
        let log_prob = gaussian_log_prob(a, mean, log_std);
        let log_ratio = log_prob - batch.old_log_probs[i];
        let ratio = log_ratio.exp();

        let unclipped = ratio * adv;
        let clipped_term = ratio.clamp(lo, hi) * adv;
        // the gradient flows only through the unclipped branch when it is the min
        let d_ratio = if unclipped <= clipped_term {
            surrogate += unclipped;
            adv
        } else {
            surrogate += clipped_term;
            0.0
        };
        if !(lo..=hi).contains(&ratio) {
            clipped += 1;
        }
        ratio_sum += ratio;
        kl += (ratio - 1.0) - log_ratio;

        // d(-surrogate/n)/d(log_prob)
        let d_log_prob = -inv_n * d_ratio * ratio;
        let resid = a - mean;
        let d_mean = d_log_prob * resid / sigma2;
        d_log_std += d_log_prob * (resid * resid / sigma2 - 1.0);
        if d_mean != 0.0 {
            params
                .policy_shape
                .backward(policy, &acts_p, d_mean * params.action_scale, g_policy);
        }

        let err = v - batch.returns[i];
        value_loss += err * err;
        params
            .value_shape
            .backward(value, &acts_v, cfg.vf_coef * 2.0 * err * inv_n, g_value);
    }

    let entropy = gaussian_entropy(log_std);
    g_log_std[0] = d_log_std - cfg.ent_coef;

    let policy_loss = -surrogate * inv_n;
    let value_loss = value_loss * inv_n;
    let breakdown = LossBreakdown {
        total: policy_loss + cfg.vf_coef * value_loss - cfg.ent_coef * entropy,
        policy_loss,
        value_loss,
        entropy,
        clip_fraction: clipped as f64 * inv_n,
        mean_ratio: ratio_sum * inv_n,
        approx_kl: kl * inv_n,
    };
    (breakdown, grad)
}

/// Loss only; the finite-difference reference for [`ppo_loss_and_grad`].
pub fn ppo_loss(params: &PolicyParameters, batch: &Minibatch<'_>, cfg: &PpoConfig) -> f64 {
    ppo_loss_and_grad(params, batch, cfg).0.total
}

/// Averages over every minibatch step of one update.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct UpdateStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    pub mean_ratio: f64,
    pub approx_kl: f64,
    pub grad_norm: f64,
    pub minibatches: usize,
}

/// Runs `cfg.epochs` passes over `buffer` in shuffled minibatches.
/// `buffer` must already carry advantages and returns.
pub fn ppo_update<R: Rng + ?Sized>(
    params: &mut PolicyParameters,
    optimizer: &mut Adam,
    buffer: &TrajectoryBuffer,
    cfg: &PpoConfig,
    rng: &mut R,
) -> Result<UpdateStats> {
    if buffer.is_empty() {
        return Err(Error::Diverged("empty trajectory buffer".into()));
    }
    assert_eq!(
        buffer.advantages.len(),
        buffer.len(),
        "advantages not computed"
    );
    let mut order: Vec<usize> = (0..buffer.len()).collect();
    let mut stats = UpdateStats::default();
    for epoch in 0..cfg.epochs {
        order.shuffle(rng);
        for chunk in order.chunks(cfg.minibatch_size) {
            let mut batch = Minibatch::default();
            for &i in chunk {
                let t = &buffer.transitions[i];
                batch.obs.push(&t.obs);
                batch.raw_actions.push(t.raw_action);
                batch.old_log_probs.push(t.log_prob);
                batch.advantages.push(buffer.advantages[i]);
                batch.returns.push(buffer.returns[i]);
            }
            normalize_advantages(&mut batch.advantages);
            let (loss, mut grad) = ppo_loss_and_grad(params, &batch, cfg);
            if !loss.total.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::Diverged(format!(
                    "non-finite loss in epoch {epoch}: policy {} value {} entropy {}",
                    loss.policy_loss, loss.value_loss, loss.entropy
                )));
            }
            let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            if cfg.max_grad_norm > 0.0 && norm > cfg.max_grad_norm {
                let scale = cfg.max_grad_norm / norm;
                grad.iter_mut().for_each(|g| *g *= scale);
            }
            optimizer.step(&mut params.theta, &grad);
            params.clamp_log_std();

            stats.policy_loss += loss.policy_loss;
            stats.value_loss += loss.value_loss;
            stats.entropy += loss.entropy;
            stats.clip_fraction += loss.clip_fraction;
            stats.mean_ratio += loss.mean_ratio;
            stats.approx_kl += loss.approx_kl;
            stats.grad_norm += norm;
            stats.minibatches += 1;
        }
    }
    let k = stats.minibatches as f64;
    stats.policy_loss /= k;
    stats.value_loss /= k;
    stats.entropy /= k;
    stats.clip_fraction /= k;
    stats.mean_ratio /= k;
    stats.approx_kl /= k;
    stats.grad_norm /= k;
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn batch_at_current_policy<'a>(
        params: &PolicyParameters,
        obs: &'a [Vec<f64>],
        advantages: Vec<f64>,
    ) -> Minibatch<'a> {
        let mut b = Minibatch::default();
        for (i, x) in obs.iter().enumerate() {
            let out = params.forward_normalized(x);
            let a = out.mean + 0.3 * (i as f64 - 1.0);
            b.obs.push(x);
            b.raw_actions.push(a);
            b.old_log_probs
                .push(gaussian_log_prob(a, out.mean, out.log_std));
            b.returns.push(0.0);
        }
        b.advantages = advantages;
        b
    }

    fn obs_rows(n: usize) -> Vec<Vec<f64>> {
        (0..n)
            .map(|i| {
                (0..OBS_DIM)
                    .map(|k| ((i * 7 + k) as f64 * 0.37).sin())
                    .collect()
            })
            .collect()
    }

    #[test]
    fn unit_ratio_surrogate_is_mean_advantage() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let params = PolicyParameters::init(&[4, 4], 10.0, 0.0, &mut rng);
        let obs = obs_rows(3);
        let adv = vec![1.5, -0.5, 2.0];
        let batch = batch_at_current_policy(&params, &obs, adv.clone());
        let cfg = PpoConfig {
            vf_coef: 0.0,
            ..PpoConfig::default()
        };
        let (loss, grad) = ppo_loss_and_grad(&params, &batch, &cfg);
        assert!((loss.mean_ratio - 1.0).abs() < 1e-12);
        assert!((-loss.policy_loss - adv.iter().sum::<f64>() / 3.0).abs() < 1e-12);
        assert_eq!(loss.clip_fraction, 0.0);

        // at r = 1 the clipped objective has the same gradient as the plain one
        let unclipped_cfg = PpoConfig {
            clip_eps: 1e6,
            ..cfg.clone()
        };
        let (_, grad_plain) = ppo_loss_and_grad(&params, &batch, &unclipped_cfg);
        for (a, b) in grad.iter().zip(&grad_plain) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn positive_advantage_is_capped() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let params = PolicyParameters::init(&[4, 4], 10.0, 0.0, &mut rng);
        let obs = obs_rows(1);
        let mut batch = batch_at_current_policy(&params, &obs, vec![1.0]);
        // old log-prob lower by ln 2 gives r = 2
        batch.old_log_probs[0] -= 2f64.ln();
        let cfg = PpoConfig {
            vf_coef: 0.0,
            ..PpoConfig::default()
        };
        let (loss, grad) = ppo_loss_and_grad(&params, &batch, &cfg);
        assert!((loss.mean_ratio - 2.0).abs() < 1e-12);
        assert!((loss.policy_loss + 1.2).abs() < 1e-12);
        assert_eq!(loss.clip_fraction, 1.0);
        assert!(grad.iter().all(|g| *g == 0.0));
    }

    #[test]
    fn advantage_normalization() {
        let mut adv: Vec<f64> = (0..64).map(|i| (i as f64).powf(1.3) - 7.0).collect();
        normalize_advantages(&mut adv);
        let n = adv.len() as f64;
        let mean = adv.iter().sum::<f64>() / n;
        let std = (adv.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n).sqrt();
        assert!(mean.abs() <= 1e-6);
        assert!((std - 1.0).abs() <= 1e-6);
        let mut flat = vec![3.0; 4];
        normalize_advantages(&mut flat);
        assert!(flat.iter().all(|a| *a == 0.0));
    }

    #[test]
    fn update_reports_sane_stats() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut params = PolicyParameters::init(&[8, 8], 10.0, 0.0, &mut rng);
        let obs = obs_rows(40);
        let mut buffer = TrajectoryBuffer::default();
        let episode: Vec<Transition> = obs
            .iter()
            .enumerate()
            .map(|(i, x)| {
                let out = params.forward_normalized(x);
                let a = out.mean + ((i as f64) * 1.7).sin();
                Transition {
                    obs: x.clone().try_into().unwrap(),
                    raw_action: a,
                    applied_action: a.clamp(0.0, 100.0),
                    log_prob: gaussian_log_prob(a, out.mean, out.log_std),
                    reward: a * 0.01,
                    value: out.value,
                    done: i == 39,
                }
            })
            .collect();
        buffer.push_episode(episode);
        buffer.compute_advantages(0.99, 0.95);
        let cfg = PpoConfig {
            minibatch_size: 16,
            ..PpoConfig::default()
        };
        let mut adam = Adam::new(params.num_params(), cfg.learning_rate);
        let stats = ppo_update(&mut params, &mut adam, &buffer, &cfg, &mut rng).unwrap();
        assert_eq!(stats.minibatches, cfg.epochs * 3);
        assert!((0.0..=1.0).contains(&stats.clip_fraction));
        assert!(stats.approx_kl >= 0.0);
        params.check_finite().unwrap();

        let empty = TrajectoryBuffer::default();
        assert!(matches!(
            ppo_update(&mut params, &mut adam, &empty, &cfg, &mut rng),
            Err(Error::Diverged(_))
        ));
    }

    #[test]
    fn config_from_toml() {
        let cfg = PpoConfig::from_toml_str("iterations = 3\nhidden = [8]\n").unwrap();
        assert_eq!(cfg.iterations, 3);
        assert_eq!(cfg.hidden, vec![8]);
        assert_eq!(cfg.gamma, 0.99);
        assert!(PpoConfig::from_toml_str("gama = 0.9").is_err());
        assert!(PpoConfig::from_toml_str("clip_eps = 0").is_err());
    }
}
