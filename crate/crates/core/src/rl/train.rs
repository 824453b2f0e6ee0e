//! The training loop: parallel episode collection followed by a serial
//! parameter update, repeated.
//!
//! Every random draw descends from one master stream seeded by the caller,
//! and episodes are gathered back in index order, so a run is reproducible
//! regardless of how many threads collected it.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::env::{CropEnv, OBS_DIM};
use crate::error::Result;
use crate::par::{map_indexed, Execution};
use crate::rl::adam::Adam;
use crate::rl::policy::{policy_forward, sample_action, PolicyParameters};
use crate::rl::ppo::{ppo_update, PpoConfig, TrajectoryBuffer, Transition, UpdateStats};
use crate::scenario::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistoryRow {
    pub iteration: usize,
    /// Environment steps collected so far, this iteration included.
    pub env_steps: u64,
    pub episodes: usize,
    /// Mean undiscounted episode return in reward units.
    pub mean_return: f64,
    pub normalized_return: f64,
    pub mean_irrigation: f64,
    pub mean_yield: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    pub approx_kl: f64,
    pub log_std: f64,
}

pub const HISTORY_COLUMNS: [&str; 13] = [
    "iteration",
    "env_steps",
    "episodes",
    "mean_return",
    "normalized_return",
    "mean_irrigation",
    "mean_yield",
    "policy_loss",
    "value_loss",
    "entropy",
    "clip_fraction",
    "approx_kl",
    "log_std",
];

impl HistoryRow {
    pub fn to_record(&self) -> Vec<String> {
        vec![
            self.iteration.to_string(),
            self.env_steps.to_string(),
            self.episodes.to_string(),
            self.mean_return.to_string(),
            self.normalized_return.to_string(),
            self.mean_irrigation.to_string(),
            self.mean_yield.to_string(),
            self.policy_loss.to_string(),
            self.value_loss.to_string(),
            self.entropy.to_string(),
            self.clip_fraction.to_string(),
            self.approx_kl.to_string(),
            self.log_std.to_string(),
        ]
    }
}

pub fn history_csv(history: &[HistoryRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(HISTORY_COLUMNS)?;
    for row in history {
        w.write_record(row.to_record())?;
    }
    w.into_inner()
        .map_err(|e| crate::error::Error::io("<history csv>", e.into_error()))
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: PolicyParameters,
    pub history: Vec<HistoryRow>,
}

/// One stochastic rollout with the policy frozen.
#[derive(Debug, Clone)]
pub struct CollectedEpisode {
    pub transitions: Vec<Transition>,
    pub raw_obs: Vec<[f64; OBS_DIM]>,
    pub episode_return: f64,
    pub total_irrigation: f64,
    pub yield_t_ha: f64,
}

pub fn collect_episode(
    scenario: &Scenario,
    params: &PolicyParameters,
    env_seed: u64,
    policy_seed: u64,
    reward_scale: f64,
) -> Result<CollectedEpisode> {
    let mut env = CropEnv::new(scenario.config.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(policy_seed);
    let mut obs = env.reset(env_seed);
    let mut out = CollectedEpisode {
        transitions: Vec::new(),
        raw_obs: Vec::new(),
        episode_return: 0.0,
        total_irrigation: 0.0,
        yield_t_ha: 0.0,
    };
    loop {
        let x = params.normalize(&obs);
        let head = policy_forward(params, &obs)?;
        let (raw_action, log_prob) = sample_action(head.mean, head.log_std, &mut rng);
        let step = env.step(raw_action)?;
        out.episode_return += step.reward;
        out.total_irrigation += step.info.action_applied;
        out.raw_obs.push(obs.0);
        out.transitions.push(Transition {
            obs: x.try_into().expect("observation width"),
            raw_action,
            applied_action: step.info.action_applied,
            log_prob,
            reward: step.reward * reward_scale,
            value: head.value,
            done: step.done,
        });
        obs = step.observation;
        if step.done {
            out.yield_t_ha = step.info.yield_so_far;
            return Ok(out);
        }
    }
}

/// Parameters a run with this `(cfg, seed)` starts from.
pub fn initial_parameters(cfg: &PpoConfig, seed: u64) -> PolicyParameters {
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    PolicyParameters::init(&cfg.hidden, cfg.action_scale, cfg.init_log_std, &mut master)
}

pub fn train(
    scenario: &Scenario,
    cfg: &PpoConfig,
    seed: u64,
    exec: Execution,
) -> Result<TrainOutcome> {
    train_with(scenario, cfg, seed, exec, |_, _| {})
}

/// [`train`] with a callback after every iteration (for progress output and
/// periodic checkpoints).
pub fn train_with(
    scenario: &Scenario,
    cfg: &PpoConfig,
    seed: u64,
    exec: Execution,
    mut on_iteration: impl FnMut(&HistoryRow, &PolicyParameters),
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let mut params =
        PolicyParameters::init(&cfg.hidden, cfg.action_scale, cfg.init_log_std, &mut master);
    let mut optimizer = Adam::new(params.num_params(), cfg.learning_rate);
    let reward_scale = if cfg.normalize_rewards {
        1.0 / scenario.reference_yield
    } else {
        1.0
    };
    let mut history = Vec::with_capacity(cfg.iterations);
    let mut env_steps = 0u64;

    for iteration in 0..cfg.iterations {
        let seeds: Vec<(u64, u64)> = (0..cfg.episodes_per_iteration)
            .map(|_| (master.next_u64(), master.next_u64()))
            .collect();
        let shuffle_seed = master.next_u64();

        let frozen = &params;
        let episodes = map_indexed(exec, seeds.len(), |i| {
            collect_episode(scenario, frozen, seeds[i].0, seeds[i].1, reward_scale)
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

        let mut buffer = TrajectoryBuffer::default();
        let mut raw_obs = Vec::new();
        let (mut ret, mut irr, mut yld) = (0.0, 0.0, 0.0);
        for ep in episodes {
            ret += ep.episode_return;
            irr += ep.total_irrigation;
            yld += ep.yield_t_ha;
            raw_obs.extend(ep.raw_obs);
            buffer.push_episode(ep.transitions);
        }
        env_steps += buffer.len() as u64;
        buffer.compute_advantages(cfg.gamma, cfg.gae_lambda);

        let mut shuffle_rng = ChaCha8Rng::seed_from_u64(shuffle_seed);
        let stats: UpdateStats =
            ppo_update(&mut params, &mut optimizer, &buffer, cfg, &mut shuffle_rng)?;
        params.obs_norm.update(raw_obs.iter().map(|o| o.as_slice()));
        params.check_finite()?;

        let k = cfg.episodes_per_iteration as f64;
        let row = HistoryRow {
            iteration,
            env_steps,
            episodes: cfg.episodes_per_iteration,
            mean_return: ret / k,
            normalized_return: scenario.normalize(ret / k),
            mean_irrigation: irr / k,
            mean_yield: yld / k,
            policy_loss: stats.policy_loss,
            value_loss: stats.value_loss,
            entropy: stats.entropy,
            clip_fraction: stats.clip_fraction,
            approx_kl: stats.approx_kl,
            log_std: params.log_std(),
        };
        log::debug!(
            "iteration {iteration}: normalized return {:.4}, irrigation {:.1} mm, log_std {:.3}",
            row.normalized_return,
            row.mean_irrigation,
            row.log_std
        );
        on_iteration(&row, &params);
        history.push(row);
    }
    Ok(TrainOutcome { params, history })
}
