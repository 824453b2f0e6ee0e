//! Full-season rollouts of a fixed policy and their CSV logs.

use std::io::Write;
use std::path::Path;

use chrono::NaiveDate;
use serde::Serialize;

use crate::env::{CropEnv, Observation, StepInfo, OBS_NAMES};
use crate::error::{Error, Result};
use crate::policy::Policy;
use crate::scenario::Scenario;

/// One simulated day: the observation the policy acted on, the action, and
/// what happened.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRow {
    pub observation: Observation,
    pub reward: f64,
    pub done: bool,
    pub info: StepInfo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpisodeSummary {
    pub seed: u64,
    pub days: u32,
    pub matured: bool,
    pub yield_t_ha: f64,
    pub total_irrigation: f64,
    pub episode_return: f64,
    pub normalized_return: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    pub rows: Vec<EpisodeRow>,
    pub summary: EpisodeSummary,
}

pub fn run_episode(scenario: &Scenario, policy: &mut dyn Policy, seed: u64) -> Result<EpisodeLog> {
    let mut env = CropEnv::new(scenario.config.clone())?;
    let mut obs = env.reset(seed);
    let mut rows = Vec::new();
    let mut episode_return = 0.0;
    let mut total_irrigation = 0.0;
    loop {
        let action = policy.act(&obs)?;
        let step = env.step(action)?;
        episode_return += step.reward;
        total_irrigation += step.info.action_applied;
        rows.push(EpisodeRow {
            observation: obs,
            reward: step.reward,
            done: step.done,
            info: step.info,
        });
        obs = step.observation;
        if step.done {
            let info = step.info;
            let summary = EpisodeSummary {
                seed,
                days: info.day,
                matured: info.matured,
                yield_t_ha: info.yield_so_far,
                total_irrigation,
                episode_return,
                normalized_return: scenario.normalize(episode_return),
            };
            return Ok(EpisodeLog { rows, summary });
        }
    }
}

const ROW_COLUMNS: [&str; 24] = [
    "day",
    "date",
    "action_requested",
    "action_applied",
    "action_clamped",
    "reward",
    "done",
    "biomass",
    "paw_mm",
    "cumulative_tt",
    "i50b_effective",
    "arid",
    "f_temp",
    "f_heat",
    "f_co2",
    "f_water",
    "f_solar",
    "rain",
    "runoff",
    "et0",
    "uptake",
    "drainage",
    "yield_so_far",
    "matured",
];

fn fmt_date(d: NaiveDate) -> String {
    d.format("%Y-%m-%d").to_string()
}

/// Per-day CSV. `day` is the day index the observation refers to; the
/// state columns are the true values after the step.
pub fn episode_csv(log: &EpisodeLog) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let header: Vec<String> = ROW_COLUMNS
        .iter()
        .map(|s| s.to_string())
        .chain(OBS_NAMES.iter().map(|n| format!("obs_{n}")))
        .collect();
    w.write_record(&header)?;
    for row in &log.rows {
        let i = &row.info;
        let mut rec = vec![
            (i.day - 1).to_string(),
            fmt_date(i.date),
            i.action_requested.to_string(),
            i.action_applied.to_string(),
            i.action_clamped.to_string(),
            row.reward.to_string(),
            row.done.to_string(),
            i.biomass.to_string(),
            i.paw_mm.to_string(),
            i.cumulative_tt.to_string(),
            i.i50b_effective.to_string(),
            i.arid.to_string(),
            i.stress.f_temp.to_string(),
            i.stress.f_heat.to_string(),
            i.stress.f_co2.to_string(),
            i.stress.f_water.to_string(),
            i.stress.f_solar.to_string(),
            i.fluxes.rain.to_string(),
            i.fluxes.runoff.to_string(),
            i.fluxes.et0.to_string(),
            i.fluxes.uptake.to_string(),
            i.fluxes.drainage.to_string(),
            i.yield_so_far.to_string(),
            i.matured.to_string(),
        ];
        rec.extend(row.observation.0.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.into_inner()
        .map_err(|e| Error::io("<episode csv>", e.into_error()))
}

pub fn summary_csv(summary: &EpisodeSummary) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["key", "value"])?;
    let rows = [
        ("seed", summary.seed.to_string()),
        ("days", summary.days.to_string()),
        ("matured", summary.matured.to_string()),
        ("yield_t_ha", summary.yield_t_ha.to_string()),
        ("total_irrigation", summary.total_irrigation.to_string()),
        ("episode_return", summary.episode_return.to_string()),
        ("normalized_return", summary.normalized_return.to_string()),
    ];
    for (k, v) in rows {
        w.write_record([k, v.as_str()])?;
    }
    w.into_inner()
        .map_err(|e| Error::io("<summary csv>", e.into_error()))
}

/// Writes `bytes` to a sibling temporary file and renames it over `path`,
/// so readers never observe a partially written file.
pub fn write_atomic(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::io(path, std::io::ErrorKind::InvalidInput.into()))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(file_name);
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    let write = || -> std::io::Result<()> {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    };
    write().map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

/// Return statistics over several episodes (population standard deviation).
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub episodes: Vec<EpisodeSummary>,
    pub mean_return: f64,
    pub std_return: f64,
    pub mean_normalized: f64,
    pub std_normalized: f64,
}

fn mean_std(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = xs.clone().count() as f64;
    let mean = xs.clone().sum::<f64>() / n;
    let var = xs.map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Runs `episodes` seasons with noise seeds `seed, seed + 1, ...`, building a
/// fresh policy for each from its seed.
pub fn evaluate<'p, F>(
    scenario: &Scenario,
    episodes: usize,
    seed: u64,
    exec: crate::par::Execution,
    make_policy: F,
) -> Result<Evaluation>
where
    F: Fn(u64) -> Result<Box<dyn Policy + 'p>> + Sync + Send,
{
    if episodes == 0 {
        return Err(Error::param("episodes", "must be >= 1"));
    }
    let summaries = crate::par::map_indexed(exec, episodes, |i| {
        let episode_seed = seed.wrapping_add(i as u64);
        let mut policy = make_policy(episode_seed)?;
        run_episode(scenario, policy.as_mut(), episode_seed).map(|log| log.summary)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let (mean_return, std_return) = mean_std(summaries.iter().map(|s| s.episode_return));
    let (mean_normalized, std_normalized) = mean_std(summaries.iter().map(|s| s.normalized_return));
    Ok(Evaluation {
        episodes: summaries,
        mean_return,
        std_return,
        mean_normalized,
        std_normalized,
    })
}
