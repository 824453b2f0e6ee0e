//! The irrigation-control environment: a reset/step lifecycle over the crop
//! and soil models, one simulated day per step.

use std::sync::Arc;

use chrono::NaiveDate;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::crop::{self, CropDrivers, CropParameters, CropState, DailyStressFactors};
use crate::error::{Error, Result};
use crate::params::ensure;
use crate::water_balance::{step_water, SoilParameters, SoilState, WaterFluxes};
use crate::weather::{forecast, noisy_reading, NoiseSpec, WeatherRecord, WeatherSeries};

/// Reward units per mm of irrigation.
pub const DEFAULT_IRRIGATION_COST: f64 = -1.25e-4;
pub const DEFAULT_MAX_SEASON_DAYS: u32 = 365;
pub const ACTION_LOW: f64 = 0.0;
pub const ACTION_HIGH: f64 = 100.0;

pub const OBS_DIM: usize = 21;
pub const OBS_BIOMASS: usize = 0;
pub const OBS_CUMULATIVE_TT: usize = 1;
pub const OBS_DAYS: usize = 2;
pub const OBS_TODAY: usize = 3;
pub const OBS_FORECAST: usize = 11;
pub const OBS_NO_TOMORROW: usize = 19;
pub const OBS_PAW: usize = 20;

/// Column names of the observation vector, in order.
pub const OBS_NAMES: [&str; OBS_DIM] = [
    "biomass_noisy",
    "cumulative_tt",
    "days_since_sowing",
    "tmax",
    "tmin",
    "tavg",
    "rain",
    "srad",
    "co2",
    "vap",
    "wind",
    "fc_tmax",
    "fc_tmin",
    "fc_tavg",
    "fc_rain",
    "fc_srad",
    "fc_co2",
    "fc_vap",
    "fc_wind",
    "no_tomorrow",
    "paw_noisy",
];

#[derive(Debug, Clone, PartialEq)]
pub struct EnvConfig {
    pub crop: CropParameters,
    pub soil: SoilParameters,
    pub weather: Arc<WeatherSeries>,
    pub noise: NoiseSpec,
    pub sowing_date: NaiveDate,
    pub max_season_days: u32,
    pub irrigation_cost: f64,
    pub action_low: f64,
    pub action_high: f64,
    /// Volumetric water content at sowing; `None` starts at capacity.
    pub initial_water_content: Option<f64>,
}

impl EnvConfig {
    pub fn new(
        crop: CropParameters,
        soil: SoilParameters,
        weather: Arc<WeatherSeries>,
        sowing_date: NaiveDate,
    ) -> Self {
        Self {
            crop,
            soil,
            weather,
            noise: NoiseSpec::default(),
            sowing_date,
            max_season_days: DEFAULT_MAX_SEASON_DAYS,
            irrigation_cost: DEFAULT_IRRIGATION_COST,
            action_low: ACTION_LOW,
            action_high: ACTION_HIGH,
            initial_water_content: None,
        }
    }

    /// Checks every invariant and returns the weather index of the sowing day.
    ///
    /// The series must hold the sowing day plus `max_season_days` further days.
    pub fn validate(&self) -> Result<usize> {
        self.crop.validate()?;
        self.soil.validate()?;
        self.noise.validate()?;
        ensure(self.max_season_days >= 1, "max_season_days", "must be >= 1")?;
        ensure(
            self.action_low.is_finite()
                && self.action_high.is_finite()
                && self.action_low <= self.action_high,
            "action_bounds",
            "must be finite and ordered",
        )?;
        ensure(
            self.irrigation_cost.is_finite(),
            "irrigation_cost",
            "must be finite",
        )?;
        if let Some(wc) = self.initial_water_content {
            ensure(
                wc.is_finite() && wc >= 0.0,
                "initial_water_content",
                "must be >= 0",
            )?;
        }
        let start = self.weather.index_of(self.sowing_date).ok_or_else(|| {
            Error::WeatherCoverage(format!("sowing date {} not in series", self.sowing_date))
        })?;
        let needed = start + self.max_season_days as usize;
        if needed >= self.weather.len() {
            let last = self.weather.records().last().map(|r| r.date);
            return Err(Error::WeatherCoverage(format!(
                "{} days from {} need data through index {needed}, series ends at {:?}",
                self.max_season_days, self.sowing_date, last
            )));
        }
        Ok(start)
    }

    fn initial_soil(&self) -> SoilState {
        SoilState {
            water_content: self.initial_water_content.unwrap_or(self.soil.awc),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation(pub [f64; OBS_DIM]);

impl Observation {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn days_since_sowing(&self) -> f64 {
        self.0[OBS_DAYS]
    }

    pub fn cumulative_tt(&self) -> f64 {
        self.0[OBS_CUMULATIVE_TT]
    }
}

/// Diagnostics for one step. Biomass and PAW here are the true values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepInfo {
    /// Date of the day that was just simulated.
    pub date: NaiveDate,
    /// Days since sowing after this step.
    pub day: u32,
    pub action_requested: f64,
    pub action_applied: f64,
    pub action_clamped: bool,
    pub biomass: f64,
    pub paw_mm: f64,
    pub cumulative_tt: f64,
    pub i50b_effective: f64,
    pub arid: f64,
    pub stress: DailyStressFactors,
    pub fluxes: WaterFluxes,
    /// t/ha if harvested now.
    pub yield_so_far: f64,
    pub matured: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepResult {
    pub observation: Observation,
    pub reward: f64,
    pub done: bool,
    pub info: StepInfo,
}

/// `c_i * action`, plus the yield on the harvest day.
pub fn reward_fn(action: f64, is_harvest: bool, yield_t_ha: f64, irrigation_cost: f64) -> f64 {
    let cost = irrigation_cost * action;
    if is_harvest {
        cost + yield_t_ha
    } else {
        cost
    }
}

/// Yield (t/ha) of the same season with no water limitation: every day is
/// simulated with ARID forced to zero. Uses the same maturity and failsafe
/// termination as [`CropEnv`].
pub fn potential_yield(config: &EnvConfig) -> Result<f64> {
    let start = config.validate()?;
    let p = &config.crop;
    let mut state = CropState::sown(p);
    for day in 0..config.max_season_days as usize {
        let w = &config.weather.records()[start + day];
        let drivers = CropDrivers {
            tavg: w.tavg,
            tmax: w.tmax,
            srad: w.srad,
            co2: w.co2,
            arid: 0.0,
        };
        state = crop::step_crop(&state, &drivers, p)?.0;
        if state.matured {
            break;
        }
    }
    Ok(crop::harvest_yield(&state, p))
}

/// `episode_return / reference_yield`.
pub fn normalized_return(episode_return: f64, reference_yield: f64) -> Result<f64> {
    if reference_yield == 0.0 {
        return Err(Error::ZeroReferenceYield);
    }
    Ok(episode_return / reference_yield)
}

struct Episode {
    rng: ChaCha8Rng,
    crop: CropState,
    soil: SoilState,
    done: bool,
}

/// One environment instance. Strictly sequential; run many instances for
/// parallel rollouts.
pub struct CropEnv {
    config: Arc<EnvConfig>,
    start: usize,
    episode: Option<Episode>,
}

impl CropEnv {
    pub fn new(config: Arc<EnvConfig>) -> Result<Self> {
        let start = config.validate()?;
        Ok(Self {
            config,
            start,
            episode: None,
        })
    }

    pub fn config(&self) -> &Arc<EnvConfig> {
        &self.config
    }

    /// Starts a new season. The noise stream is seeded from `seed` only.
    pub fn reset(&mut self, seed: u64) -> Observation {
        let mut episode = Episode {
            rng: ChaCha8Rng::seed_from_u64(seed),
            crop: CropState::sown(&self.config.crop),
            soil: self.config.initial_soil(),
            done: false,
        };
        let obs = self.observe(&mut episode);
        self.episode = Some(episode);
        obs
    }

    pub fn is_done(&self) -> bool {
        self.episode.as_ref().is_none_or(|e| e.done)
    }

    pub fn crop_state(&self) -> Option<&CropState> {
        self.episode.as_ref().map(|e| &e.crop)
    }

    pub fn soil_state(&self) -> Option<&SoilState> {
        self.episode.as_ref().map(|e| &e.soil)
    }

    /// Applies `action` mm of irrigation to the current day. Out-of-range
    /// actions are clamped into the action bounds.
    pub fn step(&mut self, action: f64) -> Result<StepResult> {
        if !action.is_finite() {
            return Err(Error::NonFinite("action".into()));
        }
        let mut episode = self.episode.take().ok_or(Error::NotReset)?;
        if episode.done {
            self.episode = Some(episode);
            return Err(Error::EpisodeDone);
        }
        let cfg = Arc::clone(&self.config);
        let applied = action.clamp(cfg.action_low, cfg.action_high);
        let today = cfg.weather.records()[self.start + episode.crop.days_elapsed as usize];

        let stepped = step_water(&episode.soil, today.rain, applied, &today, &cfg.soil).and_then(
            |(soil, fluxes)| {
                let drivers = CropDrivers {
                    tavg: today.tavg,
                    tmax: today.tmax,
                    srad: today.srad,
                    co2: today.co2,
                    arid: fluxes.arid,
                };
                crop::step_crop(&episode.crop, &drivers, &cfg.crop)
                    .map(|(crop, stress)| (soil, fluxes, crop, stress))
            },
        );
        let (soil, fluxes, crop, stress) = match stepped {
            Ok(v) => v,
            Err(e) => {
                self.episode = Some(episode);
                return Err(e);
            }
        };
        episode.soil = soil;
        episode.crop = crop;
        episode.done = crop.matured || crop.days_elapsed >= cfg.max_season_days;

        let yield_so_far = crop::harvest_yield(&crop, &cfg.crop);
        let reward = reward_fn(applied, episode.done, yield_so_far, cfg.irrigation_cost);
        let info = StepInfo {
            date: today.date,
            day: crop.days_elapsed,
            action_requested: action,
            action_applied: applied,
            action_clamped: applied != action,
            biomass: crop.cumulative_biomass,
            paw_mm: soil.paw_mm(&cfg.soil),
            cumulative_tt: crop.cumulative_tt,
            i50b_effective: crop.i50b_effective,
            arid: fluxes.arid,
            stress,
            fluxes,
            yield_so_far,
            matured: crop.matured,
        };
        let observation = self.observe(&mut episode);
        let done = episode.done;
        self.episode = Some(episode);
        Ok(StepResult {
            observation,
            reward,
            done,
            info,
        })
    }

    /// Noise is drawn in a fixed order: biomass, the eight forecast fields,
    /// then PAW.
    fn observe(&self, episode: &mut Episode) -> Observation {
        let cfg = &self.config;
        let records = cfg.weather.records();
        let idx = self.start + episode.crop.days_elapsed as usize;
        let today: &WeatherRecord = &records[idx];

        let mut obs = [0.0; OBS_DIM];
        obs[OBS_BIOMASS] = noisy_reading(
            episode.crop.cumulative_biomass,
            cfg.noise.biomass,
            &mut episode.rng,
        );
        obs[OBS_CUMULATIVE_TT] = episode.crop.cumulative_tt;
        obs[OBS_DAYS] = episode.crop.days_elapsed as f64;
        obs[OBS_TODAY..OBS_TODAY + 8].copy_from_slice(&today.values());
        match records.get(idx + 1) {
            Some(tomorrow) => {
                let fc = forecast(tomorrow, &cfg.noise, &mut episode.rng);
                obs[OBS_FORECAST..OBS_FORECAST + 8].copy_from_slice(&fc.values());
            }
            None => {
                obs[OBS_FORECAST..OBS_FORECAST + 8].copy_from_slice(&today.values());
                obs[OBS_NO_TOMORROW] = 1.0;
            }
        }
        obs[OBS_PAW] = noisy_reading(
            episode.soil.paw_mm(&cfg.soil),
            cfg.noise.paw,
            &mut episode.rng,
        );
        Observation(obs)
    }
}
