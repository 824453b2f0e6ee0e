//! Scenario files tie together crop, soil and weather inputs.
//!
//! ```toml
//! crop = "potato.toml"          # paths relative to this file
//! soil = "soil.toml"
//! weather = "weather.csv"
//! sowing_date = "2000-04-01"
//! seed = 0
//! max_season_days = 365         # optional
//! irrigation_cost = -1.25e-4    # optional
//! initial_water_content = 0.12  # optional, defaults to awc
//!
//! [noise]                       # optional, per-variable std overrides
//! wind = 6.0
//! ```

use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::NaiveDate;
use serde::Deserialize;

use crate::crop::CropParameters;
use crate::env::{potential_yield, EnvConfig, DEFAULT_IRRIGATION_COST, DEFAULT_MAX_SEASON_DAYS};
use crate::error::{Error, Result};
use crate::water_balance::SoilParameters;
use crate::weather::{load_weather_csv, NoiseSpec};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    crop: PathBuf,
    soil: PathBuf,
    weather: PathBuf,
    sowing_date: NaiveDate,
    seed: u64,
    #[serde(default = "default_max_days")]
    max_season_days: u32,
    #[serde(default = "default_cost")]
    irrigation_cost: f64,
    initial_water_content: Option<f64>,
    #[serde(default)]
    noise: NoiseSpec,
}

fn default_max_days() -> u32 {
    DEFAULT_MAX_SEASON_DAYS
}

fn default_cost() -> f64 {
    DEFAULT_IRRIGATION_COST
}

/// A validated environment configuration with its no-water-limit reference yield.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: Arc<EnvConfig>,
    pub seed: u64,
    /// Potential yield (t/ha) used to normalize returns.
    pub reference_yield: f64,
}

impl Scenario {
    pub fn new(config: EnvConfig, seed: u64) -> Result<Self> {
        let reference_yield = potential_yield(&config)?;
        if reference_yield == 0.0 {
            return Err(Error::ZeroReferenceYield);
        }
        Ok(Self {
            config: Arc::new(config),
            seed,
            reference_yield,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: ScenarioFile = toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.message().to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        let crop = CropParameters::load(base.join(&file.crop))?;
        let soil = SoilParameters::load(base.join(&file.soil))?;
        let weather = load_weather_csv(base.join(&file.weather))?;
        let config = EnvConfig {
            noise: file.noise,
            max_season_days: file.max_season_days,
            irrigation_cost: file.irrigation_cost,
            initial_water_content: file.initial_water_content,
            ..EnvConfig::new(crop, soil, Arc::new(weather), file.sowing_date)
        };
        Self::new(config, file.seed)
    }

    pub fn with_noise(&self, noise: NoiseSpec) -> Result<Self> {
        let config = EnvConfig {
            noise,
            ..(*self.config).clone()
        };
        Self::new(config, self.seed)
    }

    pub fn normalize(&self, episode_return: f64) -> f64 {
        episode_return / self.reference_yield
    }
}
