//! Daily crop growth: phenology, canopy interception, stress factors and
//! biomass accumulation.
//!
//! Biomass is tracked in g/m² throughout and only converted to t/ha when a
//! yield is reported.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{ensure, FlatDoc};

/// Canopy logistic steepness, per degree-day.
const CANOPY_RATE: f64 = 0.01;
/// CO2 concentration at which the CO2 multiplier is 1.
const CO2_REFERENCE_PPM: f64 = 350.0;
/// CO2 concentration above which the multiplier saturates.
const CO2_SATURATION_PPM: f64 = 700.0;
/// g/m² to t/ha.
const G_M2_TO_T_HA: f64 = 0.01;

pub const DEFAULT_F_SOLAR_MAX: f64 = 0.95;

/// Coefficients describing one crop cultivar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CropParameters {
    /// Thermal time from sowing to maturity (°C·day).
    pub t_sum: f64,
    pub harvest_index: f64,
    /// Thermal time from sowing to 50% light interception (°C·day).
    pub i50a: f64,
    /// Thermal time before maturity at which interception has fallen to 50% (°C·day).
    pub i50b: f64,
    pub t_base: f64,
    pub t_opt: f64,
    /// Radiation use efficiency (g/MJ).
    pub rue: f64,
    /// Maximum daily increase of `i50b` under full heat stress (°C·day).
    pub i50max_h: f64,
    /// Maximum daily increase of `i50b` under full drought stress (°C·day).
    pub i50max_w: f64,
    pub t_heat: f64,
    pub t_extreme: f64,
    /// Relative RUE gain per ppm of CO2 above 350 ppm.
    pub s_co2: f64,
    /// Sensitivity of growth to the ARID drought index.
    pub s_water: f64,
    pub f_solar_max: f64,
}

impl CropParameters {
    /// Parses a flat TOML document. `f_solar_max` may be omitted.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        Self::from_doc(FlatDoc::parse(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_doc(FlatDoc::read(path.as_ref())?)
    }

    fn from_doc(mut doc: FlatDoc) -> Result<Self> {
        let params = Self {
            t_sum: doc.take("t_sum")?,
            harvest_index: doc.take("harvest_index")?,
            i50a: doc.take("i50a")?,
            i50b: doc.take("i50b")?,
            t_base: doc.take("t_base")?,
            t_opt: doc.take("t_opt")?,
            rue: doc.take("rue")?,
            i50max_h: doc.take("i50max_h")?,
            i50max_w: doc.take("i50max_w")?,
            t_heat: doc.take("t_heat")?,
            t_extreme: doc.take("t_extreme")?,
            s_co2: doc.take("s_co2")?,
            s_water: doc.take("s_water")?,
            f_solar_max: doc.take_or("f_solar_max", DEFAULT_F_SOLAR_MAX),
        };
        doc.finish()?;
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.t_sum > 0.0, "t_sum", "must be > 0")?;
        ensure(
            self.harvest_index > 0.0 && self.harvest_index <= 1.0,
            "harvest_index",
            "must be in (0, 1]",
        )?;
        ensure(self.i50a > 0.0, "i50a", "must be > 0")?;
        ensure(self.i50b > 0.0, "i50b", "must be > 0")?;
        ensure(self.t_base < self.t_opt, "t_opt", "must exceed t_base")?;
        ensure(self.rue > 0.0, "rue", "must be > 0")?;
        ensure(self.i50max_h >= 0.0, "i50max_h", "must be >= 0")?;
        ensure(self.i50max_w >= 0.0, "i50max_w", "must be >= 0")?;
        ensure(
            self.t_heat < self.t_extreme,
            "t_extreme",
            "must exceed t_heat",
        )?;
        ensure(self.s_co2 >= 0.0, "s_co2", "must be >= 0")?;
        ensure(self.s_water >= 0.0, "s_water", "must be >= 0")?;
        ensure(
            self.f_solar_max > 0.0 && self.f_solar_max <= 1.0,
            "f_solar_max",
            "must be in (0, 1]",
        )?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CropState {
    /// Above-ground biomass since sowing (g/m²).
    pub cumulative_biomass: f64,
    /// Thermal time since sowing (°C·day).
    pub cumulative_tt: f64,
    /// Senescence parameter after stress acceleration; never below `CropParameters::i50b`.
    pub i50b_effective: f64,
    pub days_elapsed: u32,
    pub matured: bool,
}

impl CropState {
    /// State on the day of sowing.
    pub fn sown(p: &CropParameters) -> Self {
        Self {
            cumulative_biomass: 0.0,
            cumulative_tt: 0.0,
            i50b_effective: p.i50b,
            days_elapsed: 0,
            matured: false,
        }
    }
}

/// Per-day response factors, reported for diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DailyStressFactors {
    pub f_temp: f64,
    pub f_heat: f64,
    pub f_co2: f64,
    pub f_water: f64,
    pub f_solar: f64,
}

/// Weather and soil inputs driving one crop day.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CropDrivers {
    pub tavg: f64,
    pub tmax: f64,
    pub srad: f64,
    pub co2: f64,
    pub arid: f64,
}

pub fn thermal_time_delta(tavg: f64, t_base: f64) -> f64 {
    (tavg - t_base).max(0.0)
}

pub fn f_temp(tavg: f64, p: &CropParameters) -> f64 {
    if tavg < p.t_base {
        0.0
    } else if tavg < p.t_opt {
        (tavg - p.t_base) / (p.t_opt - p.t_base)
    } else {
        1.0
    }
}

pub fn f_heat(tmax: f64, p: &CropParameters) -> f64 {
    if tmax <= p.t_heat {
        1.0
    } else if tmax <= p.t_extreme {
        1.0 - (tmax - p.t_heat) / (p.t_extreme - p.t_heat)
    } else {
        0.0
    }
}

/// Linear CO2 response between 350 and 700 ppm, flat outside that band.
pub fn f_co2(co2: f64, p: &CropParameters) -> f64 {
    1.0 + p.s_co2 * (co2.clamp(CO2_REFERENCE_PPM, CO2_SATURATION_PPM) - CO2_REFERENCE_PPM)
}

pub fn f_water(arid: f64, p: &CropParameters) -> f64 {
    (1.0 - p.s_water * arid).clamp(0.0, 1.0)
}

/// Fraction of radiation intercepted by the canopy: the smaller of a growth
/// logistic centred on `i50a` and a senescence logistic centred on
/// `t_sum - i50b_effective`.
pub fn f_solar(
    cumulative_tt: f64,
    i50a: f64,
    i50b_effective: f64,
    t_sum: f64,
    f_solar_max: f64,
) -> f64 {
    let growth = f_solar_max / (1.0 + (-CANOPY_RATE * (cumulative_tt - i50a)).exp());
    let senescence =
        f_solar_max / (1.0 + (CANOPY_RATE * (cumulative_tt - (t_sum - i50b_effective))).exp());
    growth.min(senescence)
}

pub fn update_senescence(
    i50b_effective: f64,
    f_heat: f64,
    f_water: f64,
    p: &CropParameters,
) -> f64 {
    i50b_effective + p.i50max_h * (1.0 - f_heat) + p.i50max_w * (1.0 - f_water)
}

/// Biomass produced in one day (g/m²).
pub fn daily_biomass_rate(srad: f64, stress: &DailyStressFactors, rue: f64) -> f64 {
    srad * stress.f_solar * rue * stress.f_co2 * stress.f_temp * stress.f_heat.min(stress.f_water)
}

/// Advances the crop by one day.
///
/// Stress factors and canopy interception are evaluated on the state the day
/// starts with; the returned state has maturity set as soon as thermal time
/// reaches `t_sum`, with no proration of the crossing day.
pub fn step_crop(
    state: &CropState,
    drivers: &CropDrivers,
    p: &CropParameters,
) -> Result<(CropState, DailyStressFactors)> {
    if state.matured {
        return Err(Error::AlreadyMatured);
    }
    let stress = DailyStressFactors {
        f_temp: f_temp(drivers.tavg, p),
        f_heat: f_heat(drivers.tmax, p),
        f_co2: f_co2(drivers.co2, p),
        f_water: f_water(drivers.arid, p),
        f_solar: f_solar(
            state.cumulative_tt,
            p.i50a,
            state.i50b_effective,
            p.t_sum,
            p.f_solar_max,
        ),
    };
    let cumulative_tt = state.cumulative_tt + thermal_time_delta(drivers.tavg, p.t_base);
    let next = CropState {
        cumulative_biomass: state.cumulative_biomass
            + daily_biomass_rate(drivers.srad, &stress, p.rue),
        cumulative_tt,
        i50b_effective: update_senescence(state.i50b_effective, stress.f_heat, stress.f_water, p),
        days_elapsed: state.days_elapsed + 1,
        matured: cumulative_tt >= p.t_sum,
    };
    Ok((next, stress))
}

/// Harvestable yield (t/ha) from the current biomass, regardless of maturity.
pub fn harvest_yield(state: &CropState, p: &CropParameters) -> f64 {
    state.cumulative_biomass * p.harvest_index * G_M2_TO_T_HA
}

pub fn yield_at_maturity(state: &CropState, p: &CropParameters) -> Result<f64> {
    if !state.matured {
        return Err(Error::NotMatured);
    }
    Ok(harvest_yield(state, p))
}
