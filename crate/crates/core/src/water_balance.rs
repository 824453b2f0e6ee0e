//! Single-bucket root-zone water balance and the ARID drought index.
//!
//! Each day is resolved in a fixed order: rainfall runoff, infiltration of
//! the remaining rain plus irrigation, crop uptake against reference
//! evapotranspiration, then deep drainage of any excess above capacity.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::et0::penman_monteith_et0;
use crate::params::{ensure, FlatDoc};
use crate::weather::WeatherRecord;

pub const DEFAULT_WUC: f64 = 0.096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SoilParameters {
    /// Volumetric available water capacity (mm/mm).
    pub awc: f64,
    /// Runoff curve number.
    pub rcn: f64,
    /// Fraction of the excess above capacity drained per day.
    pub ddc: f64,
    /// Root zone depth (mm).
    pub rzd: f64,
    /// Water uptake coefficient (per day).
    pub wuc: f64,
    /// Site latitude (degrees north).
    pub latitude: f64,
    /// Site elevation (m).
    pub elevation: f64,
}

impl SoilParameters {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        Self::from_doc(FlatDoc::parse(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_doc(FlatDoc::read(path.as_ref())?)
    }

    fn from_doc(mut doc: FlatDoc) -> Result<Self> {
        let soil = Self {
            awc: doc.take("awc")?,
            rcn: doc.take("rcn")?,
            ddc: doc.take("ddc")?,
            rzd: doc.take("rzd")?,
            wuc: doc.take_or("wuc", DEFAULT_WUC),
            latitude: doc.take("latitude")?,
            elevation: doc.take("elevation")?,
        };
        doc.finish()?;
        soil.validate()?;
        Ok(soil)
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.awc > 0.0 && self.awc < 1.0, "awc", "must be in (0, 1)")?;
        ensure(
            (30.0..=100.0).contains(&self.rcn),
            "rcn",
            "must be in [30, 100]",
        )?;
        ensure((0.0..=1.0).contains(&self.ddc), "ddc", "must be in [0, 1]")?;
        ensure(self.rzd > 0.0, "rzd", "must be > 0")?;
        ensure(self.wuc > 0.0 && self.wuc < 1.0, "wuc", "must be in (0, 1)")?;
        ensure(
            (-90.0..=90.0).contains(&self.latitude),
            "latitude",
            "must be in [-90, 90]",
        )?;
        ensure(
            self.elevation > -500.0 && self.elevation < 9000.0,
            "elevation",
            "out of range",
        )?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SoilState {
    /// Volumetric plant-available water in the root zone (mm/mm).
    pub water_content: f64,
}

impl SoilState {
    /// Plant-available water in mm.
    pub fn paw_mm(&self, soil: &SoilParameters) -> f64 {
        self.water_content * soil.rzd
    }
}

/// Daily water fluxes, all in mm.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct WaterFluxes {
    pub rain: f64,
    pub irrigation: f64,
    pub runoff: f64,
    pub et0: f64,
    pub uptake: f64,
    pub drainage: f64,
    pub arid: f64,
}

/// SCS curve-number runoff (mm) for a day's `rain`.
pub fn curve_number_runoff(rain: f64, rcn: f64) -> f64 {
    let retention = 25400.0 / rcn - 254.0;
    let abstraction = 0.2 * retention;
    if rain <= abstraction {
        0.0
    } else {
        (rain - abstraction).powi(2) / (rain + 0.8 * retention)
    }
}

/// Drainage (mm) of water held above capacity.
pub fn deep_drainage(water_content: f64, soil: &SoilParameters) -> f64 {
    soil.ddc * soil.rzd * (water_content - soil.awc).max(0.0)
}

pub fn water_uptake(water_content: f64, et0: f64, soil: &SoilParameters) -> f64 {
    (soil.wuc * soil.rzd * water_content).min(et0)
}

/// `1 - uptake / et0`, defined as 0 when there is no demand.
pub fn arid_index(uptake: f64, et0: f64) -> f64 {
    if et0 <= 0.0 {
        0.0
    } else {
        (1.0 - uptake / et0).clamp(0.0, 1.0)
    }
}

/// Resolves one day of the bucket. Rain runs off, irrigation does not.
pub fn step_water(
    state: &SoilState,
    rain: f64,
    irrigation: f64,
    w: &WeatherRecord,
    soil: &SoilParameters,
) -> Result<(SoilState, WaterFluxes)> {
    let et0 = penman_monteith_et0(w, soil)?;
    Ok(step_water_with_et0(state, rain, irrigation, et0, soil))
}

/// [`step_water`] with reference evapotranspiration supplied by the caller.
pub fn step_water_with_et0(
    state: &SoilState,
    rain: f64,
    irrigation: f64,
    et0: f64,
    soil: &SoilParameters,
) -> (SoilState, WaterFluxes) {
    let runoff = curve_number_runoff(rain, soil.rcn);
    let mut paw = state.water_content * soil.rzd + (rain - runoff) + irrigation;

    let uptake = water_uptake(paw / soil.rzd, et0, soil);
    let arid = arid_index(uptake, et0);
    paw -= uptake;

    let drainage = deep_drainage(paw / soil.rzd, soil);
    paw -= drainage;

    let next = SoilState {
        water_content: (paw / soil.rzd).max(0.0),
    };
    let fluxes = WaterFluxes {
        rain,
        irrigation,
        runoff,
        et0,
        uptake,
        drainage,
        arid,
    };
    (next, fluxes)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn test_soil() -> SoilParameters {
        SoilParameters {
            awc: 0.13,
            rcn: 65.0,
            ddc: 0.55,
            rzd: 400.0,
            wuc: DEFAULT_WUC,
            latitude: 46.25,
            elevation: 210.0,
        }
    }

    #[test]
    fn runoff_cases() {
        assert_eq!(curve_number_runoff(10.0, 65.0), 0.0);
        assert_eq!(curve_number_runoff(0.0, 40.0), 0.0);
        // S = 136.76923076923077, Ia = 27.353846153846156
        let q = curve_number_runoff(50.0, 65.0);
        assert!((q - 3.217_056_404_317_549_6).abs() < 1e-12, "{q}");
        // rcn = 100 means no retention: everything runs off
        assert!((curve_number_runoff(12.0, 100.0) - 12.0).abs() < 1e-12);
    }

    #[test]
    fn drainage_cases() {
        let soil = test_soil();
        assert_eq!(deep_drainage(soil.awc, &soil), 0.0);
        assert_eq!(deep_drainage(0.05, &soil), 0.0);
        let d = deep_drainage(soil.awc + 0.05, &soil);
        assert!((d - 11.0).abs() < 1e-9, "{d}");
    }

    #[test]
    fn uptake_cases() {
        let soil = test_soil();
        assert_eq!(water_uptake(0.2, 0.0, &soil), 0.0);
        assert_eq!(water_uptake(0.0, 5.0, &soil), 0.0);
        assert_eq!(water_uptake(0.2, 5.0, &soil), 5.0);
    }

    #[test]
    fn arid_cases() {
        assert_eq!(arid_index(4.0, 4.0), 0.0);
        assert_eq!(arid_index(0.0, 4.0), 1.0);
        assert_eq!(arid_index(0.0, 0.0), 0.0);
    }

    #[test]
    fn inert_day_leaves_bucket_alone() {
        let soil = test_soil();
        let state = SoilState { water_content: 0.1 };
        let (next, f) = step_water_with_et0(&state, 0.0, 0.0, 0.0, &soil);
        assert_eq!(next, state);
        assert_eq!(f.arid, 0.0);
    }

    #[test]
    fn flooding_a_full_profile_mostly_drains() {
        // Walked by hand: awc 0.13, rzd 400 -> 52 mm at capacity.
        // +100 mm irrigation -> 152 mm; uptake min(0.096*152, 5) = 5 -> 147 mm;
        // excess 95 mm, drained 0.55*95 = 52.25 mm -> 94.75 mm.
        let soil = test_soil();
        let state = SoilState {
            water_content: soil.awc,
        };
        let (next, f) = step_water_with_et0(&state, 0.0, 100.0, 5.0, &soil);
        assert!((f.uptake - 5.0).abs() < 1e-12);
        assert!((f.drainage - 52.25).abs() < 1e-9, "{}", f.drainage);
        assert!((next.paw_mm(&soil) - 94.75).abs() < 1e-9);
        assert_eq!(f.arid, 0.0);
    }

    #[test]
    fn loader_defaults_wuc_and_validates() {
        let text =
            "awc = 0.13\nrcn = 65\nddc = 0.55\nrzd = 400\nlatitude = 46.25\nelevation = 210\n";
        let soil = SoilParameters::from_toml_str(text).unwrap();
        assert_eq!(soil.wuc, DEFAULT_WUC);
        let err = SoilParameters::from_toml_str(&text.replace("rcn = 65", "rcn = 12"))
            .unwrap_err()
            .to_string();
        assert!(err.contains("`rcn`"), "{err}");
        let err = SoilParameters::from_toml_str(&text.replace("rzd = 400\n", ""))
            .unwrap_err()
            .to_string();
        assert!(err.contains("`rzd`"), "{err}");
    }
}
