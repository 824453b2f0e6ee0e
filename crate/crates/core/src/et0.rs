//! FAO-56 Penman-Monteith reference evapotranspiration at daily resolution.

use std::f64::consts::PI;

use chrono::Datelike;

use crate::error::{Error, Result};
use crate::water_balance::SoilParameters;
use crate::weather::WeatherRecord;

/// Solar constant, MJ m⁻² min⁻¹.
const SOLAR_CONSTANT: f64 = 0.0820;
/// Stefan-Boltzmann constant, MJ K⁻⁴ m⁻² day⁻¹.
const STEFAN_BOLTZMANN: f64 = 4.903e-9;
const ALBEDO: f64 = 0.23;

/// Saturation vapour pressure (kPa) at `t` °C.
pub fn saturation_vapour_pressure(t: f64) -> f64 {
    0.6108 * (17.27 * t / (t + 237.3)).exp()
}

/// Psychrometric constant (kPa/°C) at `elevation` metres.
pub fn psychrometric_constant(elevation: f64) -> f64 {
    let pressure = 101.3 * ((293.0 - 0.0065 * elevation) / 293.0).powf(5.26);
    0.665e-3 * pressure
}

/// Extraterrestrial radiation (MJ m⁻² day⁻¹).
pub fn extraterrestrial_radiation(latitude_deg: f64, day_of_year: u32) -> f64 {
    let phi = latitude_deg.to_radians();
    let j = day_of_year as f64;
    let dr = 1.0 + 0.033 * (2.0 * PI / 365.0 * j).cos();
    let declination = 0.409 * (2.0 * PI / 365.0 * j - 1.39).sin();
    // clamped for polar day/night
    let sunset = (-phi.tan() * declination.tan()).clamp(-1.0, 1.0).acos();
    24.0 * 60.0 / PI
        * SOLAR_CONSTANT
        * dr
        * (sunset * phi.sin() * declination.sin() + phi.cos() * declination.cos() * sunset.sin())
}

/// Net radiation (MJ m⁻² day⁻¹).
fn net_radiation(w: &WeatherRecord, ea: f64, soil: &SoilParameters, day_of_year: u32) -> f64 {
    let ra = extraterrestrial_radiation(soil.latitude, day_of_year);
    let rso = (0.75 + 2e-5 * soil.elevation) * ra;
    let relative = if rso > 0.0 {
        (w.srad / rso).min(1.0)
    } else {
        1.0
    };
    let tmax_k = w.tmax + 273.16;
    let tmin_k = w.tmin + 273.16;
    let rnl = STEFAN_BOLTZMANN
        * 0.5
        * (tmax_k.powi(4) + tmin_k.powi(4))
        * (0.34 - 0.14 * ea.sqrt())
        * (1.35 * relative - 0.35);
    (1.0 - ALBEDO) * w.srad - rnl
}

/// Reference evapotranspiration (mm/day), floored at zero.
///
/// Mean temperature is the TMAX/TMIN midpoint, actual vapour pressure comes
/// from VAP (hPa), and soil heat flux is taken as zero.
pub fn penman_monteith_et0(w: &WeatherRecord, soil: &SoilParameters) -> Result<f64> {
    let t = 0.5 * (w.tmax + w.tmin);
    let es = 0.5 * (saturation_vapour_pressure(w.tmax) + saturation_vapour_pressure(w.tmin));
    let ea = w.vap / 10.0;
    let slope = 4098.0 * saturation_vapour_pressure(t) / (t + 237.3).powi(2);
    let gamma = psychrometric_constant(soil.elevation);
    let rn = net_radiation(w, ea, soil, w.date.ordinal());
    let u2 = w.wind;

    let numerator = 0.408 * slope * rn + gamma * (900.0 / (t + 273.0)) * u2 * (es - ea);
    let denominator = slope + gamma * (1.0 + 0.34 * u2);
    let et0 = numerator / denominator;
    if !et0.is_finite() {
        return Err(Error::NonFinite(format!(
            "reference evapotranspiration on {}",
            w.date
        )));
    }
    Ok(et0.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::water_balance::tests::test_soil;
    use chrono::NaiveDate;

    fn day(month: u32, dom: u32) -> WeatherRecord {
        WeatherRecord {
            date: NaiveDate::from_ymd_opt(2000, month, dom).unwrap(),
            tmax: 34.0,
            tmin: 16.0,
            tavg: 25.0,
            rain: 0.0,
            srad: 27.0,
            co2: 370.0,
            vap: 9.0,
            wind: 4.0,
        }
    }

    #[test]
    fn wind_raises_demand_when_air_is_dry() {
        let soil = test_soil();
        let windy = day(7, 15);
        let calm = WeatherRecord { wind: 0.0, ..windy };
        assert!(
            penman_monteith_et0(&windy, &soil).unwrap()
                > penman_monteith_et0(&calm, &soil).unwrap()
        );
    }

    #[test]
    fn saturated_dark_day_clamps_to_zero() {
        let soil = test_soil();
        // ea > es and no incoming radiation: both terms negative
        let w = WeatherRecord {
            tmax: 5.0,
            tmin: 1.0,
            tavg: 3.0,
            srad: 0.0,
            vap: 12.0,
            wind: 2.0,
            ..day(12, 20)
        };
        assert_eq!(penman_monteith_et0(&w, &soil).unwrap(), 0.0);
    }

    #[test]
    fn polar_latitudes_stay_finite() {
        let mut soil = test_soil();
        for lat in [-89.0, 75.0, 89.9] {
            soil.latitude = lat;
            for m in 1..=12 {
                let v = penman_monteith_et0(&day(m, 21), &soil).unwrap();
                assert!(v.is_finite() && v >= 0.0);
            }
        }
    }
}
