//! Daily weather series and the Gaussian observation-noise model.
//!
//! Weather CSV files carry one header row with the columns `DATE` (ISO-8601),
//! `TMAX`, `TMIN`, `RAIN`, `SRAD`, `CO2`, `VAP`, `WIND` and optionally `TAVG`.
//! Column order is free. When `TAVG` is absent it is filled with the
//! midpoint of `TMAX` and `TMIN`.

use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use chrono::NaiveDate;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ensure;

/// One day of weather.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeatherRecord {
    pub date: NaiveDate,
    /// °C
    pub tmax: f64,
    /// °C
    pub tmin: f64,
    /// °C
    pub tavg: f64,
    /// mm
    pub rain: f64,
    /// MJ/m²
    pub srad: f64,
    /// ppm
    pub co2: f64,
    /// hPa
    pub vap: f64,
    /// m/s at 2 m
    pub wind: f64,
}

impl WeatherRecord {
    /// The eight numeric fields in observation order.
    pub fn values(&self) -> [f64; 8] {
        [
            self.tmax, self.tmin, self.tavg, self.rain, self.srad, self.co2, self.vap, self.wind,
        ]
    }
}

/// A gap-free, date-ascending weather series.
#[derive(Debug, Clone, PartialEq)]
pub struct WeatherSeries {
    records: Vec<WeatherRecord>,
    tavg_filled: bool,
}

impl WeatherSeries {
    pub fn from_records(records: Vec<WeatherRecord>) -> Result<Self> {
        check_dates(&records)?;
        Ok(Self {
            records,
            tavg_filled: false,
        })
    }

    pub fn records(&self) -> &[WeatherRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<&WeatherRecord> {
        self.records.get(index)
    }

    /// True when the source had no `TAVG` column and the midpoint was used.
    pub fn tavg_filled(&self) -> bool {
        self.tavg_filled
    }

    pub fn index_of(&self, date: NaiveDate) -> Option<usize> {
        let first = self.records.first()?.date;
        let offset = usize::try_from((date - first).num_days()).ok()?;
        (offset < self.records.len()).then_some(offset)
    }
}

const COLUMNS: [&str; 8] = ["TMAX", "TMIN", "TAVG", "RAIN", "SRAD", "CO2", "VAP", "WIND"];

pub fn load_weather_csv(path: impl AsRef<Path>) -> Result<WeatherSeries> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let series = read_weather_csv(file)?;
    if series.tavg_filled {
        log::info!("{}: no TAVG column, using (TMAX+TMIN)/2", path.display());
    }
    Ok(series)
}

/// Parses weather CSV from any reader. Row numbers in errors are 1-based
/// data rows (the header is not counted).
pub fn read_weather_csv(reader: impl Read) -> Result<WeatherSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let index: HashMap<String, usize> = headers
        .iter()
        .enumerate()
        .map(|(i, h)| (h.to_ascii_uppercase(), i))
        .collect();
    let column = |name: &str| -> Result<usize> {
        index
            .get(name)
            .copied()
            .ok_or_else(|| Error::Weather(format!("missing column {name}")))
    };
    let date_col = column("DATE")?;
    let has_tavg = index.contains_key("TAVG");
    let mut cols = [0usize; 8];
    for (slot, name) in cols.iter_mut().zip(COLUMNS) {
        if name == "TAVG" && !has_tavg {
            continue;
        }
        *slot = column(name)?;
    }

    let mut records = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row_no = i + 1;
        let row = row?;
        let raw_date = row.get(date_col).unwrap_or("");
        let date =
            NaiveDate::parse_from_str(raw_date, "%Y-%m-%d").map_err(|_| Error::WeatherRow {
                row: row_no,
                column: "DATE".into(),
                reason: format!("`{raw_date}` is not an ISO-8601 date"),
            })?;
        let mut v = [0.0; 8];
        for (k, name) in COLUMNS.iter().enumerate() {
            if *name == "TAVG" && !has_tavg {
                continue;
            }
            let raw = row.get(cols[k]).unwrap_or("");
            let value: f64 = raw.parse().map_err(|_| Error::WeatherRow {
                row: row_no,
                column: (*name).into(),
                reason: format!("`{raw}` is not a number"),
            })?;
            if !value.is_finite() {
                return Err(Error::WeatherRow {
                    row: row_no,
                    column: (*name).into(),
                    reason: "value is not finite".into(),
                });
            }
            v[k] = value;
        }
        if !has_tavg {
            v[2] = 0.5 * (v[0] + v[1]);
        }
        let record = WeatherRecord {
            date,
            tmax: v[0],
            tmin: v[1],
            tavg: v[2],
            rain: v[3],
            srad: v[4],
            co2: v[5],
            vap: v[6],
            wind: v[7],
        };
        validate_record(&record).map_err(|e| match e {
            Error::Param { key, reason } => Error::WeatherRow {
                row: row_no,
                column: key,
                reason,
            },
            other => other,
        })?;
        records.push(record);
    }
    if records.is_empty() {
        return Err(Error::Weather("no data rows".into()));
    }
    check_dates(&records)?;
    Ok(WeatherSeries {
        records,
        tavg_filled: !has_tavg,
    })
}

pub fn validate_record(w: &WeatherRecord) -> Result<()> {
    ensure(w.tmin <= w.tmax, "TMIN", "exceeds TMAX")?;
    ensure(
        w.tmin <= w.tavg && w.tavg <= w.tmax,
        "TAVG",
        "outside [TMIN, TMAX]",
    )?;
    ensure(w.rain >= 0.0, "RAIN", "must be >= 0")?;
    ensure(w.srad >= 0.0, "SRAD", "must be >= 0")?;
    ensure(w.co2 > 0.0, "CO2", "must be > 0")?;
    ensure(w.vap >= 0.0, "VAP", "must be >= 0")?;
    ensure(w.wind >= 0.0, "WIND", "must be >= 0")?;
    Ok(())
}

fn check_dates(records: &[WeatherRecord]) -> Result<()> {
    for (i, pair) in records.windows(2).enumerate() {
        let step = (pair[1].date - pair[0].date).num_days();
        if step != 1 {
            let what = if step <= 0 { "not ascending" } else { "gap" };
            return Err(Error::WeatherRow {
                row: i + 2,
                column: "DATE".into(),
                reason: format!("{what}: {} follows {}", pair[1].date, pair[0].date),
            });
        }
    }
    Ok(())
}

/// Standard deviations of the observation noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSpec {
    /// g/m²
    pub biomass: f64,
    /// mm
    pub paw: f64,
    pub tmax: f64,
    pub tmin: f64,
    pub tavg: f64,
    pub rain: f64,
    pub srad: f64,
    pub co2: f64,
    pub vap: f64,
    pub wind: f64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            biomass: 1.0,
            paw: 1.0,
            tmax: 3.0,
            tmin: 2.0,
            tavg: 2.0,
            rain: 3.0,
            srad: 1.0,
            co2: 1.0,
            vap: 1.0,
            wind: 6.0,
        }
    }
}

impl NoiseSpec {
    pub fn zero() -> Self {
        Self {
            biomass: 0.0,
            paw: 0.0,
            tmax: 0.0,
            tmin: 0.0,
            tavg: 0.0,
            rain: 0.0,
            srad: 0.0,
            co2: 0.0,
            vap: 0.0,
            wind: 0.0,
        }
    }

    fn weather_stds(&self) -> [f64; 8] {
        [
            self.tmax, self.tmin, self.tavg, self.rain, self.srad, self.co2, self.vap, self.wind,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        let all = [("biomass", self.biomass), ("paw", self.paw)]
            .into_iter()
            .chain(
                ["tmax", "tmin", "tavg", "rain", "srad", "co2", "vap", "wind"]
                    .into_iter()
                    .zip(self.weather_stds()),
            );
        for (key, std) in all {
            ensure(std >= 0.0 && std.is_finite(), key, "noise std must be >= 0")?;
        }
        Ok(())
    }
}

/// `value + std * z` with `z ~ N(0, 1)`. A zero std returns `value` without
/// consuming randomness.
pub fn noisy_reading<R: Rng + ?Sized>(value: f64, std: f64, rng: &mut R) -> f64 {
    if std == 0.0 {
        return value;
    }
    let z: f64 = rng.sample(StandardNormal);
    value + std * z
}

/// A noisy reading of `tomorrow`. Quantities that cannot be negative are
/// floored at zero; the temperature ordering is left as drawn.
pub fn forecast<R: Rng + ?Sized>(
    tomorrow: &WeatherRecord,
    spec: &NoiseSpec,
    rng: &mut R,
) -> WeatherRecord {
    let stds = spec.weather_stds();
    let mut v = tomorrow.values();
    for (value, std) in v.iter_mut().zip(stds) {
        *value = noisy_reading(*value, std, rng);
    }
    WeatherRecord {
        date: tomorrow.date,
        tmax: v[0],
        tmin: v[1],
        tavg: v[2],
        rain: v[3].max(0.0),
        srad: v[4].max(0.0),
        co2: v[5].max(0.0),
        vap: v[6].max(0.0),
        wind: v[7].max(0.0),
    }
}
