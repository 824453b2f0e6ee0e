#![allow(dead_code)]

use std::path::PathBuf;

use chrono::NaiveDate;
use croprl::crop::CropParameters;
use croprl::water_balance::SoilParameters;
use croprl::weather::WeatherRecord;
use croprl::Scenario;
use rand::Rng;

pub fn scenario_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/benton_potato")
}

pub fn shipped_scenario() -> Scenario {
    Scenario::load(scenario_dir().join("scenario.toml")).expect("shipped scenario loads")
}

pub fn zero_noise_scenario() -> Scenario {
    Scenario::load(scenario_dir().join("zero_noise.toml")).expect("zero-noise scenario loads")
}

pub fn random_crop<R: Rng>(rng: &mut R) -> CropParameters {
    let t_base = rng.random_range(0.0..10.0);
    let t_heat = rng.random_range(28.0..38.0);
    CropParameters {
        t_sum: rng.random_range(800.0..3500.0),
        harvest_index: rng.random_range(0.1..1.0),
        i50a: rng.random_range(100.0..800.0),
        i50b: rng.random_range(50.0..600.0),
        t_base,
        t_opt: t_base + rng.random_range(5.0..25.0),
        rue: rng.random_range(0.5..2.5),
        i50max_h: rng.random_range(0.0..150.0),
        i50max_w: rng.random_range(0.0..50.0),
        t_heat,
        t_extreme: t_heat + rng.random_range(3.0..15.0),
        s_co2: rng.random_range(0.0..0.002),
        s_water: rng.random_range(0.0..1.5),
        f_solar_max: 0.95,
    }
}

pub fn random_soil<R: Rng>(rng: &mut R) -> SoilParameters {
    SoilParameters {
        awc: rng.random_range(0.02..0.3),
        rcn: rng.random_range(30.0..100.0),
        ddc: rng.random_range(0.0..1.0),
        rzd: rng.random_range(100.0..2000.0),
        wuc: rng.random_range(0.01..0.3),
        latitude: rng.random_range(-66.0..66.0),
        elevation: rng.random_range(0.0..3000.0),
    }
}

pub fn random_weather<R: Rng>(rng: &mut R) -> WeatherRecord {
    let tmin = rng.random_range(-15.0..30.0);
    let tmax = tmin + rng.random_range(0.0..25.0);
    let ordinal = rng.random_range(1..=365);
    let rain = if rng.random_bool(0.6) {
        0.0
    } else {
        rng.random_range(0.0..150.0)
    };
    WeatherRecord {
        date: NaiveDate::from_yo_opt(2001, ordinal).unwrap(),
        tmax,
        tmin,
        tavg: 0.5 * (tmax + tmin),
        rain,
        srad: rng.random_range(0.0..35.0),
        co2: rng.random_range(250.0..900.0),
        vap: rng.random_range(0.0..40.0),
        wind: rng.random_range(0.0..15.0),
    }
}
