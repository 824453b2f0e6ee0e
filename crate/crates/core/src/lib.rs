//! Daily crop growth and soil water simulation exposed as an
//! irrigation-control reinforcement-learning environment, with a
//! self-contained PPO trainer and scripted baselines.
//!
//! The model stack, bottom up:
//!
//! - [`crop`]: phenology, canopy interception, stress factors and biomass.
//! - [`water_balance`] and [`et0`]: root-zone bucket, ARID drought index and
//!   Penman-Monteith reference evapotranspiration.
//! - [`weather`]: weather CSV ingestion and the Gaussian observation noise.
//! - [`env`]: the reset/step environment and its reward.
//! - [`rl`]: PPO with a small MLP Gaussian policy.

pub mod crop;
pub mod env;
pub mod episode;
pub mod error;
pub mod et0;
pub mod par;
mod params;
pub mod policy;
pub mod rl;
pub mod scenario;
pub mod water_balance;
pub mod weather;

pub use env::{CropEnv, EnvConfig, Observation, StepInfo, StepResult};
pub use error::{Error, Result};
pub use par::Execution;
pub use policy::{ConstantPolicy, Policy, PolicySpec};
pub use scenario::Scenario;
