use std::path::PathBuf;
use std::str::FromStr;

use crate::env::{Observation, ACTION_HIGH, ACTION_LOW};
use crate::error::{Error, Result};

/// Anything that maps an observation to an irrigation amount (mm).
pub trait Policy {
    fn act(&mut self, obs: &Observation) -> Result<f64>;
}

/// Applies the same irrigation every day.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantPolicy {
    level: f64,
}

impl ConstantPolicy {
    pub fn new(level: f64) -> Result<Self> {
        if !(ACTION_LOW..=ACTION_HIGH).contains(&level) {
            return Err(Error::param(
                "constant",
                format!("level {level} outside [{ACTION_LOW}, {ACTION_HIGH}]"),
            ));
        }
        Ok(Self { level })
    }

    pub fn level(&self) -> f64 {
        self.level
    }
}

impl Policy for ConstantPolicy {
    fn act(&mut self, _obs: &Observation) -> Result<f64> {
        Ok(self.level)
    }
}

/// Textual policy selector: `zero`, `constant:<mm>` or `checkpoint:<path>`.
#[derive(Debug, Clone, PartialEq)]
pub enum PolicySpec {
    Constant(f64),
    Checkpoint(PathBuf),
}

impl FromStr for PolicySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "zero" {
            return Ok(PolicySpec::Constant(0.0));
        }
        if let Some(level) = s.strip_prefix("constant:") {
            let level: f64 = level
                .trim()
                .parse()
                .map_err(|_| Error::PolicySpec(s.to_string()))?;
            ConstantPolicy::new(level)?;
            return Ok(PolicySpec::Constant(level));
        }
        if let Some(path) = s.strip_prefix("checkpoint:") {
            if !path.is_empty() {
                return Ok(PolicySpec::Checkpoint(PathBuf::from(path)));
            }
        }
        Err(Error::PolicySpec(s.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_specs() {
        assert_eq!(
            "zero".parse::<PolicySpec>().unwrap(),
            PolicySpec::Constant(0.0)
        );
        assert_eq!(
            "constant:10".parse::<PolicySpec>().unwrap(),
            PolicySpec::Constant(10.0)
        );
        assert_eq!(
            "checkpoint:a/b.json".parse::<PolicySpec>().unwrap(),
            PolicySpec::Checkpoint("a/b.json".into())
        );
        assert!("constant:abc".parse::<PolicySpec>().is_err());
        assert!("constant:101".parse::<PolicySpec>().is_err());
        assert!("random".parse::<PolicySpec>().is_err());
        assert!("checkpoint:".parse::<PolicySpec>().is_err());
    }

    #[test]
    fn constant_ignores_observation() {
        let mut p = ConstantPolicy::new(10.0).unwrap();
        let obs = Observation([3.0; crate::env::OBS_DIM]);
        assert_eq!(p.act(&obs).unwrap(), 10.0);
    }
}
