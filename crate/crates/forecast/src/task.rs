use std::fmt;
use std::str::FromStr;

use chrono::TimeDelta;
use serde::{Deserialize, Serialize};
use twin_core::{Catalog, ParamId};

use crate::error::{ForecastError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Timescale {
    Seconds,
    Minutes,
    Hours,
}

impl Timescale {
    pub const ALL: [Timescale; 3] = [Timescale::Seconds, Timescale::Minutes, Timescale::Hours];

    pub fn step_seconds(self) -> i64 {
        match self {
            Timescale::Seconds => 1,
            Timescale::Minutes => 60,
            Timescale::Hours => 3600,
        }
    }

    pub fn step(self) -> TimeDelta {
        TimeDelta::seconds(self.step_seconds())
    }
}

impl fmt::Display for Timescale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Timescale::Seconds => "seconds",
            Timescale::Minutes => "minutes",
            Timescale::Hours => "hours",
        })
    }
}

impl FromStr for Timescale {
    type Err = ForecastError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "seconds" | "s" => Ok(Timescale::Seconds),
            "minutes" | "min" => Ok(Timescale::Minutes),
            "hours" | "h" => Ok(Timescale::Hours),
            other => Err(ForecastError::InvalidConfig(format!("unknown timescale `{other}`"))),
        }
    }
}

/// Input length, horizon and parameter count of a forecasting window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowShape {
    pub m: usize,
    pub k: usize,
    pub l: usize,
}

impl WindowShape {
    pub fn new(m: usize, k: usize, l: usize) -> Result<Self> {
        if m == 0 || k == 0 || l == 0 {
            return Err(ForecastError::InvalidConfig(format!("m, k and l must be positive, got {m}, {k}, {l}")));
        }
        Ok(WindowShape { m, k, l })
    }

    pub fn input_width(&self) -> usize {
        self.m * self.l
    }

    pub fn output_width(&self) -> usize {
        self.k * self.l
    }
}

impl fmt::Display for WindowShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "m={} k={} l={}", self.m, self.k, self.l)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForecastTask {
    pub timescale: Timescale,
    pub m: usize,
    pub k: usize,
    pub parameters: Vec<String>,
}

impl ForecastTask {
    pub fn new(timescale: Timescale, m: usize, k: usize, parameters: Vec<String>) -> Result<Self> {
        WindowShape::new(m, k, parameters.len())?;
        Ok(ForecastTask { timescale, m, k, parameters })
    }

    /// 30 steps in, 10 out, over the catalog's forecast set.
    pub fn standard(timescale: Timescale, catalog: &Catalog) -> Self {
        let parameters = catalog.forecast_set().into_iter().map(String::from).collect();
        ForecastTask { timescale, m: 30, k: 10, parameters }
    }

    pub fn l(&self) -> usize {
        self.parameters.len()
    }

    pub fn shape(&self) -> WindowShape {
        WindowShape { m: self.m, k: self.k, l: self.l() }
    }

    pub fn resolve(&self, catalog: &Catalog) -> Result<Vec<ParamId>> {
        let names: Vec<&str> = self.parameters.iter().map(String::as_str).collect();
        Ok(catalog.resolve(&names)?)
    }
}

impl fmt::Display for ForecastTask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} m={} k={} l={}", self.timescale, self.m, self.k, self.l())
    }
}
