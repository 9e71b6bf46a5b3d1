use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Result, WeatherError};

/// Node positions closer than this to a grid line, in cell units, sit on it.
const SNAP: f64 = 1e-9;

/// Geographic bounds in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub lon_min: f64,
    pub lat_min: f64,
    pub lon_max: f64,
    pub lat_max: f64,
}

impl BBox {
    pub fn new(lon_min: f64, lat_min: f64, lon_max: f64, lat_max: f64) -> Result<BBox> {
        let b = BBox { lon_min, lat_min, lon_max, lat_max };
        let finite = [lon_min, lat_min, lon_max, lat_max].iter().all(|v| v.is_finite());
        if !finite || lon_min >= lon_max || lat_min >= lat_max {
            return Err(WeatherError::InvalidBBox(b.to_string()));
        }
        Ok(b)
    }

    pub fn contains_point(&self, lon: f64, lat: f64) -> bool {
        (self.lon_min..=self.lon_max).contains(&lon) && (self.lat_min..=self.lat_max).contains(&lat)
    }

    pub fn contains(&self, other: &BBox) -> bool {
        self.contains_point(other.lon_min, other.lat_min) && self.contains_point(other.lon_max, other.lat_max)
    }

    /// Stable text used in cache keys.
    pub fn key(&self) -> String {
        self.to_string()
    }
}

/// `lon_min,lat_min,lon_max,lat_max`
impl fmt::Display for BBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{},{}", self.lon_min, self.lat_min, self.lon_max, self.lat_max)
    }
}

impl FromStr for BBox {
    type Err = WeatherError;

    fn from_str(s: &str) -> Result<BBox> {
        let parts: Vec<f64> = s
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|p| !p.is_empty())
            .map(|p| p.parse().map_err(|_| WeatherError::InvalidBBox(s.to_string())))
            .collect::<Result<_>>()?;
        match parts[..] {
            [a, b, c, d] => BBox::new(a, b, c, d),
            _ => Err(WeatherError::InvalidBBox(s.to_string())),
        }
    }
}

/// Wind at 10 m on a regular lon/lat grid over several forecast times.
///
/// `u` and `v` are `[time][lat][lon]` row-major; row 0 is `lat_min` and
/// column 0 is `lon_min`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindField {
    pub source: String,
    pub issued_at: DateTime<Utc>,
    pub bbox: BBox,
    pub nx: usize,
    pub ny: usize,
    pub times: Vec<DateTime<Utc>>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

/// Speed and meteorological direction of one wind vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedDirection {
    pub speed: f64,
    /// Degrees clockwise from north the wind blows from; 0 when calm.
    pub direction: f64,
    pub calm: bool,
}

/// `speed = |(u, v)|`; direction is where the wind comes from.
pub fn speed_direction(u: f64, v: f64) -> SpeedDirection {
    let speed = u.hypot(v);
    if speed == 0.0 {
        return SpeedDirection { speed, direction: 0.0, calm: true };
    }
    let direction = (-u).atan2(-v).to_degrees().rem_euclid(360.0);
    SpeedDirection { speed, direction: if direction >= 360.0 { 0.0 } else { direction + 0.0 }, calm: false }
}

impl WindField {
    pub fn new(
        source: impl Into<String>,
        issued_at: DateTime<Utc>,
        bbox: BBox,
        nx: usize,
        ny: usize,
        times: Vec<DateTime<Utc>>,
        u: Vec<f64>,
        v: Vec<f64>,
    ) -> Result<WindField> {
        let field = WindField { source: source.into(), issued_at, bbox, nx, ny, times, u, v };
        field.validate()?;
        Ok(field)
    }

    /// Uniform `(u, v)` everywhere.
    pub fn uniform(bbox: BBox, times: Vec<DateTime<Utc>>, u: f64, v: f64) -> Result<WindField> {
        let n = times.len() * 4;
        let issued = times.first().copied().unwrap_or_default();
        WindField::new("uniform", issued, bbox, 2, 2, times, vec![u; n], vec![v; n])
    }

    pub fn validate(&self) -> Result<()> {
        let shape = |m: String| Err(WeatherError::Shape(m));
        if self.nx < 2 || self.ny < 2 {
            return shape(format!("grid {}x{} needs at least 2 nodes per axis", self.nx, self.ny));
        }
        if self.times.is_empty() {
            return shape("no forecast times".into());
        }
        if let Some(w) = self.times.windows(2).find(|w| w[1] <= w[0]) {
            return shape(format!("times not strictly increasing at {}", w[1]));
        }
        let want = self.times.len() * self.ny * self.nx;
        if self.u.len() != want || self.v.len() != want {
            return shape(format!("expected {want} values per component, got u {} v {}", self.u.len(), self.v.len()));
        }
        BBox::new(self.bbox.lon_min, self.bbox.lat_min, self.bbox.lon_max, self.bbox.lat_max)?;
        Ok(())
    }

    pub fn lon(&self, i: usize) -> f64 {
        node_coord(self.bbox.lon_min, self.bbox.lon_max, self.nx, i)
    }

    pub fn lat(&self, j: usize) -> f64 {
        node_coord(self.bbox.lat_min, self.bbox.lat_max, self.ny, j)
    }

    pub fn index(&self, t: usize, j: usize, i: usize) -> usize {
        (t * self.ny + j) * self.nx + i
    }

    /// Stored vector at a node.
    pub fn node(&self, t: usize, j: usize, i: usize) -> (f64, f64) {
        let k = self.index(t, j, i);
        (self.u[k], self.v[k])
    }

    /// Bilinear in space, linear in time.
    pub fn sample(&self, lon: f64, lat: f64, at: DateTime<Utc>) -> Result<(f64, f64)> {
        let out = || WeatherError::OutOfDomain { lon, lat, at };
        let (first, last) = (self.times[0], self.times[self.times.len() - 1]);
        if !self.bbox.contains_point(lon, lat) || at < first || at > last {
            return Err(out());
        }
        let (i, fx) = cell(self.bbox.lon_min, self.bbox.lon_max, self.nx, lon);
        let (j, fy) = cell(self.bbox.lat_min, self.bbox.lat_max, self.ny, lat);
        let t = self.times.partition_point(|&x| x <= at).saturating_sub(1);
        let (t, ft) = if t + 1 >= self.times.len() {
            (t, 0.0)
        } else {
            let span = (self.times[t + 1] - self.times[t]).num_milliseconds() as f64;
            (t, (at - self.times[t]).num_milliseconds() as f64 / span)
        };
        let at_time = |t: usize| {
            let mut acc = (0.0, 0.0);
            for (dj, wy) in [(0, 1.0 - fy), (1, fy)] {
                for (di, wx) in [(0, 1.0 - fx), (1, fx)] {
                    let w = wx * wy;
                    if w != 0.0 {
                        let (u, v) = self.node(t, j + dj, i + di);
                        acc.0 += w * u;
                        acc.1 += w * v;
                    }
                }
            }
            acc
        };
        let a = at_time(t);
        if ft == 0.0 {
            return Ok(a);
        }
        let b = at_time(t + 1);
        Ok((a.0 * (1.0 - ft) + b.0 * ft, a.1 * (1.0 - ft) + b.1 * ft))
    }

    /// Keeps forecast times up to `hours` after the first one.
    pub fn truncate_hours(&self, hours: u32) -> WindField {
        let end = self.times[0] + chrono::TimeDelta::hours(hours as i64);
        let keep = self.times.partition_point(|&t| t <= end).max(1);
        let per = self.nx * self.ny;
        WindField {
            times: self.times[..keep].to_vec(),
            u: self.u[..keep * per].to_vec(),
            v: self.v[..keep * per].to_vec(),
            ..self.clone()
        }
    }

    /// Largest node speed.
    pub fn max_speed(&self) -> f64 {
        self.u.iter().zip(&self.v).map(|(u, v)| u.hypot(*v)).fold(0.0, f64::max)
    }
}

fn node_coord(min: f64, max: f64, n: usize, i: usize) -> f64 {
    if i + 1 == n {
        max
    } else {
        min + (max - min) * i as f64 / (n - 1) as f64
    }
}

/// Lower node index and fractional offset inside the cell.
fn cell(min: f64, max: f64, n: usize, x: f64) -> (usize, f64) {
    let pos = (x - min) / (max - min) * (n - 1) as f64;
    let nearest = pos.round();
    let pos = if (pos - nearest).abs() < SNAP { nearest } else { pos };
    let i = (pos.floor() as usize).min(n - 2);
    (i, (pos - i as f64).clamp(0.0, 1.0))
}
