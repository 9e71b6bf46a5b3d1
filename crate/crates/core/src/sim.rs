//! Seeded synthetic telemetry for a 2.3 MW floating turbine.
//!
//! The signals are plausible rather than faithful:
//!
//! * wind speed is a slow mean-reverting (Ornstein-Uhlenbeck) process plus a
//!   fast gust process, both advanced with their exact discretization so any
//!   step length gives the same statistics;
//! * the sea surface is a deterministic sum of sinusoids whose amplitude is
//!   modulated by a slowly varying sea-state factor;
//! * each tower degree of freedom is the steady-state response of a damped
//!   oscillator to those sinusoids, plus a thrust-driven offset for surge and
//!   pitch;
//! * power follows a cubic power curve, yaw follows low-pass wind direction,
//!   and energy accumulates the emitted active power.
//!
//! All stochastic terms draw from one ChaCha generator seeded by
//! [`SimConfig::seed`]; fault injection uses a separate stream of the same seed
//! so the physics of a faulty run match the clean run record for record.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;
use std::sync::Arc;

use chrono::{DateTime, TimeDelta, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::catalog::{Catalog, LogicalNode, ParamId, ParamKind};
use crate::error::{Error, Result};
use crate::record::{Source, TelemetryRecord};
use crate::time::{format_iso, parse_iso};

#[derive(Debug, Clone, PartialEq)]
pub struct WindProcess {
    /// Long-run mean wind speed, m/s.
    pub mean: f64,
    /// Mean reversion rate of the slow component, 1/s.
    pub reversion_rate: f64,
    /// Stationary standard deviation of the slow component, m/s.
    pub volatility: f64,
    pub gust_reversion_rate: f64,
    pub gust_volatility: f64,
    /// Mean direction the wind comes from, degrees.
    pub direction_mean: f64,
    /// Stationary standard deviation of the direction, degrees.
    pub direction_volatility: f64,
    pub direction_reversion_rate: f64,
}

impl Default for WindProcess {
    fn default() -> Self {
        WindProcess {
            mean: 10.0,
            reversion_rate: 1.0 / (12.0 * 3600.0),
            volatility: 3.5,
            gust_reversion_rate: 1.0 / 15.0,
            gust_volatility: 0.6,
            direction_mean: 225.0,
            direction_volatility: 20.0,
            direction_reversion_rate: 1.0 / (6.0 * 3600.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveComponent {
    /// m
    pub amplitude: f64,
    /// s
    pub period: f64,
    /// Propagation direction, rad.
    pub direction: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FaultRates {
    /// Probability of dropping a record.
    pub gap: f64,
    /// Probability of emitting a record twice.
    pub duplicate: f64,
    /// Probability of replacing a value with an unphysical one.
    pub spike: f64,
    /// Probability of delivering a record after the next instant.
    pub reorder: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub seed: u64,
    pub start: DateTime<Utc>,
    /// kW
    pub rated_power: f64,
    pub cut_in: f64,
    pub rated_speed: f64,
    pub cut_out: f64,
    pub wind: WindProcess,
    pub waves: Vec<WaveComponent>,
    /// Emission interval per logical node, whole seconds in [1, 4].
    pub cadence: BTreeMap<LogicalNode, u32>,
    pub faults: FaultRates,
}

impl Default for SimConfig {
    fn default() -> Self {
        let cadence = [
            (LogicalNode::Wmet, 2),
            (LogicalNode::Wrot, 1),
            (LogicalNode::Wyaw, 2),
            (LogicalNode::Wtow, 1),
            (LogicalNode::Wtrm, 4),
            (LogicalNode::Wtur, 1),
            (LogicalNode::Wgen, 2),
            (LogicalNode::Wcnv, 2),
            (LogicalNode::Wtrf, 3),
            (LogicalNode::Wstr, 4),
            (LogicalNode::Wppd, 4),
            (LogicalNode::Wavl, 4),
        ]
        .into_iter()
        .collect();
        SimConfig {
            seed: 42,
            start: parse_iso("2022-02-01T00:00:00Z").expect("valid literal"),
            rated_power: 2300.0,
            cut_in: 4.0,
            rated_speed: 13.0,
            cut_out: 25.0,
            wind: WindProcess::default(),
            waves: vec![
                WaveComponent { amplitude: 1.2, period: 9.0, direction: 0.6 },
                WaveComponent { amplitude: 0.7, period: 12.5, direction: 0.9 },
                WaveComponent { amplitude: 0.35, period: 6.0, direction: 0.3 },
            ],
            cadence,
            faults: FaultRates::default(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.cut_in < self.rated_speed && self.rated_speed < self.cut_out) {
            return bad(format!(
                "need cut_in < rated_speed < cut_out, got {} / {} / {}",
                self.cut_in, self.rated_speed, self.cut_out
            ));
        }
        if !(self.cut_in > 0.0) || !(self.rated_power > 0.0) {
            return bad("cut_in and rated_power must be positive".into());
        }
        for node in LogicalNode::ALL {
            match self.cadence.get(&node) {
                Some(c) if (1..=4).contains(c) => {}
                Some(c) => return bad(format!("cadence of {node} is {c} s, outside [1, 4]")),
                None => return bad(format!("no cadence configured for {node}")),
            }
        }
        let w = &self.wind;
        for (name, v) in [
            ("wind.mean", w.mean),
            ("wind.volatility", w.volatility),
            ("wind.gust_volatility", w.gust_volatility),
            ("wind.direction_volatility", w.direction_volatility),
        ] {
            if !(v >= 0.0) {
                return bad(format!("{name} must be non-negative"));
            }
        }
        for (name, v) in [
            ("wind.reversion_rate", w.reversion_rate),
            ("wind.gust_reversion_rate", w.gust_reversion_rate),
            ("wind.direction_reversion_rate", w.direction_reversion_rate),
        ] {
            if !(v > 0.0) {
                return bad(format!("{name} must be positive"));
            }
        }
        for wave in &self.waves {
            if !(wave.period > 0.0) || !(wave.amplitude >= 0.0) {
                return bad(format!("bad wave component {wave:?}"));
            }
        }
        // Heave and wave elevation are bounded by the amplitude sum.
        if self.waves.iter().map(|w| w.amplitude).sum::<f64>() > 15.0 {
            return bad("wave amplitudes sum above 15 m".into());
        }
        let f = &self.faults;
        for (name, p) in [("gap", f.gap), ("duplicate", f.duplicate), ("spike", f.spike), ("reorder", f.reorder)] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("fault.{name} must be a probability"));
            }
        }
        Ok(())
    }

    /// Parses a `key = value` scenario, starting from the defaults. A `wave`
    /// line holds `amplitude period direction`; the first one replaces the
    /// default spectrum and later ones append.
    pub fn from_scenario(text: &str) -> Result<SimConfig> {
        let mut cfg = SimConfig::default();
        let mut waves_seen = false;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |m: String| Error::InvalidConfig(format!("line {}: {m}", lineno + 1));
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| bad(format!("expected key = value, got `{line}`")))?;
            let num = || value.parse::<f64>().map_err(|_| bad(format!("`{value}` is not a number")));
            match key {
                "seed" => cfg.seed = value.parse().map_err(|_| bad(format!("bad seed `{value}`")))?,
                "start" => cfg.start = parse_iso(value).ok_or_else(|| bad(format!("bad start `{value}`")))?,
                "rated_power" => cfg.rated_power = num()?,
                "cut_in" => cfg.cut_in = num()?,
                "rated_speed" => cfg.rated_speed = num()?,
                "cut_out" => cfg.cut_out = num()?,
                "wind.mean" => cfg.wind.mean = num()?,
                "wind.reversion_rate" => cfg.wind.reversion_rate = num()?,
                "wind.volatility" => cfg.wind.volatility = num()?,
                "wind.gust_reversion_rate" => cfg.wind.gust_reversion_rate = num()?,
                "wind.gust_volatility" => cfg.wind.gust_volatility = num()?,
                "wind.direction_mean" => cfg.wind.direction_mean = num()?,
                "wind.direction_volatility" => cfg.wind.direction_volatility = num()?,
                "wind.direction_reversion_rate" => cfg.wind.direction_reversion_rate = num()?,
                "wave" => {
                    let parts: Vec<f64> = value
                        .split_whitespace()
                        .map(str::parse)
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| bad(format!("bad wave `{value}`")))?;
                    let [amplitude, period, direction] = parts[..] else {
                        return Err(bad("wave needs amplitude, period and direction".into()));
                    };
                    if !waves_seen {
                        cfg.waves.clear();
                        waves_seen = true;
                    }
                    cfg.waves.push(WaveComponent { amplitude, period, direction });
                }
                "fault.gap" => cfg.faults.gap = num()?,
                "fault.duplicate" => cfg.faults.duplicate = num()?,
                "fault.spike" => cfg.faults.spike = num()?,
                "fault.reorder" => cfg.faults.reorder = num()?,
                k if k.starts_with("cadence.") => {
                    let node: LogicalNode = k["cadence.".len()..].parse().map_err(bad)?;
                    let secs: u32 = value.parse().map_err(|_| bad(format!("bad cadence `{value}`")))?;
                    cfg.cadence.insert(node, secs);
                }
                other => return Err(bad(format!("unknown key `{other}`"))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_scenario(&self) -> String {
        let mut s = String::new();
        let w = &self.wind;
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "start = {}", format_iso(self.start));
        let _ = writeln!(s, "rated_power = {}", self.rated_power);
        let _ = writeln!(s, "cut_in = {}", self.cut_in);
        let _ = writeln!(s, "rated_speed = {}", self.rated_speed);
        let _ = writeln!(s, "cut_out = {}", self.cut_out);
        let _ = writeln!(s, "wind.mean = {}", w.mean);
        let _ = writeln!(s, "wind.reversion_rate = {}", w.reversion_rate);
        let _ = writeln!(s, "wind.volatility = {}", w.volatility);
        let _ = writeln!(s, "wind.gust_reversion_rate = {}", w.gust_reversion_rate);
        let _ = writeln!(s, "wind.gust_volatility = {}", w.gust_volatility);
        let _ = writeln!(s, "wind.direction_mean = {}", w.direction_mean);
        let _ = writeln!(s, "wind.direction_volatility = {}", w.direction_volatility);
        let _ = writeln!(s, "wind.direction_reversion_rate = {}", w.direction_reversion_rate);
        for wave in &self.waves {
            let _ = writeln!(s, "wave = {} {} {}", wave.amplitude, wave.period, wave.direction);
        }
        for (node, secs) in &self.cadence {
            let _ = writeln!(s, "cadence.{node} = {secs}");
        }
        let f = &self.faults;
        let _ = writeln!(s, "fault.gap = {}", f.gap);
        let _ = writeln!(s, "fault.duplicate = {}", f.duplicate);
        let _ = writeln!(s, "fault.spike = {}", f.spike);
        let _ = writeln!(s, "fault.reorder = {}", f.reorder);
        s
    }

    /// Active power from the static power curve, kW.
    pub fn power_curve(&self, v: f64) -> f64 {
        if v < self.cut_in || v >= self.cut_out {
            0.0
        } else if v < self.rated_speed {
            let ci3 = self.cut_in.powi(3);
            self.rated_power * (v.powi(3) - ci3) / (self.rated_speed.powi(3) - ci3)
        } else {
            self.rated_power
        }
    }
}

/// Parameter names emitted by the simulator, in catalog order.
const EMITTED: [&str; 58] = [
    "WMET.WindSpeed",
    "WMET.WindDirection",
    "WMET.AmbientTemperature",
    "WMET.WaterTemperature",
    "WMET.WaveHeight",
    "WMET.AvgWaveHeight",
    "WMET.WaveDirection",
    "WROT.BladePitch1",
    "WROT.BladePitch2",
    "WROT.BladePitch3",
    "WROT.RotorRPM",
    "WYAW.YawAngle",
    "WYAW.YawStatus",
    "WTOW.Surge",
    "WTOW.Sway",
    "WTOW.Heave",
    "WTOW.Roll",
    "WTOW.Pitch",
    "WTOW.Yaw",
    "WTRM.ShaftBearingTemp",
    "WTRM.BrakeTemp",
    "WTRM.BrakeStatus",
    "WTRM.GearboxOilTemp",
    "WTRM.GearboxOilStatus",
    "WTUR.ActivePower",
    "WTUR.ReactivePower",
    "WTUR.GeneratorTemp",
    "WTUR.StatorTemp",
    "WTUR.OperationCode",
    "WTUR.StatusCode",
    "WTUR.WarningCode",
    "WGEN.GeneratorStatus",
    "WGEN.GeneratorRPM",
    "WCNV.GeneratorFrequency",
    "WTRF.CurrentL1",
    "WTRF.CurrentL2",
    "WTRF.CurrentL3",
    "WTRF.VoltageL1L2",
    "WTRF.VoltageL2L3",
    "WTRF.VoltageL3L1",
    "WTRF.OilStatus",
    "WTRF.OilTemp",
    "WTRF.WindingTemp",
    "WTRF.CoolingStatus",
    "WSTR.BallastDepth",
    "WPPD.ControlStatus",
    "WAVL.AvailabilityTime",
    "WAVL.OperationTime",
    "WAVL.AccumulatedEnergy",
    "WAVL.GridFaultTime",
    "WAVL.StandbyTime",
    "WAVL.MaintenanceTime",
    "WAVL.WeatherDowntime",
    "WAVL.AvailabilityStatus",
    "WAVL.GridStatus",
    "WAVL.CommsStatus",
    "WAVL.SafetyChainStatus",
    "WAVL.OperatingState",
];

/// Tower degree of freedom: response of a damped oscillator to the wave train.
#[derive(Debug, Clone, Copy)]
pub struct DofModel {
    pub natural_period: f64,
    pub damping: f64,
    /// Response per metre of wave amplitude (m or rad).
    pub scale: f64,
    /// Offset per unit of normalized thrust.
    pub thrust_coupling: f64,
}

/// surge, sway, heave, roll, pitch, yaw
pub const DOF_MODELS: [DofModel; 6] = [
    DofModel { natural_period: 60.0, damping: 0.08, scale: 0.8, thrust_coupling: 12.0 },
    DofModel { natural_period: 60.0, damping: 0.08, scale: 0.8, thrust_coupling: 0.0 },
    DofModel { natural_period: 20.0, damping: 0.10, scale: 1.0, thrust_coupling: 0.0 },
    DofModel { natural_period: 25.0, damping: 0.06, scale: 0.03, thrust_coupling: 0.0 },
    DofModel { natural_period: 25.0, damping: 0.06, scale: 0.03, thrust_coupling: 0.08 },
    DofModel { natural_period: 8.0, damping: 0.10, scale: 0.01, thrust_coupling: 0.0 },
];

impl DofModel {
    /// Gain (capped at 1) and phase lag of the oscillator at angular frequency `omega`.
    pub fn response(&self, omega: f64) -> (f64, f64) {
        let r = omega * self.natural_period / TAU;
        let re = 1.0 - r * r;
        let im = 2.0 * self.damping * r;
        let gain = (1.0 / (re * re + im * im).sqrt()).min(1.0);
        (gain, -im.atan2(re))
    }

    /// How much of a wave travelling in `direction` excites this degree of freedom.
    fn projection(dof: usize, direction: f64) -> f64 {
        match dof {
            0 | 4 => direction.cos(),
            1 | 3 => direction.sin(),
            2 => 1.0,
            _ => (2.0 * direction).sin(),
        }
    }
}

#[derive(Debug, Clone)]
struct Ids {
    emitted: Vec<ParamId>,
    nodes: Vec<LogicalNode>,
    catalog: Arc<Catalog>,
}

impl Ids {
    fn resolve(catalog: Arc<Catalog>) -> Result<Ids> {
        let emitted = catalog.resolve(&EMITTED)?;
        let nodes = emitted.iter().map(|&id| catalog.def(id).node).collect();
        Ok(Ids { emitted, nodes, catalog })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Temperatures {
    pub ambient: f64,
    pub water: f64,
    pub generator: f64,
    pub stator: f64,
    pub bearing: f64,
    pub brake: f64,
    pub gearbox_oil: f64,
    pub transformer_oil: f64,
    pub winding: f64,
}

#[derive(Debug, Clone)]
pub struct SimState {
    pub time: DateTime<Utc>,
    /// Whole seconds since [`SimConfig::start`].
    pub elapsed: u64,
    pub wind_slow: f64,
    pub wind_gust: f64,
    pub wind_speed: f64,
    /// Unwrapped, degrees.
    pub wind_direction: f64,
    /// Wind speed seen by the rotor after its inertia filter.
    pub rotor_wind: f64,
    /// Unwrapped, degrees.
    pub yaw: f64,
    pub pitch: [f64; 3],
    pub rotor_rpm: f64,
    pub generator_rpm: f64,
    pub active_power: f64,
    pub reactive_power: f64,
    /// Normalized rotor thrust, low-pass filtered.
    pub thrust: f64,
    /// Slowly varying sea-state factor in [0.4, 1] scaling the wave train.
    pub sea_state: f64,
    pub wave_elevation: f64,
    /// surge, sway, heave (m); roll, pitch, yaw (rad)
    pub tower: [f64; 6],
    pub temps: Temperatures,
    pub energy_kwh: f64,
    pub availability_s: f64,
    pub operation_s: f64,
    pub standby_s: f64,
    wave_phases: Vec<f64>,
    rng: ChaCha8Rng,
    ids: Ids,
}

const BLADE_OFFSETS: [f64; 3] = [0.0, 0.12, -0.12];
const GEAR_RATIO: f64 = 91.0;
const POLE_PAIRS: f64 = 2.0;
const LINE_VOLTAGE: f64 = 690.0;

impl SimState {
    /// Initial state at `config.start`, with slow processes at their means.
    pub fn new(config: &SimConfig, catalog: Arc<Catalog>) -> Result<SimState> {
        config.validate()?;
        let ids = Ids::resolve(catalog)?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let wave_phases = config.waves.iter().map(|_| rng.random::<f64>() * TAU).collect();
        let mut s = SimState {
            time: config.start,
            elapsed: 0,
            wind_slow: config.wind.mean,
            wind_gust: 0.0,
            wind_speed: config.wind.mean,
            wind_direction: config.wind.direction_mean,
            rotor_wind: config.wind.mean,
            yaw: config.wind.direction_mean,
            pitch: [0.0; 3],
            rotor_rpm: 0.0,
            generator_rpm: 0.0,
            active_power: 0.0,
            reactive_power: 0.0,
            thrust: 0.0,
            sea_state: sea_state_target(config.wind.mean),
            wave_elevation: 0.0,
            tower: [0.0; 6],
            temps: Temperatures {
                ambient: 8.0,
                water: 9.0,
                generator: 8.0,
                stator: 8.0,
                bearing: 8.0,
                brake: 8.0,
                gearbox_oil: 8.0,
                transformer_oil: 8.0,
                winding: 8.0,
            },
            energy_kwh: 0.0,
            availability_s: 0.0,
            operation_s: 0.0,
            standby_s: 0.0,
            wave_phases,
            rng,
            ids,
        };
        // Start the slow filters in equilibrium with the initial wind.
        let v = s.rotor_wind;
        s.thrust = thrust_target(config, v);
        s.rotor_rpm = rpm_target(config, v);
        s.generator_rpm = s.rotor_rpm * GEAR_RATIO;
        for (b, p) in s.pitch.iter_mut().enumerate() {
            *p = pitch_target(config, v) + BLADE_OFFSETS[b];
        }
        let load = config.power_curve(v) / config.rated_power;
        s.temps = equilibrium_temps(s.temps.ambient, s.temps.water, load);
        s.update_sea(config);
        Ok(s)
    }

    pub fn catalog(&self) -> &Arc<Catalog> {
        &self.ids.catalog
    }

    fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    fn update_sea(&mut self, config: &SimConfig) {
        let t = self.elapsed as f64;
        let mut eta = 0.0;
        let mut dof = [0.0; 6];
        for (w, phase) in config.waves.iter().zip(&self.wave_phases) {
            let omega = TAU / w.period;
            let arg = omega * t + phase;
            eta += w.amplitude * arg.sin();
            for (d, model) in DOF_MODELS.iter().enumerate() {
                let (gain, lag) = model.response(omega);
                dof[d] += w.amplitude * DofModel::projection(d, w.direction) * gain * (arg + lag).sin();
            }
        }
        self.wave_elevation = self.sea_state * eta;
        for (d, model) in DOF_MODELS.iter().enumerate() {
            self.tower[d] = model.thrust_coupling * self.thrust + model.scale * self.sea_state * dof[d];
        }
    }

    /// Significant wave height of the current sea state, m.
    pub fn significant_wave_height(&self, config: &SimConfig) -> f64 {
        let m0: f64 = config.waves.iter().map(|w| w.amplitude * w.amplitude / 2.0).sum();
        4.0 * self.sea_state * m0.sqrt()
    }

    fn mean_wave_direction(config: &SimConfig) -> f64 {
        let (mut x, mut y) = (0.0, 0.0);
        for w in &config.waves {
            let e = w.amplitude * w.amplitude;
            x += e * w.direction.cos();
            y += e * w.direction.sin();
        }
        wrap_degrees(y.atan2(x).to_degrees())
    }

    /// Current readings in [`EMITTED`] order.
    fn readings(&self, config: &SimConfig) -> [f64; 58] {
        let producing = self.active_power > 0.0;
        let load = self.active_power / config.rated_power;
        let operation_code = if self.rotor_wind >= config.cut_out {
            3.0
        } else if !producing {
            0.0
        } else if self.rotor_wind >= config.rated_speed {
            2.0
        } else {
            1.0
        };
        let phase_current = self.active_power * 1000.0 / (3f64.sqrt() * LINE_VOLTAGE * 0.95);
        let t = &self.temps;
        let yaw = wrap_degrees(self.yaw);
        let yaw_error = angle_diff(self.wind_direction, self.yaw).abs();
        [
            self.wind_speed,
            wrap_degrees(self.wind_direction),
            t.ambient,
            t.water,
            self.wave_elevation,
            self.significant_wave_height(config),
            Self::mean_wave_direction(config),
            self.pitch[0],
            self.pitch[1],
            self.pitch[2],
            self.rotor_rpm,
            yaw,
            if yaw_error > 10.0 { 1.0 } else { 0.0 },
            self.tower[0],
            self.tower[1],
            self.tower[2],
            self.tower[3],
            self.tower[4],
            self.tower[5],
            t.bearing,
            t.brake,
            if producing { 0.0 } else { 1.0 },
            t.gearbox_oil,
            0.0,
            self.active_power,
            self.reactive_power,
            t.generator,
            t.stator,
            operation_code,
            0.0,
            if t.generator > 110.0 { 1.0 } else { 0.0 },
            if producing { 1.0 } else { 0.0 },
            self.generator_rpm,
            self.generator_rpm * POLE_PAIRS / 60.0,
            phase_current,
            phase_current * 1.01,
            phase_current * 0.99,
            LINE_VOLTAGE,
            LINE_VOLTAGE * 1.002,
            LINE_VOLTAGE * 0.998,
            0.0,
            t.transformer_oil,
            t.winding,
            if load > 0.7 { 1.0 } else { 0.0 },
            55.0 + 0.5 * self.thrust,
            1.0,
            self.availability_s,
            self.operation_s,
            self.energy_kwh,
            0.0,
            self.standby_s,
            0.0,
            0.0,
            1.0,
            1.0,
            1.0,
            1.0,
            operation_code,
        ]
    }

    fn emit(&self, config: &SimConfig) -> Vec<TelemetryRecord> {
        let values = self.readings(config);
        let mut out = Vec::with_capacity(values.len());
        for (i, &v) in values.iter().enumerate() {
            let cadence = config.cadence[&self.ids.nodes[i]] as u64;
            if self.elapsed.is_multiple_of(cadence) {
                out.push(TelemetryRecord::new(self.time, self.ids.emitted[i], v, Source::Simulator));
            }
        }
        out
    }

    fn advance(&mut self, config: &SimConfig, dt: u32) {
        assert!(dt > 0, "simulation step must be positive");
        let dtf = dt as f64;
        self.elapsed += dt as u64;
        self.time += TimeDelta::seconds(dt as i64);
        let w = &config.wind;

        let (z1, z2, z3) = (self.normal(), self.normal(), self.normal());
        self.wind_slow = ou_step(self.wind_slow, w.mean, w.reversion_rate, w.volatility, dtf, z1);
        self.wind_gust = ou_step(self.wind_gust, 0.0, w.gust_reversion_rate, w.gust_volatility, dtf, z2);
        self.wind_speed = (self.wind_slow + self.wind_gust).abs().min(59.0);
        self.wind_direction = ou_step(
            self.wind_direction,
            w.direction_mean,
            w.direction_reversion_rate,
            w.direction_volatility,
            dtf,
            z3,
        );

        self.rotor_wind = low_pass(self.rotor_wind, self.wind_speed, 5.0, dtf);
        self.yaw = low_pass(self.yaw, self.wind_direction, 90.0, dtf);
        let v = self.rotor_wind;

        self.rotor_rpm = low_pass(self.rotor_rpm, rpm_target(config, v), 8.0, dtf);
        self.generator_rpm = self.rotor_rpm * GEAR_RATIO;
        let pitch = pitch_target(config, v);
        for (b, offset) in BLADE_OFFSETS.iter().enumerate() {
            let noise = 0.03 * self.normal();
            let filtered = low_pass(self.pitch[b] - offset, pitch, 4.0, dtf);
            self.pitch[b] = (filtered + offset + noise).clamp(-4.0, 94.0);
        }

        let curve = config.power_curve(v);
        let power_noise = self.normal();
        self.active_power = if curve > 0.0 {
            (curve + 0.005 * config.rated_power * power_noise).clamp(0.0, 1.02 * config.rated_power)
        } else {
            0.0
        };
        let q_noise = self.normal();
        self.reactive_power = -0.1 * self.active_power + 5.0 * q_noise;

        self.thrust = low_pass(self.thrust, thrust_target(config, v), 30.0, dtf);
        self.sea_state = low_pass(self.sea_state, sea_state_target(self.wind_slow), 1800.0, dtf);
        self.update_sea(config);

        let day = self.elapsed as f64 / 86_400.0;
        let ambient = 8.0 + 3.0 * (TAU * day).sin();
        let water = 9.0 + 0.5 * (TAU * day / 30.0).sin();
        let load = self.active_power / config.rated_power;
        let target = equilibrium_temps(ambient, water, load);
        let tau = 900.0;
        let t = &mut self.temps;
        t.ambient = ambient;
        t.water = water;
        t.generator = low_pass(t.generator, target.generator, tau, dtf);
        t.stator = low_pass(t.stator, target.stator, tau, dtf);
        t.bearing = low_pass(t.bearing, target.bearing, 2.0 * tau, dtf);
        t.brake = low_pass(t.brake, target.brake, tau, dtf);
        t.gearbox_oil = low_pass(t.gearbox_oil, target.gearbox_oil, 2.0 * tau, dtf);
        t.transformer_oil = low_pass(t.transformer_oil, target.transformer_oil, 3.0 * tau, dtf);
        t.winding = low_pass(t.winding, target.winding, tau, dtf);

        self.availability_s += dtf;
        if self.active_power > 0.0 {
            self.operation_s += dtf;
        } else {
            self.standby_s += dtf;
        }
        self.energy_kwh += self.active_power * dtf / 3600.0;
    }
}

/// Exact Ornstein-Uhlenbeck update; `std` is the stationary standard deviation.
fn ou_step(x: f64, mean: f64, rate: f64, std: f64, dt: f64, z: f64) -> f64 {
    let decay = (-rate * dt).exp();
    mean + (x - mean) * decay + std * (1.0 - decay * decay).sqrt() * z
}

/// First-order lag with time constant `tau`, exact for piecewise-constant input.
fn low_pass(y: f64, target: f64, tau: f64, dt: f64) -> f64 {
    y + (target - y) * (1.0 - (-dt / tau).exp())
}

fn wrap_degrees(d: f64) -> f64 {
    let w = d.rem_euclid(360.0);
    if w >= 360.0 {
        0.0
    } else {
        w
    }
}

fn angle_diff(a: f64, b: f64) -> f64 {
    (a - b + 180.0).rem_euclid(360.0) - 180.0
}

fn sea_state_target(wind_slow: f64) -> f64 {
    (0.4 + 0.04 * wind_slow).clamp(0.4, 1.0)
}

fn rpm_target(config: &SimConfig, v: f64) -> f64 {
    if v < config.cut_in || v >= config.cut_out {
        0.0
    } else {
        6.0 + 12.0 * ((v - config.cut_in) / (config.rated_speed - config.cut_in)).min(1.0)
    }
}

fn pitch_target(config: &SimConfig, v: f64) -> f64 {
    if v >= config.cut_out {
        88.0
    } else if v > config.rated_speed {
        (1.8 * (v - config.rated_speed)).min(30.0)
    } else {
        0.0
    }
}

fn thrust_target(config: &SimConfig, v: f64) -> f64 {
    if v < config.cut_in {
        0.0
    } else if v < config.rated_speed {
        (v / config.rated_speed).powi(2)
    } else if v < config.cut_out {
        (config.rated_speed / v).powi(2)
    } else {
        0.1 * (v / config.cut_out).powi(2).min(2.0)
    }
}

fn equilibrium_temps(ambient: f64, water: f64, load: f64) -> Temperatures {
    Temperatures {
        ambient,
        water,
        generator: ambient + 70.0 * load,
        stator: ambient + 60.0 * load,
        bearing: ambient + 25.0 * load,
        brake: ambient + 3.0,
        gearbox_oil: ambient + 40.0 * load,
        transformer_oil: ambient + 30.0 * load,
        winding: ambient + 50.0 * load,
    }
}

/// Advances the state by `dt` seconds and returns the records emitted at the
/// new instant: every parameter whose node cadence divides the elapsed time.
///
/// # Panics
/// If `dt` is zero.
pub fn step(state: &SimState, config: &SimConfig, dt: u32) -> (SimState, Vec<TelemetryRecord>) {
    let mut next = state.clone();
    next.advance(config, dt);
    let records = next.emit(config);
    (next, records)
}

/// A running simulator: physics state plus fault injection.
#[derive(Debug, Clone)]
pub struct Simulator {
    config: SimConfig,
    state: SimState,
    fault_rng: ChaCha8Rng,
    /// Record delayed past the next instant by a reorder fault.
    held: Option<TelemetryRecord>,
}

impl Simulator {
    pub fn new(config: SimConfig, catalog: Arc<Catalog>) -> Result<Simulator> {
        let state = SimState::new(&config, catalog)?;
        let mut fault_rng = ChaCha8Rng::seed_from_u64(config.seed);
        fault_rng.set_stream(1);
        Ok(Simulator { config, state, fault_rng, held: None })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    /// One step with fault injection applied to its records.
    pub fn advance(&mut self, dt: u32) -> Vec<TelemetryRecord> {
        self.state.advance(&self.config, dt);
        let clean = self.state.emit(&self.config);
        self.inject_faults(clean)
    }

    /// Steps `duration / dt` times.
    pub fn run(&mut self, duration: u64, dt: u32) -> Vec<TelemetryRecord> {
        let steps = duration / dt as u64;
        let mut out = Vec::new();
        for _ in 0..steps {
            out.extend(self.advance(dt));
        }
        out.extend(self.flush());
        out
    }

    fn inject_faults(&mut self, records: Vec<TelemetryRecord>) -> Vec<TelemetryRecord> {
        let f = self.config.faults;
        if f == FaultRates::default() {
            return records;
        }
        let catalog = self.state.ids.catalog.clone();
        let mut out = Vec::with_capacity(records.len() + 1);
        let released = self.held.take();
        for mut r in records {
            if self.fault_rng.random::<f64>() < f.gap {
                continue;
            }
            if self.fault_rng.random::<f64>() < f.spike {
                r.value = unphysical_value(&catalog, r.parameter, self.fault_rng.random());
            }
            if self.fault_rng.random::<f64>() < f.duplicate {
                out.push(r);
            }
            if self.held.is_none() && self.fault_rng.random::<f64>() < f.reorder {
                self.held = Some(r);
            } else {
                out.push(r);
            }
        }
        out.extend(released);
        out
    }

    /// Releases a record still held back by a reorder fault.
    pub fn flush(&mut self) -> Option<TelemetryRecord> {
        self.held.take()
    }
}

fn unphysical_value(catalog: &Catalog, id: ParamId, u: f64) -> f64 {
    let p = catalog.def(id);
    match p.kind {
        ParamKind::Status => p.upper_bound + 100.0,
        ParamKind::Continuous => {
            let span = p.upper_bound - p.lower_bound;
            if u < 0.5 {
                p.upper_bound + span * (1.0 + u)
            } else {
                p.lower_bound - span * u
            }
        }
    }
}

/// Generates `duration` seconds of telemetry at one-second steps.
pub fn generate(config: &SimConfig, duration: u64) -> Result<Vec<TelemetryRecord>> {
    generate_with_step(config, duration, 1)
}

pub fn generate_with_step(config: &SimConfig, duration: u64, dt: u32) -> Result<Vec<TelemetryRecord>> {
    if duration == 0 || dt == 0 {
        return Err(Error::InvalidConfig("duration and step must be positive".into()));
    }
    let mut sim = Simulator::new(config.clone(), Catalog::builtin())?;
    Ok(sim.run(duration, dt))
}

/// Angle of a wave direction in degrees, for display.
pub fn direction_degrees(rad: f64) -> f64 {
    wrap_degrees(rad * 180.0 / PI)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn calm(mean: f64) -> SimConfig {
        let mut c = SimConfig::default();
        c.wind.mean = mean;
        c.wind.volatility = 0.0;
        c.wind.gust_volatility = 0.0;
        c
    }

    fn value_of(records: &[TelemetryRecord], id: &str) -> Vec<f64> {
        let pid = Catalog::builtin().id(id).unwrap();
        records.iter().filter(|r| r.parameter == pid).map(|r| r.value).collect()
    }

    #[test]
    fn no_power_without_wind() {
        let recs = generate(&calm(0.0), 120).unwrap();
        assert!(value_of(&recs, "WTUR.ActivePower").iter().all(|&p| p == 0.0));
    }

    #[test]
    fn rated_power_above_rated_speed() {
        let recs = generate(&calm(18.0), 600).unwrap();
        let power = value_of(&recs, "WTUR.ActivePower");
        let band = 4.0 * 0.005 * 2300.0 + 1.0;
        assert!(power.iter().all(|&p| (p - 2300.0).abs() <= band), "{power:?}");
    }

    #[test]
    fn power_curve_shape() {
        let c = SimConfig::default();
        assert_eq!(c.power_curve(3.9), 0.0);
        assert_eq!(c.power_curve(4.0), 0.0);
        assert!(c.power_curve(8.0) > 0.0 && c.power_curve(8.0) < 2300.0);
        assert_eq!(c.power_curve(13.0), 2300.0);
        assert_eq!(c.power_curve(24.9), 2300.0);
        assert_eq!(c.power_curve(25.0), 0.0);
    }

    #[test]
    fn runs_are_deterministic() {
        let a = generate(&SimConfig::default(), 300).unwrap();
        let b = generate(&SimConfig::default(), 300).unwrap();
        assert_eq!(a, b);
        let mut other = SimConfig::default();
        other.seed = 7;
        assert_ne!(a, generate(&other, 300).unwrap());
    }

    #[test]
    fn step_is_a_pure_function_of_its_inputs() {
        let cfg = SimConfig::default();
        let s0 = SimState::new(&cfg, Catalog::builtin()).unwrap();
        let (s1, r1) = step(&s0, &cfg, 1);
        let (s1b, r1b) = step(&s0, &cfg, 1);
        assert_eq!(r1, r1b);
        assert_eq!(s1.wind_speed, s1b.wind_speed);
        assert_eq!(s1.elapsed, 1);
    }

    #[test]
    fn cadence_controls_emission_count() {
        let mut cfg = SimConfig::default();
        cfg.cadence.insert(LogicalNode::Wmet, 2);
        let recs = generate(&cfg, 60).unwrap();
        let wind = Catalog::builtin().id("WMET.WindSpeed").unwrap();
        let mut instants: Vec<_> = recs.iter().filter(|r| r.parameter == wind).map(|r| r.timestamp).collect();
        instants.dedup();
        assert_eq!(instants.len(), 30);
    }

    #[test]
    fn clean_runs_are_physical() {
        let cat = Catalog::builtin();
        for seed in 0..3 {
            let mut cfg = SimConfig::default();
            cfg.seed = seed;
            cfg.wind.mean = [6.0, 14.0, 22.0][seed as usize];
            for r in generate(&cfg, 1800).unwrap() {
                assert!(cat.is_physical_id(r.parameter, r.value), "{} = {}", cat.name(r.parameter), r.value);
            }
        }
    }

    #[test]
    fn faults_break_the_stream_in_all_configured_ways() {
        let mut cfg = SimConfig::default();
        cfg.faults = FaultRates { gap: 0.05, duplicate: 0.05, spike: 0.05, reorder: 0.05 };
        let clean = generate(&SimConfig::default(), 120).unwrap();
        let dirty = generate(&cfg, 120).unwrap();
        let cat = Catalog::builtin();
        assert!(dirty.iter().any(|r| !cat.is_physical_id(r.parameter, r.value)));
        assert!(dirty.windows(2).any(|w| w[0].timestamp > w[1].timestamp));
        assert!(dirty.windows(2).any(|w| w[0] == w[1]));
        assert_ne!(clean.len(), dirty.len());
    }

    #[test]
    fn scenario_round_trip() {
        let mut cfg = SimConfig::default();
        cfg.seed = 99;
        cfg.faults.spike = 0.01;
        cfg.cadence.insert(LogicalNode::Wtrf, 4);
        let back = SimConfig::from_scenario(&cfg.to_scenario()).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn scenario_rejects_bad_input() {
        assert!(SimConfig::from_scenario("cut_in = 30").is_err());
        assert!(SimConfig::from_scenario("cadence.WMET = 5").is_err());
        assert!(SimConfig::from_scenario("nonsense = 1").is_err());
        assert!(SimConfig::from_scenario("seed 4").is_err());
        assert!(SimConfig::from_scenario("wave = 1 2").is_err());
        let c = SimConfig::from_scenario("# comment\nseed = 3\nwave = 0.5 10 0\n").unwrap();
        assert_eq!(c.seed, 3);
        assert_eq!(c.waves.len(), 1);
    }

    #[test]
    fn oscillator_gain_is_capped() {
        for model in DOF_MODELS {
            for k in 1..200 {
                let (gain, _) = model.response(k as f64 * 0.01);
                assert!(gain > 0.0 && gain <= 1.0);
            }
        }
    }

    #[test]
    fn zero_step_or_duration_is_rejected() {
        assert!(generate(&SimConfig::default(), 0).is_err());
    }
}
