//! Data layer of the wind-turbine digital twin.
//!
//! * [`catalog`] - the parameter universe (logical nodes, units, validity bounds).
//! * [`record`] - telemetry records and the newline-delimited record file format.
//! * [`store`] - time-ordered storage with causal, forward-padded resampling.
//! * [`sim`] - a seeded synthetic floating-turbine telemetry source.

pub mod catalog;
pub mod error;
pub mod record;
pub mod sim;
pub mod store;
pub mod time;

pub use catalog::{Catalog, LogicalNode, ParamId, ParamKind, ParameterDef};
pub use error::{Error, Result};
pub use record::{Source, TelemetryRecord};
pub use sim::{FaultRates, SimConfig, SimState, Simulator};
pub use store::{Cell, FrameSeries, IngestReport, NormalizationStats, ParamStats, TimeSeriesStore};
