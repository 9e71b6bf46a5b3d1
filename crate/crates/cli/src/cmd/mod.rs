pub mod benchmark;
pub mod ingest;
pub mod serve;
pub mod simulate;
pub mod train;

use std::path::Path;
use std::sync::Arc;

use log::{info, warn};
use twin_core::{Catalog, TimeSeriesStore};
use twin_forecast::ForecastTask;

use crate::cli::TaskArgs;
use crate::error::{CliError, Result};

/// Loads a record file into a fresh store.
pub fn load_store(catalog: &Arc<Catalog>, path: &Path) -> Result<TimeSeriesStore> {
    let (store, report) = TimeSeriesStore::load(catalog.clone(), path).map_err(|e| CliError::from(e).context(path.display()))?;
    info!("{}: {} records stored ({report:?})", path.display(), store.len());
    if report.rejected_unphysical > 0 {
        warn!("{}: {} unphysical values rejected", path.display(), report.rejected_unphysical);
    }
    Ok(store)
}

pub fn task(catalog: &Catalog, args: &TaskArgs) -> Result<ForecastTask> {
    let params = if args.params.is_empty() {
        catalog.forecast_set().into_iter().map(String::from).collect()
    } else {
        catalog.resolve(&args.params)?;
        args.params.clone()
    };
    Ok(ForecastTask::new(args.timescale, args.m, args.k, params)?)
}
