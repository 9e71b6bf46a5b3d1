use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use log::info;
use twin_server::ServerConfig;
use twin_weather::{BBox, ForecastEndpoint};

use crate::cli::{ReplayArgs, ServeArgs};
use crate::error::{CliError, Result};

/// `id=path`, or a bare path whose file stem becomes the id.
fn model_entry(text: &str) -> Result<(String, PathBuf)> {
    let (id, path) = match text.split_once('=') {
        Some((id, path)) => (id.trim().to_string(), PathBuf::from(path.trim())),
        None => {
            let path = PathBuf::from(text);
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
            (stem, path)
        }
    };
    if id.is_empty() {
        return Err(CliError::Usage(format!("model `{text}` has no id")));
    }
    if id == "persistence" {
        return Err(CliError::Usage("`persistence` is reserved for the built-in baseline".into()));
    }
    Ok((id, path))
}

fn config(args: &ServeArgs) -> Result<ServerConfig> {
    let mut models = BTreeMap::new();
    for entry in &args.models {
        let (id, path) = model_entry(entry)?;
        if models.insert(id.clone(), path).is_some() {
            return Err(CliError::Usage(format!("model id `{id}` given twice")));
        }
    }
    let default_bbox = args.bbox.as_deref().map(str::parse::<BBox>).transpose()?;
    let weather = args.weather.as_deref().map(ForecastEndpoint::new).transpose()?;
    if args.tick_ms == 0 {
        return Err(CliError::Usage("tick-ms must be positive".into()));
    }
    Ok(ServerConfig {
        bind: args.bind,
        token: args.token.clone(),
        store_path: args.store.clone(),
        models,
        weather,
        default_bbox,
        replay: None,
        stream_capacity: args.stream_capacity,
        tick: Duration::from_millis(args.tick_ms),
    })
}

fn run_server(config: ServerConfig) -> Result<()> {
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    runtime.block_on(twin_server::serve(config, async {
        let _ = tokio::signal::ctrl_c().await;
    }))?;
    info!("stopped");
    Ok(())
}

pub fn serve(args: &ServeArgs) -> Result<()> {
    run_server(config(args)?)
}

pub fn replay(args: &ReplayArgs) -> Result<()> {
    if !(args.speed.is_finite() && args.speed > 0.0) {
        return Err(CliError::Usage(format!("speed must be positive, got {}", args.speed)));
    }
    let mut config = config(&args.serve)?;
    config.replay = Some((args.data.clone(), args.speed));
    require_file(&args.data)?;
    run_server(config)
}

fn require_file(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("{} is not a file", path.display())))
    }
}
