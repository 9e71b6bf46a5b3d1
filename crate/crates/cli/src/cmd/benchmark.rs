use chrono::TimeDelta;
use log::info;
use twin_core::Catalog;
use twin_forecast::{benchmark, prepare, render_csv, render_table, ForecastError, ForecastModel};

use crate::cli::BenchmarkArgs;
use crate::error::{CliError, Result};

fn load_model(name: &str, args: &BenchmarkArgs) -> Result<ForecastModel> {
    if name == "persistence" {
        return Ok(ForecastModel::persistence(super::task(&Catalog::builtin(), &args.task)?));
    }
    ForecastModel::load(name).map_err(|e| CliError::from(e).context(name))
}

pub fn run(args: &BenchmarkArgs) -> Result<()> {
    if !(0.0..1.0).contains(&args.split) {
        return Err(CliError::Usage(format!("split must lie in [0, 1), got {}", args.split)));
    }
    let models = args.models.iter().map(|m| load_model(m, args)).collect::<Result<Vec<_>>>()?;
    let first = &models[0];
    if let Some(other) = models.iter().find(|m| m.task != first.task) {
        return Err(ForecastError::TaskMismatch { left: first.task.to_string(), right: other.task.to_string() }.into());
    }

    let catalog = Catalog::builtin();
    let store = super::load_store(&catalog, &args.data)?;
    let (from, to) = store.time_span().ok_or_else(|| CliError::Data(format!("{} holds no records", args.data.display())))?;
    let cut = from + TimeDelta::milliseconds(((to - from).num_milliseconds() as f64 * args.split) as i64);
    let ids = first.task.resolve(&catalog)?;
    // Models trained on the same leading span share stats; persistence
    // ignores them, so the leading span of this file stands in.
    let norm = match models.iter().find_map(|m| m.norm.clone()) {
        Some(n) => n,
        None => store.normalization_stats(from, if cut > from { cut } else { to }, &ids)?,
    };
    if let Some(m) = models.iter().find(|m| m.norm.as_ref().is_some_and(|n| n.fingerprint() != norm.fingerprint())) {
        return Err(CliError::Data(format!("{} was normalized differently from the other models", m.label())));
    }
    let all = prepare(&store, &first.task, from, to, Some(&norm))?;
    let test = all.dataset.slice_rows(all.row_at(cut)..all.frames.len());
    info!("testing on {} instants", test.instants().len());

    let rows = benchmark(&models.iter().collect::<Vec<_>>(), &test)?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&rows).expect("rows serialize"));
    } else {
        print!("{}", render_table(&rows));
    }
    if let Some(path) = &args.csv {
        std::fs::write(path, render_csv(&rows))?;
    }
    Ok(())
}
