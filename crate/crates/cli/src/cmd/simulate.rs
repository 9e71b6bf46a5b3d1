use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};

use log::info;
use twin_core::record::format_record;
use twin_core::{Catalog, SimConfig, Simulator};

use crate::cli::SimulateArgs;
use crate::error::{CliError, Result};

pub fn run(args: &SimulateArgs, seed: Option<u64>) -> Result<()> {
    if args.duration == 0 {
        return Err(CliError::Usage("duration must be positive".into()));
    }
    if args.dt == 0 || args.duration < args.dt as u64 {
        return Err(CliError::Usage(format!("dt must be between 1 and the duration, got {}", args.dt)));
    }
    let mut config = match &args.scenario {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("scenario {}: {e}", path.display())))?;
            SimConfig::from_scenario(&text).map_err(|e| CliError::Usage(format!("scenario {}: {e}", path.display())))?
        }
        None => SimConfig::default(),
    };
    if let Some(seed) = seed {
        config.seed = seed;
    }
    let catalog = Catalog::builtin();
    let keep = if args.params.is_empty() { catalog.ids().collect() } else { catalog.resolve(&args.params)? };
    let mut sim = Simulator::new(config, catalog.clone())?;

    let sink: Box<dyn Write> = match &args.out {
        Some(path) => Box::new(File::create(path).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?),
        None => Box::new(std::io::stdout().lock()),
    };
    let mut out = BufWriter::new(sink);
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    let mut write = |records: &[twin_core::TelemetryRecord]| -> std::io::Result<()> {
        for r in records.iter().filter(|r| keep.contains(&r.parameter)) {
            writeln!(out, "{}", format_record(&catalog, r))?;
            *counts.entry(catalog.def(r.parameter).node.code().to_string()).or_default() += 1;
        }
        Ok(())
    };
    for _ in 0..args.duration / args.dt as u64 {
        write(&sim.advance(args.dt))?;
    }
    write(sim.flush().as_slice())?;
    out.flush()?;

    let total: usize = counts.values().sum();
    info!("simulated {} s in steps of {} s: {total} records", args.duration, args.dt);
    if args.out.is_some() {
        println!("node\trecords");
        for (node, n) in &counts {
            println!("{node}\t{n}");
        }
        println!("total\t{total}");
    }
    Ok(())
}
