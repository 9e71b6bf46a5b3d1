use std::fs::File;
use std::io::BufReader;
use std::path::Path;
use std::time::Duration;

use log::info;
use twin_core::record::read_records;
use twin_core::{Catalog, IngestReport, Source, TelemetryRecord, TimeSeriesStore};
use twin_server::payload::IngestDoc;

use crate::cli::IngestArgs;
use crate::error::{CliError, Result};

fn read(catalog: &Catalog, path: &Path) -> Result<Vec<TelemetryRecord>> {
    let file = File::open(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let mut records = read_records(catalog, BufReader::new(file)).map_err(|e| CliError::from(e).context(path.display()))?;
    records.iter_mut().for_each(|r| r.source = Source::File);
    Ok(records)
}

fn post(server: &str, token: &str, catalog: &Catalog, records: &[TelemetryRecord]) -> Result<IngestReport> {
    let url = format!("{}/api/v1/ingest", server.trim_end_matches('/'));
    let body = serde_json::to_string(&IngestDoc::from_records(catalog, records)).expect("records serialize");
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(Duration::from_secs(60)))
        .http_status_as_error(false)
        .build()
        .into();
    let mut resp = agent
        .post(&url)
        .header("authorization", &format!("Bearer {token}"))
        .header("content-type", "application/json")
        .send(body)
        .map_err(|e| CliError::Runtime(format!("{url}: {e}")))?;
    let status = resp.status();
    let text = resp.body_mut().read_to_string().map_err(|e| CliError::Runtime(format!("{url}: {e}")))?;
    if !status.is_success() {
        return Err(CliError::Runtime(format!("{url}: {status}: {text}")));
    }
    serde_json::from_str(&text).map_err(|e| CliError::Runtime(format!("{url}: unexpected reply: {e}")))
}

pub fn run(args: &IngestArgs) -> Result<()> {
    let catalog = Catalog::builtin();
    let mut total = IngestReport::default();
    match (&args.store, &args.server) {
        (Some(path), None) => {
            let mut store = if path.exists() { super::load_store(&catalog, path)? } else { TimeSeriesStore::new(catalog.clone()) };
            for data in &args.data {
                let report = store.ingest_batch(&read(&catalog, data)?);
                info!("{}: {report:?}", data.display());
                total.merge(report);
            }
            let n = store.save(path)?;
            info!("{}: {n} records", path.display());
        }
        (None, Some(server)) => {
            let token = args.token.as_deref().unwrap_or_default();
            for data in &args.data {
                for chunk in read(&catalog, data)?.chunks(args.batch.max(1)) {
                    total.merge(post(server, token, &catalog, chunk)?);
                }
            }
        }
        _ => return Err(CliError::Usage("give exactly one of --store or --server".into())),
    }
    println!("accepted\t{}", total.accepted);
    println!("rejected_unphysical\t{}", total.rejected_unphysical);
    println!("deduplicated\t{}", total.deduplicated);
    println!("unknown_parameter\t{}", total.unknown_parameter);
    Ok(())
}
