use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};
use std::time::{Duration, Instant};

use log::{debug, warn};

use crate::error::{Result, WeatherError};
use crate::field::{BBox, WindField};
use crate::format::parse_field;

/// Where forecasts come from and how often to refresh them.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastEndpoint {
    /// `http(s)://...` or `file://<path>` for a fixture.
    pub base_url: String,
    pub refresh: Duration,
    pub timeout: Duration,
    /// Extra attempts after the first failure.
    pub retries: u32,
}

impl ForecastEndpoint {
    pub fn new(base_url: impl Into<String>) -> Result<ForecastEndpoint> {
        let e = ForecastEndpoint {
            base_url: base_url.into(),
            refresh: Duration::from_secs(600),
            timeout: Duration::from_secs(10),
            retries: 2,
        };
        e.validate()?;
        Ok(e)
    }

    pub fn validate(&self) -> Result<()> {
        if self.refresh.is_zero() {
            return Err(WeatherError::InvalidEndpoint("refresh interval must be positive".into()));
        }
        if !["http://", "https://", "file://"].iter().any(|p| self.base_url.starts_with(p)) {
            return Err(WeatherError::InvalidEndpoint(format!("unsupported scheme in `{}`", self.base_url)));
        }
        Ok(())
    }

    pub fn url(&self, bbox: &BBox, hours: u32) -> String {
        format!("{}?bbox={}&hours={}", self.base_url, bbox, hours)
    }

    /// The transport matching the URL scheme.
    pub fn transport(&self) -> Box<dyn Transport> {
        match self.base_url.strip_prefix("file://") {
            Some(path) => Box::new(FixtureTransport::new(path)),
            None => Box::new(HttpTransport),
        }
    }
}

/// Fetches a payload body.
pub trait Transport: Send + Sync {
    fn get(&self, url: &str, timeout: Duration) -> std::result::Result<String, String>;
}

pub struct HttpTransport;

impl Transport for HttpTransport {
    fn get(&self, url: &str, timeout: Duration) -> std::result::Result<String, String> {
        let agent: ureq::Agent = ureq::Agent::config_builder().timeout_global(Some(timeout)).build().into();
        let mut resp = agent.get(url).call().map_err(|e| e.to_string())?;
        resp.body_mut().read_to_string().map_err(|e| e.to_string())
    }
}

/// Serves one file regardless of the query.
pub struct FixtureTransport {
    path: PathBuf,
}

impl FixtureTransport {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        FixtureTransport { path: path.into() }
    }
}

impl Transport for FixtureTransport {
    fn get(&self, _url: &str, _timeout: Duration) -> std::result::Result<String, String> {
        std::fs::read_to_string(&self.path).map_err(|e| format!("{}: {e}", self.path.display()))
    }
}

/// A field and whether it came from cache after a failed refresh.
#[derive(Debug, Clone)]
pub struct Fetched {
    pub field: Arc<WindField>,
    pub stale: bool,
}

struct Entry {
    field: Arc<WindField>,
    fetched: Instant,
}

/// Cached forecast fetching keyed by endpoint, bounding box and horizon.
pub struct WeatherClient {
    endpoint: ForecastEndpoint,
    transport: Box<dyn Transport>,
    cache: RwLock<HashMap<(String, String, u32), Entry>>,
}

impl WeatherClient {
    pub fn new(endpoint: ForecastEndpoint) -> Result<WeatherClient> {
        endpoint.validate()?;
        let transport = endpoint.transport();
        Ok(WeatherClient::with_transport(endpoint, transport))
    }

    pub fn with_transport(endpoint: ForecastEndpoint, transport: Box<dyn Transport>) -> WeatherClient {
        WeatherClient { endpoint, transport, cache: RwLock::new(HashMap::new()) }
    }

    pub fn endpoint(&self) -> &ForecastEndpoint {
        &self.endpoint
    }

    fn key(&self, bbox: &BBox, hours: u32) -> (String, String, u32) {
        (self.endpoint.base_url.clone(), bbox.key(), hours)
    }

    /// Latest cached field for `bbox` and `hours`, if any, without touching the network.
    pub fn cached(&self, bbox: &BBox, hours: u32) -> Option<Arc<WindField>> {
        self.cache.read().expect("cache lock").get(&self.key(bbox, hours)).map(|e| e.field.clone())
    }

    /// Returns the cached field while it is fresh; otherwise fetches with
    /// retries. On network failure a cached field is returned marked stale.
    /// Parse and shape errors leave the cache untouched.
    pub fn fetch(&self, bbox: &BBox, hours: u32) -> Result<Fetched> {
        let key = self.key(bbox, hours);
        if let Some(e) = self.cache.read().expect("cache lock").get(&key) {
            if e.fetched.elapsed() < self.endpoint.refresh {
                return Ok(Fetched { field: e.field.clone(), stale: false });
            }
        }
        match self.download(bbox, hours) {
            Ok(field) => {
                let field = Arc::new(field);
                self.cache
                    .write()
                    .expect("cache lock")
                    .insert(key, Entry { field: field.clone(), fetched: Instant::now() });
                Ok(Fetched { field, stale: false })
            }
            Err(err @ WeatherError::Network { .. }) => match self.cached(bbox, hours) {
                Some(field) => {
                    warn!("serving stale wind field for {bbox}: {err}");
                    Ok(Fetched { field, stale: true })
                }
                None => Err(err),
            },
            Err(err) => Err(err),
        }
    }

    fn download(&self, bbox: &BBox, hours: u32) -> Result<WindField> {
        let url = self.endpoint.url(bbox, hours);
        let attempts = self.endpoint.retries + 1;
        let mut last = String::new();
        for attempt in 1..=attempts {
            debug!("fetching {url} (attempt {attempt})");
            match self.transport.get(&url, self.endpoint.timeout) {
                Ok(body) => return parse_field(&body),
                Err(e) => last = e,
            }
        }
        Err(WeatherError::Network { attempts, message: last })
    }
}
