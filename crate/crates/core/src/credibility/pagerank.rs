//! Domain PageRank lookups, from a fixture file or the Open PageRank API.

use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::normalize_domain;

pub const DEFAULT_ENDPOINT: &str = "https://openpagerank.com/api/v1.0/getPageRank";
pub const DEFAULT_KEY_ENV: &str = "OPR_API_KEY";
/// Domains per API request.
const BATCH: usize = 100;

#[derive(Debug, Error)]
pub enum PageRankError {
    #[error("authentication failed: {0}")]
    Auth(String),
    /// Transport failure or server-side error; worth retrying.
    #[error("network error: {0}")]
    Network(String),
    #[error("unexpected response: {0}")]
    Protocol(String),
    #[error("fixture {path}: {message}")]
    Fixture { path: String, message: String },
}

impl PageRankError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, PageRankError::Network(_))
    }
}

/// A rank value; `missing` marks domains the source does not know, whose
/// value is then 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PageRank {
    pub value: f64,
    pub missing: bool,
}

impl PageRank {
    pub const MISSING: PageRank = PageRank {
        value: 0.0,
        missing: true,
    };

    pub fn known(value: f64) -> Self {
        PageRank {
            value,
            missing: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum PageRankConfig {
    /// JSON object mapping domain → rank.
    Fixture { path: String },
    Live {
        #[serde(default = "default_endpoint")]
        endpoint: String,
        /// Environment variable holding the API key.
        #[serde(default = "default_key_env")]
        api_key_env: String,
        #[serde(default = "default_retries")]
        retries: u32,
        #[serde(default = "default_timeout")]
        timeout_secs: u64,
    },
}

fn default_endpoint() -> String {
    DEFAULT_ENDPOINT.to_string()
}
fn default_key_env() -> String {
    DEFAULT_KEY_ENV.to_string()
}
fn default_retries() -> u32 {
    2
}
fn default_timeout() -> u64 {
    20
}

#[derive(Debug)]
enum Source {
    Fixture(HashMap<String, f64>),
    Live {
        endpoint: String,
        api_key: String,
        retries: u32,
        agent: ureq::Agent,
    },
}

/// Cached PageRank lookups.
#[derive(Debug)]
pub struct PageRankClient {
    source: Source,
    cache: Mutex<HashMap<String, PageRank>>,
}

impl PageRankClient {
    pub fn from_config(config: &PageRankConfig) -> Result<Self, PageRankError> {
        match config {
            PageRankConfig::Fixture { path } => Self::from_fixture_file(Path::new(path)),
            PageRankConfig::Live {
                endpoint,
                api_key_env,
                retries,
                timeout_secs,
            } => {
                let api_key = std::env::var(api_key_env).map_err(|_| {
                    PageRankError::Auth(format!("environment variable {api_key_env} is not set"))
                })?;
                Ok(Self::live(
                    endpoint,
                    &api_key,
                    *retries,
                    Duration::from_secs(*timeout_secs),
                ))
            }
        }
    }

    pub fn from_fixture(map: HashMap<String, f64>) -> Self {
        let map = map
            .into_iter()
            .map(|(d, v)| (normalize_domain(&d), v))
            .collect();
        PageRankClient {
            source: Source::Fixture(map),
            cache: Mutex::default(),
        }
    }

    pub fn from_fixture_file(path: &Path) -> Result<Self, PageRankError> {
        let fixture_err = |message: String| PageRankError::Fixture {
            path: path.display().to_string(),
            message,
        };
        let text = fs::read_to_string(path).map_err(|e| fixture_err(e.to_string()))?;
        let map: HashMap<String, f64> =
            serde_json::from_str(&text).map_err(|e| fixture_err(e.to_string()))?;
        Ok(Self::from_fixture(map))
    }

    pub fn live(endpoint: &str, api_key: &str, retries: u32, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .new_agent();
        PageRankClient {
            source: Source::Live {
                endpoint: endpoint.to_string(),
                api_key: api_key.to_string(),
                retries,
                agent,
            },
            cache: Mutex::default(),
        }
    }

    /// Rank of one domain. Live-mode failures are errors, never a silent 0.
    pub fn fetch(&self, domain: &str) -> Result<PageRank, PageRankError> {
        let domain = normalize_domain(domain);
        Ok(self.fetch_many(std::slice::from_ref(&domain))?[&domain])
    }

    /// Ranks for many domains, batching uncached live lookups.
    pub fn fetch_many(
        &self,
        domains: &[String],
    ) -> Result<HashMap<String, PageRank>, PageRankError> {
        let wanted: Vec<String> = domains.iter().map(|d| normalize_domain(d)).collect();
        let mut todo: Vec<String> = {
            let cache = self.cache.lock().expect("pagerank cache poisoned");
            wanted
                .iter()
                .filter(|d| !cache.contains_key(*d))
                .cloned()
                .collect()
        };
        todo.sort();
        todo.dedup();

        let mut fetched = HashMap::new();
        match &self.source {
            Source::Fixture(map) => {
                for d in todo {
                    let pr = map
                        .get(&d)
                        .map_or(PageRank::MISSING, |&v| PageRank::known(v));
                    fetched.insert(d, pr);
                }
            }
            Source::Live {
                endpoint,
                api_key,
                retries,
                agent,
            } => {
                for chunk in todo.chunks(BATCH) {
                    let mut attempt = 0;
                    let batch = loop {
                        match request(agent, endpoint, api_key, chunk) {
                            Err(e) if e.is_retryable() && attempt < *retries => {
                                attempt += 1;
                                std::thread::sleep(Duration::from_millis(200 << attempt));
                            }
                            other => break other?,
                        }
                    };
                    fetched.extend(batch);
                }
            }
        }

        let mut cache = self.cache.lock().expect("pagerank cache poisoned");
        cache.extend(fetched);
        Ok(wanted
            .into_iter()
            .map(|d| {
                let pr = cache[&d];
                (d, pr)
            })
            .collect())
    }
}

#[derive(Deserialize)]
struct ApiResponse {
    #[serde(default)]
    response: Vec<ApiEntry>,
}

#[derive(Deserialize)]
struct ApiEntry {
    #[serde(default)]
    status_code: u16,
    domain: String,
    #[serde(default)]
    page_rank_decimal: serde_json::Value,
}

fn request(
    agent: &ureq::Agent,
    endpoint: &str,
    api_key: &str,
    domains: &[String],
) -> Result<HashMap<String, PageRank>, PageRankError> {
    let mut req = agent.get(endpoint).header("API-OPR", api_key);
    for d in domains {
        req = req.query("domains[]", d);
    }
    let mut resp = req
        .call()
        .map_err(|e| PageRankError::Network(e.to_string()))?;
    let status = resp.status().as_u16();
    let body = resp
        .body_mut()
        .read_to_string()
        .map_err(|e| PageRankError::Network(e.to_string()))?;
    match status {
        200 => {}
        401 | 403 => {
            return Err(PageRankError::Auth(format!(
                "HTTP {status}: {}",
                body.trim()
            )))
        }
        429 | 500..=599 => return Err(PageRankError::Network(format!("HTTP {status}"))),
        _ => {
            return Err(PageRankError::Protocol(format!(
                "HTTP {status}: {}",
                body.trim()
            )))
        }
    }
    let parsed: ApiResponse =
        serde_json::from_str(&body).map_err(|e| PageRankError::Protocol(e.to_string()))?;

    let mut out: HashMap<String, PageRank> = domains
        .iter()
        .map(|d| (d.clone(), PageRank::MISSING))
        .collect();
    for entry in parsed.response {
        let value = match &entry.page_rank_decimal {
            serde_json::Value::Number(n) => n.as_f64(),
            serde_json::Value::String(s) => s.parse().ok(),
            _ => None,
        };
        let pr = match value {
            Some(v) if entry.status_code == 200 => PageRank::known(v),
            _ => PageRank::MISSING,
        };
        out.insert(normalize_domain(&entry.domain), pr);
    }
    Ok(out)
}
