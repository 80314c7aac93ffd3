use std::collections::BTreeMap;

use serde::Serialize;

/// Outgoing half of an exchange.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HttpRequest {
    pub method: String,
    pub pathname: String,
    pub query: BTreeMap<String, String>,
    pub headers: BTreeMap<String, String>,
    pub body: Vec<u8>,
}

impl Default for HttpRequest {
    fn default() -> Self {
        HttpRequest {
            method: "GET".into(),
            pathname: String::new(),
            query: BTreeMap::new(),
            headers: BTreeMap::new(),
            body: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HttpResponse {
    pub status_code: u16,
    pub status_message: String,
    pub headers: BTreeMap<String, String>,
    pub body: Vec<u8>,
}

impl HttpResponse {
    pub fn new(status_code: u16, body: impl Into<Vec<u8>>) -> Self {
        HttpResponse {
            status_code,
            status_message: String::new(),
            headers: BTreeMap::new(),
            body: body.into(),
        }
    }
}

/// The abstract gateway record: connection target plus request and
/// (once received) response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HttpExchange {
    pub protocol: String,
    pub port: u16,
    pub host: String,
    pub request: HttpRequest,
    pub response: Option<HttpResponse>,
}

impl HttpExchange {
    pub fn new(config: &RuntimeConfig) -> Self {
        HttpExchange {
            protocol: config.default_protocol.clone(),
            port: config.default_port,
            host: String::new(),
            request: HttpRequest::default(),
            response: None,
        }
    }

    /// `protocol://host:port/pathname?query` with no escaping applied.
    pub fn url(&self) -> String {
        let mut url = format!("{}://{}:{}{}", self.protocol, self.host, self.port, self.request.pathname);
        if !self.request.query.is_empty() {
            let q: Vec<String> = self
                .request
                .query
                .iter()
                .map(|(k, v)| format!("{k}={v}"))
                .collect();
            url.push('?');
            url.push_str(&q.join("&"));
        }
        url
    }
}

/// Settings an api block inherits when it leaves them unset, plus the
/// transactional (retry) configuration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RuntimeConfig {
    /// Extra attempts after a transport failure.
    pub retry_times: u32,
    /// Fixed pause between attempts.
    pub backoff_ms: u64,
    pub timeout_ms: u64,
    pub default_protocol: String,
    pub default_port: u16,
}

impl Default for RuntimeConfig {
    fn default() -> Self {
        RuntimeConfig {
            retry_times: 0,
            backoff_ms: 100,
            timeout_ms: 30_000,
            default_protocol: "https".into(),
            default_port: 443,
        }
    }
}

impl RuntimeConfig {
    pub fn with_retries(retry_times: u32, backoff_ms: u64) -> Self {
        RuntimeConfig {
            retry_times,
            backoff_ms,
            ..Default::default()
        }
    }
}
