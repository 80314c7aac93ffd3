use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Mutex;
use std::time::Duration;

use serde::Deserialize;
use thiserror::Error;

use super::exchange::{HttpExchange, HttpResponse};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("transport error: {message}")]
pub struct TransportError {
    pub message: String,
}

impl TransportError {
    pub fn new(message: impl Into<String>) -> Self {
        TransportError {
            message: message.into(),
        }
    }
}

/// Sends a populated request and returns the response.
///
/// Implementations only read the exchange; the runtime owns it.
pub trait Transport {
    fn send(&self, exchange: &HttpExchange, timeout: Duration) -> Result<HttpResponse, TransportError>;
}

impl<T: Transport + ?Sized> Transport for &T {
    fn send(&self, exchange: &HttpExchange, timeout: Duration) -> Result<HttpResponse, TransportError> {
        (**self).send(exchange, timeout)
    }
}

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error("cannot read mock fixture {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid mock fixture: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid mock fixture: rule {index}: {message}")]
    Rule { index: usize, message: String },
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleMatch {
    pub method: Option<String>,
    pub pathname: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct RuleResponse {
    pub status_code: Option<u16>,
    pub status_message: Option<String>,
    #[serde(default)]
    pub headers: BTreeMap<String, String>,
    pub body: Option<serde_json::Value>,
    /// When set, the rule simulates a transport failure instead.
    pub error: Option<String>,
}

/// One `match`/`respond` pair of a mock fixture.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MockRule {
    #[serde(rename = "match", default)]
    pub matcher: RuleMatch,
    pub respond: RuleResponse,
    /// Maximum number of requests this rule answers; unlimited when absent.
    pub times: Option<u32>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum FixtureFile {
    Rules(Vec<MockRule>),
    Wrapped { rules: Vec<MockRule> },
}

/// Rule-driven transport for tests and offline invocation. Rules are tried
/// in order and the first match wins; unmatched requests get a 404.
#[derive(Debug)]
pub struct MockTransport {
    rules: Vec<MockRule>,
    hits: Mutex<Vec<u32>>,
    log: Mutex<Vec<HttpExchange>>,
}

impl MockTransport {
    pub fn new(rules: Vec<MockRule>) -> Result<Self, FixtureError> {
        for (index, r) in rules.iter().enumerate() {
            match (r.respond.error.is_some(), r.respond.status_code) {
                (false, None) => {
                    return Err(FixtureError::Rule {
                        index,
                        message: "respond needs either 'statusCode' or 'error'".into(),
                    })
                }
                (false, Some(code)) if !(100..=599).contains(&code) => {
                    return Err(FixtureError::Rule {
                        index,
                        message: format!("status code {code} outside 100-599"),
                    })
                }
                _ => {}
            }
        }
        let n = rules.len();
        Ok(MockTransport {
            rules,
            hits: Mutex::new(vec![0; n]),
            log: Mutex::new(Vec::new()),
        })
    }

    /// Parses a fixture: either a JSON array of rules or `{"rules": [...]}`.
    pub fn from_json(text: &str) -> Result<Self, FixtureError> {
        let rules = match serde_json::from_str::<FixtureFile>(text)? {
            FixtureFile::Rules(r) | FixtureFile::Wrapped { rules: r } => r,
        };
        Self::new(rules)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, FixtureError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| FixtureError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    /// Every exchange sent so far, including failed attempts.
    pub fn requests(&self) -> Vec<HttpExchange> {
        self.log.lock().expect("mock log poisoned").clone()
    }

    pub fn attempts(&self) -> usize {
        self.log.lock().expect("mock log poisoned").len()
    }
}

impl Transport for MockTransport {
    fn send(&self, exchange: &HttpExchange, _timeout: Duration) -> Result<HttpResponse, TransportError> {
        self.log
            .lock()
            .expect("mock log poisoned")
            .push(exchange.clone());
        let mut hits = self.hits.lock().expect("mock hits poisoned");
        let req = &exchange.request;
        let found = self.rules.iter().enumerate().find(|(i, r)| {
            r.matcher.method.as_ref().is_none_or(|m| *m == req.method)
                && r.matcher.pathname.as_ref().is_none_or(|p| *p == req.pathname)
                && r.times.is_none_or(|t| hits[*i] < t)
        });
        let Some((i, rule)) = found else {
            let mut resp = HttpResponse::new(404, Vec::new());
            resp.status_message = "Not Found".into();
            return Ok(resp);
        };
        hits[i] += 1;
        let r = &rule.respond;
        if let Some(message) = &r.error {
            return Err(TransportError::new(message.clone()));
        }
        let body = match &r.body {
            None => Vec::new(),
            Some(serde_json::Value::String(s)) => s.clone().into_bytes(),
            Some(other) => other.to_string().into_bytes(),
        };
        Ok(HttpResponse {
            status_code: r.status_code.unwrap_or(200),
            status_message: r.status_message.clone().unwrap_or_default(),
            headers: r.headers.clone(),
            body,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runtime::RuntimeConfig;

    fn exchange(method: &str, path: &str) -> HttpExchange {
        let mut ex = HttpExchange::new(&RuntimeConfig::default());
        ex.request.method = method.into();
        ex.request.pathname = path.into();
        ex
    }

    #[test]
    fn first_match_wins_and_unmatched_is_404() {
        let t = MockTransport::from_json(
            r#"[
                {"match": {"pathname": "/a"}, "respond": {"statusCode": 201, "body": {"x": 1}}},
                {"match": {}, "respond": {"statusCode": 500, "body": "boom"}}
            ]"#,
        )
        .unwrap();
        let r = t.send(&exchange("GET", "/a"), Duration::ZERO).unwrap();
        assert_eq!(r.status_code, 201);
        assert_eq!(r.body, br#"{"x":1}"#);
        let r = t.send(&exchange("POST", "/b"), Duration::ZERO).unwrap();
        assert_eq!((r.status_code, r.body.as_slice()), (500, &b"boom"[..]));
        assert_eq!(t.attempts(), 2);

        let empty = MockTransport::from_json(r#"{"rules": []}"#).unwrap();
        let r = empty.send(&exchange("GET", "/"), Duration::ZERO).unwrap();
        assert_eq!(r.status_code, 404);
    }

    #[test]
    fn times_limits_a_rule() {
        let t = MockTransport::from_json(
            r#"[
                {"respond": {"error": "connection reset"}, "times": 2},
                {"respond": {"statusCode": 200}}
            ]"#,
        )
        .unwrap();
        let ex = exchange("GET", "/");
        assert!(t.send(&ex, Duration::ZERO).is_err());
        assert!(t.send(&ex, Duration::ZERO).is_err());
        assert_eq!(t.send(&ex, Duration::ZERO).unwrap().status_code, 200);
    }

    #[test]
    fn rejects_bad_rules() {
        assert!(MockTransport::from_json(r#"[{"respond": {}}]"#).is_err());
        assert!(MockTransport::from_json(r#"[{"respond": {"statusCode": 42}}]"#).is_err());
        assert!(MockTransport::from_json(r#"[{"respond": {"statusCode": 200}, "extra": 1}]"#).is_err());
    }
}
