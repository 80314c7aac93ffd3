use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value as Json;
use thiserror::Error;

use super::flat::{diff, flatten, Annotation};

/// Maximum distance between a failed call and the successful call it is
/// compared against.
pub const PAIRING_WINDOW_MS: i64 = 24 * 60 * 60 * 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CallRecord {
    pub timestamp: i64,
    pub user_id: String,
    pub api: String,
    pub params: Json,
    pub success: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_code: Option<String>,
}

impl CallRecord {
    fn check(&self) -> Result<(), String> {
        match (self.success, &self.error_code) {
            (true, Some(_)) => Err("successful call carries an error_code".into()),
            (false, None) => Err("failed call has no error_code".into()),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[error("line {line}: {message}")]
pub struct MalformedRecord {
    pub line: usize,
    pub message: String,
}

/// Parsed call log. Malformed lines are skipped and reported; blank lines
/// are ignored.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CallLog {
    pub records: Vec<CallRecord>,
    pub malformed: Vec<MalformedRecord>,
}

pub fn parse_call_log(reader: impl BufRead) -> std::io::Result<CallLog> {
    let mut log = CallLog::default();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed = serde_json::from_str::<CallRecord>(&line)
            .map_err(|e| e.to_string())
            .and_then(|r| r.check().map(|()| r));
        match parsed {
            Ok(r) => log.records.push(r),
            Err(message) => log.malformed.push(MalformedRecord { line: i + 1, message }),
        }
    }
    Ok(log)
}

/// Reads a JSONL call log, transparently gunzipping it when the file starts
/// with the gzip magic bytes.
pub fn read_call_log(path: &Path) -> std::io::Result<CallLog> {
    let mut file = BufReader::new(std::fs::File::open(path)?);
    let gz = file.fill_buf()?.starts_with(&[0x1f, 0x8b]);
    if gz {
        parse_call_log(BufReader::new(flate2::read::MultiGzDecoder::new(file)))
    } else {
        parse_call_log(file)
    }
}

pub fn read_call_log_from(reader: impl Read) -> std::io::Result<CallLog> {
    parse_call_log(BufReader::new(reader))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorRow {
    pub error_code: String,
    pub annotation: Annotation,
    /// `count` over the api's paired failed calls.
    pub rate: f64,
    pub count: usize,
}

/// Per-api error analysis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamErrorTable {
    pub api: String,
    pub failed_calls: usize,
    /// Failures with a successful call to compare against; the rate
    /// denominator.
    pub paired_calls: usize,
    pub rows: Vec<ErrorRow>,
}

impl ParamErrorTable {
    /// Share of failed calls that could be paired.
    pub fn pairing_coverage(&self) -> f64 {
        if self.failed_calls == 0 {
            1.0
        } else {
            self.paired_calls as f64 / self.failed_calls as f64
        }
    }
}

/// Mergeable per-api tallies; merging is associative and commutative.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct Tally {
    failed: usize,
    paired: usize,
    counts: HashMap<(String, Annotation), usize>,
}

impl Tally {
    fn merge(mut self, other: Tally) -> Tally {
        self.failed += other.failed;
        self.paired += other.paired;
        for (k, n) in other.counts {
            *self.counts.entry(k).or_default() += n;
        }
        self
    }
}

/// Index (into `calls`) of the successful call a failure at `calls[i]` is
/// compared against: the earliest success at or after it within the
/// window, else the latest success before it within the window.
/// `calls` must be sorted by timestamp and share one (user, api).
pub fn pair_index(calls: &[&CallRecord], i: usize) -> Option<usize> {
    let t = calls[i].timestamp;
    let in_window = |j: &usize| (calls[*j].timestamp - t).abs() <= PAIRING_WINDOW_MS;
    let start = calls.partition_point(|c| c.timestamp < t);
    let forward = (start..calls.len()).find(|&j| j != i && calls[j].success);
    let backward = (0..start).rev().find(|&j| calls[j].success);
    forward.filter(in_window).or_else(|| backward.filter(in_window))
}

fn tally_partition(calls: &[&CallRecord]) -> Tally {
    let mut tally = Tally::default();
    for (i, call) in calls.iter().enumerate() {
        if call.success {
            continue;
        }
        tally.failed += 1;
        let Some(j) = pair_index(calls, i) else { continue };
        tally.paired += 1;
        let code = call.error_code.clone().unwrap_or_default();
        for a in diff(&flatten(&calls[j].params), &flatten(&call.params)).0 {
            *tally.counts.entry((code.clone(), a)).or_default() += 1;
        }
    }
    tally
}

/// Pairs every failed call with a successful call of the same user and api,
/// diffs their flattened parameters and tallies `(error_code, annotation)`
/// per api. Partitions run in parallel.
pub fn pair_and_aggregate(records: &[CallRecord]) -> BTreeMap<String, ParamErrorTable> {
    let mut partitions: HashMap<(&str, &str), Vec<&CallRecord>> = HashMap::new();
    for r in records {
        partitions.entry((&r.user_id, &r.api)).or_default().push(r);
    }
    let tallies: Vec<(String, Tally)> = partitions
        .into_par_iter()
        .map(|((_, api), mut calls)| {
            // Stable: equal timestamps keep log order.
            calls.sort_by_key(|c| c.timestamp);
            (api.to_string(), tally_partition(&calls))
        })
        .collect();

    let mut per_api: BTreeMap<String, Tally> = BTreeMap::new();
    for (api, t) in tallies {
        let merged = per_api.remove(&api).unwrap_or_default().merge(t);
        per_api.insert(api, merged);
    }
    per_api
        .into_iter()
        .filter(|(_, t)| t.failed > 0)
        .map(|(api, t)| {
            let mut rows: Vec<ErrorRow> = t
                .counts
                .into_iter()
                .map(|((error_code, annotation), count)| ErrorRow {
                    error_code,
                    annotation,
                    rate: count as f64 / t.paired as f64,
                    count,
                })
                .collect();
            rows.sort_by(|a, b| {
                b.count
                    .cmp(&a.count)
                    .then_with(|| a.error_code.cmp(&b.error_code))
                    .then_with(|| a.annotation.cmp(&b.annotation))
            });
            let table = ParamErrorTable {
                api: api.clone(),
                failed_calls: t.failed,
                paired_calls: t.paired,
                rows,
            };
            (api, table)
        })
        .collect()
}

/// Successful calls over all calls, per api.
pub fn success_rates(records: &[CallRecord]) -> BTreeMap<String, f64> {
    let mut counts: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for r in records {
        let e = counts.entry(&r.api).or_default();
        e.1 += 1;
        if r.success {
            e.0 += 1;
        }
    }
    counts
        .into_iter()
        .map(|(api, (ok, all))| (api.to_string(), ok as f64 / all as f64))
        .collect()
}
