//! Call-log analytics for documentation governance: parameter flattening
//! and diffing, per-parameter error aggregation, and four-quadrant
//! prioritisation by documentation coverage and call success rate.

mod flat;
mod logs;
mod quadrant;

pub use flat::{
    diff, diff_params, flatten, render_scalar, Annotation, Change, DiffReport, FlatParamMap, ARRAY_MARKER,
    OBJECT_MARKER,
};
pub use logs::{
    pair_and_aggregate, pair_index, parse_call_log, read_call_log, read_call_log_from, success_rates, CallLog,
    CallRecord, ErrorRow, MalformedRecord, ParamErrorTable, PAIRING_WINDOW_MS,
};
pub use quadrant::{coverage_rate, quadrant, ApiDocSpec, EmptySpec, ParamDoc, Quadrant, QuadrantPoint, RangeError, DEFAULT_THRESHOLDS};

use std::collections::BTreeMap;

/// `api,coverage,success_rate,quadrant,rank`
pub fn quadrant_csv(points: &[QuadrantPoint]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["api", "coverage", "success_rate", "quadrant", "rank"])
        .expect("in-memory write");
    for p in points {
        w.write_record([
            p.api.clone(),
            p.coverage.to_string(),
            p.success_rate.to_string(),
            p.quadrant.to_string(),
            p.rank.to_string(),
        ])
        .expect("in-memory write");
    }
    into_string(w)
}

/// `api,error_code,annotation,rate,count`
pub fn error_table_csv(tables: &BTreeMap<String, ParamErrorTable>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["api", "error_code", "annotation", "rate", "count"])
        .expect("in-memory write");
    for t in tables.values() {
        for r in &t.rows {
            w.write_record([
                t.api.clone(),
                r.error_code.clone(),
                r.annotation.to_string(),
                r.rate.to_string(),
                r.count.to_string(),
            ])
            .expect("in-memory write");
        }
    }
    into_string(w)
}

fn into_string(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv of strings is utf-8")
}
