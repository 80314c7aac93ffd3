use std::collections::BTreeMap;
use std::fmt;

use serde::{Serialize, Serializer};
use serde_json::Value as Json;

/// Request parameters split to the finest granularity: dotted path to a
/// scalar rendering. Containers with children keep a bare entry holding a
/// `{}` / `[]` marker, so a parameter that vanished entirely shows up both
/// as itself and as each of its leaves.
pub type FlatParamMap = BTreeMap<String, String>;

/// Marker stored for object-valued parents (and empty objects).
pub const OBJECT_MARKER: &str = "{}";
/// Marker stored for array-valued parents (and empty arrays).
pub const ARRAY_MARKER: &str = "[]";

/// Strings render verbatim; other scalars as compact JSON.
pub fn render_scalar(v: &Json) -> String {
    match v {
        Json::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Flattens a parameter object. String values holding a JSON object or
/// array are decoded and flattened beneath their key. A non-object root
/// yields one entry under the empty path.
pub fn flatten(params: &Json) -> FlatParamMap {
    let mut out = FlatParamMap::new();
    match params {
        Json::Object(map) => {
            for (k, v) in map {
                flatten_into(k.clone(), v, &mut out);
            }
        }
        Json::Array(_) => {
            out.insert(String::new(), params.to_string());
        }
        scalar => {
            out.insert(String::new(), render_scalar(scalar));
        }
    }
    out
}

fn flatten_into(path: String, v: &Json, out: &mut FlatParamMap) {
    match v {
        Json::Object(map) => {
            for (k, child) in map {
                flatten_into(format!("{path}.{k}"), child, out);
            }
            out.insert(path, OBJECT_MARKER.into());
        }
        Json::Array(items) => {
            for (i, child) in items.iter().enumerate() {
                flatten_into(format!("{path}.{i}"), child, out);
            }
            out.insert(path, ARRAY_MARKER.into());
        }
        Json::String(s) => match embedded_json(s) {
            Some(inner) => flatten_into(path, &inner, out),
            None => {
                out.insert(path, s.clone());
            }
        },
        scalar => {
            out.insert(path, render_scalar(scalar));
        }
    }
}

fn embedded_json(s: &str) -> Option<Json> {
    let t = s.trim_start();
    if !(t.starts_with('{') || t.starts_with('[')) {
        return None;
    }
    serde_json::from_str::<Json>(s)
        .ok()
        .filter(|j| j.is_object() || j.is_array())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Change {
    /// Present in the correct call only.
    Missing,
    /// Present in the wrong call only.
    Extra,
    /// Present in both with different values.
    Changed,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Annotation {
    pub change: Change,
    pub path: String,
}

impl Annotation {
    pub fn parse(text: &str) -> Annotation {
        if let Some(p) = text.strip_prefix('-') {
            Annotation { change: Change::Missing, path: p.into() }
        } else if let Some(p) = text.strip_prefix('+') {
            Annotation { change: Change::Extra, path: p.into() }
        } else {
            Annotation { change: Change::Changed, path: text.into() }
        }
    }
}

impl fmt::Display for Annotation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.change {
            Change::Missing => write!(f, "-{}", self.path),
            Change::Extra => write!(f, "+{}", self.path),
            Change::Changed => f.write_str(&self.path),
        }
    }
}

impl Serialize for Annotation {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Annotations ordered missing first, then extra, then changed; each group
/// by path.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct DiffReport(pub Vec<Annotation>);

impl DiffReport {
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Annotation> {
        self.0.iter()
    }

    pub fn strings(&self) -> Vec<String> {
        self.0.iter().map(Annotation::to_string).collect()
    }
}

pub fn diff(correct: &FlatParamMap, wrong: &FlatParamMap) -> DiffReport {
    let mut out = Vec::new();
    for (k, v) in correct {
        match wrong.get(k) {
            None => out.push(Annotation { change: Change::Missing, path: k.clone() }),
            Some(w) if w != v => out.push(Annotation { change: Change::Changed, path: k.clone() }),
            Some(_) => {}
        }
    }
    for k in wrong.keys().filter(|k| !correct.contains_key(*k)) {
        out.push(Annotation { change: Change::Extra, path: k.clone() });
    }
    // Change orders Missing < Extra < Changed, then paths compare bytewise.
    out.sort();
    DiffReport(out)
}

/// `diff(flatten(correct), flatten(wrong))`.
pub fn diff_params(correct: &Json, wrong: &Json) -> DiffReport {
    diff(&flatten(correct), &flatten(wrong))
}
