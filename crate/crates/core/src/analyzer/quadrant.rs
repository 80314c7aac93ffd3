use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Quadrant {
    Q1,
    Q2,
    Q3,
    Q4,
}

impl Quadrant {
    pub fn classify(coverage: f64, success_rate: f64, x0: f64, y0: f64) -> Quadrant {
        match (coverage >= x0, success_rate >= y0) {
            (true, true) => Quadrant::Q1,
            (false, true) => Quadrant::Q2,
            (false, false) => Quadrant::Q3,
            (true, false) => Quadrant::Q4,
        }
    }

    /// Governance order: Q3 first, then Q4, then Q1 and Q2 together.
    pub fn priority(self) -> u8 {
        match self {
            Quadrant::Q3 => 0,
            Quadrant::Q4 => 1,
            Quadrant::Q1 | Quadrant::Q2 => 2,
        }
    }
}

impl fmt::Display for Quadrant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadrantPoint {
    pub api: String,
    pub coverage: f64,
    pub success_rate: f64,
    pub quadrant: Quadrant,
    /// 1-based; lower ranks are governed first.
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{what} for '{api}' is {value}, outside [0, 1]")]
pub struct RangeError {
    pub api: String,
    pub what: &'static str,
    pub value: f64,
}

pub const DEFAULT_THRESHOLDS: (f64, f64) = (0.5, 0.5);

fn unit(api: &str, what: &'static str, value: f64) -> Result<(), RangeError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(RangeError { api: api.into(), what, value })
    }
}

/// Classifies `(api, coverage, success_rate)` points against `(x0, y0)`
/// and returns them in rank order. Within a priority tier, lower success
/// rates come first; remaining ties fall back to coverage, then name.
pub fn quadrant(points: &[(String, f64, f64)], thresholds: (f64, f64)) -> Result<Vec<QuadrantPoint>, RangeError> {
    let (x0, y0) = thresholds;
    unit("<thresholds>", "x0", x0)?;
    unit("<thresholds>", "y0", y0)?;
    let mut out = Vec::with_capacity(points.len());
    for (api, coverage, success_rate) in points {
        unit(api, "coverage", *coverage)?;
        unit(api, "success_rate", *success_rate)?;
        out.push(QuadrantPoint {
            api: api.clone(),
            coverage: *coverage,
            success_rate: *success_rate,
            quadrant: Quadrant::classify(*coverage, *success_rate, x0, y0),
            rank: 0,
        });
    }
    out.sort_by(|a, b| {
        a.quadrant
            .priority()
            .cmp(&b.quadrant.priority())
            .then(a.success_rate.partial_cmp(&b.success_rate).unwrap_or(Ordering::Equal))
            .then(a.coverage.partial_cmp(&b.coverage).unwrap_or(Ordering::Equal))
            .then_with(|| a.api.cmp(&b.api))
    });
    for (i, p) in out.iter_mut().enumerate() {
        p.rank = i + 1;
    }
    Ok(out)
}

/// One row of an api's parameter documentation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamDoc {
    pub name: String,
    #[serde(rename = "type", default)]
    pub ty: String,
    #[serde(default)]
    pub required: bool,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub example: String,
}

impl ParamDoc {
    pub fn documented(&self) -> bool {
        !self.description.trim().is_empty() && !self.example.trim().is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiDocSpec {
    pub api: String,
    pub parameters: Vec<ParamDoc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("documentation for '{0}' has no parameter rows")]
pub struct EmptySpec(pub String);

/// Fraction of parameter rows with both a description and an example.
pub fn coverage_rate(doc: &ApiDocSpec) -> Result<f64, EmptySpec> {
    if doc.parameters.is_empty() {
        return Err(EmptySpec(doc.api.clone()));
    }
    let done = doc.parameters.iter().filter(|p| p.documented()).count();
    Ok(done as f64 / doc.parameters.len() as f64)
}
