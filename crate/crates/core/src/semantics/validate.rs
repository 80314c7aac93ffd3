//! Constraint checking of runtime values against declared models.

use std::fmt;

use regex::Regex;
use serde::Serialize;
use thiserror::Error;

use super::SemanticModule;
use crate::frontend::{FieldDecl, Literal, TypeExpr};
use crate::num::format_number;
use crate::value::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    MissingRequired,
    Pattern,
    Min,
    Max,
    TypeMismatch,
}

impl Rule {
    pub fn as_str(self) -> &'static str {
        match self {
            Rule::MissingRequired => "missing-required",
            Rule::Pattern => "pattern",
            Rule::Min => "min",
            Rule::Max => "max",
            Rule::TypeMismatch => "type-mismatch",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    /// Dotted path to the offending field; empty for the root value.
    pub path: String,
    pub rule: Rule,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    fn from_violations(violations: Vec<Violation>) -> Self {
        ValidationReport {
            ok: violations.is_empty(),
            violations,
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            let path = if v.path.is_empty() { "<value>" } else { &v.path };
            write!(f, "{path}: {} ({})", v.rule, v.detail)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown model '{0}'")]
pub struct UnknownModel(pub String);

/// Checks `value` against the model named `model_name`.
///
/// Required fields must be present and non-null, primitive types must
/// match, `pattern` must match somewhere in the text (numbers are matched
/// on their decimal rendering), and `min`/`max` bounds are inclusive.
/// `minLength`/`maxLength` report as `min`/`max` violations. Nested model
/// fields are checked recursively; undeclared keys are ignored.
pub fn validate_value(
    model_name: &str,
    value: &Value,
    module: &SemanticModule,
) -> Result<ValidationReport, UnknownModel> {
    if !module.models.contains_key(model_name) {
        return Err(UnknownModel(model_name.to_string()));
    }
    Ok(validate_type(&TypeExpr::Named(model_name.to_string()), value, module))
}

/// Like [`validate_value`] but for any declared type. A null value passes
/// only for `any`.
pub fn validate_type(ty: &TypeExpr, value: &Value, module: &SemanticModule) -> ValidationReport {
    let mut v = Validator {
        module,
        violations: Vec::new(),
    };
    v.check(String::new(), ty, value);
    ValidationReport::from_violations(v.violations)
}

struct Validator<'m> {
    module: &'m SemanticModule,
    violations: Vec<Violation>,
}

fn join(path: &str, seg: &str) -> String {
    if path.is_empty() {
        seg.to_string()
    } else {
        format!("{path}.{seg}")
    }
}

impl Validator<'_> {
    fn push(&mut self, path: &str, rule: Rule, detail: String) {
        self.violations.push(Violation {
            path: path.to_string(),
            rule,
            detail,
        });
    }

    fn mismatch(&mut self, path: &str, ty: &TypeExpr, value: &Value) {
        self.push(
            path,
            Rule::TypeMismatch,
            format!("expected {ty}, found {}", value.kind_name()),
        );
    }

    /// Returns false when `value` does not have the shape of `ty` at all.
    fn check(&mut self, path: String, ty: &TypeExpr, value: &Value) -> bool {
        match (ty, value) {
            (TypeExpr::Any, _) => {}
            (TypeExpr::String, Value::String(_))
            | (TypeExpr::Number, Value::Number(_))
            | (TypeExpr::Boolean, Value::Bool(_))
            | (TypeExpr::Readable, Value::String(_) | Value::Bytes(_))
            | (TypeExpr::Void, Value::Null) => {}
            (TypeExpr::Map(_, vt), Value::Map(m)) => {
                for (k, item) in m {
                    self.check(join(&path, k), vt, item);
                }
            }
            (TypeExpr::Array(et), Value::Array(items)) => {
                for (i, item) in items.iter().enumerate() {
                    self.check(join(&path, &i.to_string()), et, item);
                }
            }
            (TypeExpr::Named(name), Value::Map(m)) => {
                let Some(model) = self.module.models.get(name) else {
                    return true;
                };
                for field in &model.fields {
                    let fpath = join(&path, &field.name.name);
                    match m.get(&field.name.name) {
                        None | Some(Value::Null) => {
                            if !field.optional {
                                self.push(&fpath, Rule::MissingRequired, "required field is missing".into());
                            }
                        }
                        Some(v) => {
                            if self.check(fpath.clone(), &field.ty, v) {
                                self.constraints(&fpath, field, v);
                            }
                        }
                    }
                }
            }
            _ => {
                self.mismatch(&path, ty, value);
                return false;
            }
        }
        true
    }

    fn constraints(&mut self, path: &str, field: &FieldDecl, value: &Value) {
        if let Some(Literal::String(src)) = field.attribute("pattern") {
            let text = match value {
                Value::String(s) => Some(s.clone()),
                Value::Number(n) => Some(format_number(*n)),
                _ => None,
            };
            if let Some(text) = text {
                let matched = match self.module.patterns.get(src) {
                    Some(re) => re.is_match(&text),
                    None => Regex::new(src).map(|re| re.is_match(&text)).unwrap_or(false),
                };
                if !matched {
                    self.push(
                        path,
                        Rule::Pattern,
                        format!("'{text}' does not match pattern '{src}'"),
                    );
                }
            }
        }
        if let Value::Number(n) = value {
            if let Some(min) = field.attribute("min").and_then(Literal::as_f64) {
                if *n < min {
                    self.push(path, Rule::Min, format!("{} < {}", format_number(*n), format_number(min)));
                }
            }
            if let Some(max) = field.attribute("max").and_then(Literal::as_f64) {
                if *n > max {
                    self.push(path, Rule::Max, format!("{} > {}", format_number(*n), format_number(max)));
                }
            }
        }
        let len = match value {
            Value::String(s) => Some(s.chars().count()),
            Value::Array(a) => Some(a.len()),
            _ => None,
        };
        if let Some(len) = len {
            let len_f = len as f64;
            if let Some(min) = field.attribute("minLength").and_then(Literal::as_f64) {
                if len_f < min {
                    self.push(path, Rule::Min, format!("length {len} < {}", format_number(min)));
                }
            }
            if let Some(max) = field.attribute("maxLength").and_then(Literal::as_f64) {
                if len_f > max {
                    self.push(path, Rule::Max, format!("length {len} > {}", format_number(max)));
                }
            }
        }
    }
}
