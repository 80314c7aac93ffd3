//! Name resolution, type checking and model-constraint validation.

mod builtins;
mod checker;
mod validate;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use regex::Regex;
use serde::Serialize;

use crate::frontend::{ApiDecl, BehaviorTypeDecl, ModelDecl, Span, SyntaxTree};

pub use builtins::{
    builtin_modules, request_field, response_field, BuiltinModuleDescriptor, FunctionSig,
    ATTRIBUTE_KEYS,
};
pub use validate::{validate_type, validate_value, Rule, UnknownModel, ValidationReport, Violation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: String,
    pub message: String,
    pub span: Span,
}

impl Diagnostic {
    /// `file:line:col: severity[code]: message`
    pub fn render(&self, file: &str) -> String {
        format!(
            "{file}:{}:{}: {}[{}]: {}",
            self.span.start.line, self.span.start.column, self.severity, self.code, self.message
        )
    }
}

/// A name-resolved, type-annotated module.
///
/// `apis` hold copies of the parsed declarations with every expression's
/// `ty` slot filled in.
#[derive(Debug, Clone)]
pub struct SemanticModule {
    pub models: BTreeMap<String, ModelDecl>,
    pub behaviors: BTreeMap<String, BehaviorTypeDecl>,
    pub apis: BTreeMap<String, ApiDecl>,
    pub imports: BTreeMap<String, BuiltinModuleDescriptor>,
    pub diagnostics: Vec<Diagnostic>,
    pub(crate) patterns: HashMap<String, Regex>,
}

impl SemanticModule {
    pub fn has_errors(&self) -> bool {
        self.diagnostics.iter().any(|d| d.severity == Severity::Error)
    }

    pub fn errors(&self) -> impl Iterator<Item = &Diagnostic> {
        self.diagnostics
            .iter()
            .filter(|d| d.severity == Severity::Error)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Diagnostic> {
        self.diagnostics
            .iter()
            .filter(|d| d.severity == Severity::Warning)
    }

    /// Models in declaration order.
    pub fn models_in_order(&self) -> Vec<&ModelDecl> {
        let mut v: Vec<_> = self.models.values().collect();
        v.sort_by_key(|m| m.span);
        v
    }

    /// Apis in declaration order.
    pub fn apis_in_order(&self) -> Vec<&ApiDecl> {
        let mut v: Vec<_> = self.apis.values().collect();
        v.sort_by_key(|a| a.span);
        v
    }

    /// Behavior types in declaration order.
    pub fn behaviors_in_order(&self) -> Vec<&BehaviorTypeDecl> {
        let mut v: Vec<_> = self.behaviors.values().collect();
        v.sort_by_key(|b| b.span);
        v
    }
}

/// Resolves names and checks types. Never fails outright: problems are
/// reported as diagnostics sorted by source position, and
/// [`SemanticModule::has_errors`] tells whether the module is usable.
pub fn analyze(tree: &SyntaxTree) -> SemanticModule {
    checker::analyze(tree)
}
