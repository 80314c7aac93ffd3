//! SDK emitters.
//!
//! Every target turns a checked [`SemanticModule`] into a [`FileSet`]:
//! one data structure per model (with its constraint metadata), one client
//! method per api and one overridable hook per behavior type. Statements and
//! expressions are lowered by structural recursion over the typed tree;
//! only file skeletons are fixed text. Generated clients run on a small
//! per-target core shipped alongside them.

mod code;
mod names;
mod python;
mod typescript;

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::frontend::{Span, TypeExpr};
use crate::semantics::{SemanticModule, ValidationReport};
use crate::value::Value;

pub use names::{IdentStyle, Namer};
pub use python::PythonEmitter;
pub use typescript::TypeScriptEmitter;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CodegenError {
    #[error("target '{target}' cannot express {what} at {line}:{column}", line = .span.start.line, column = .span.start.column)]
    UnsupportedConstruct {
        target: String,
        span: Span,
        what: String,
    },
    #[error("module has errors; fix diagnostics before generating code")]
    ModuleHasErrors,
    #[error("unknown target '{0}'")]
    UnknownTarget(String),
    #[error("unknown api '{0}'")]
    UnknownApi(String),
    #[error("invalid sample arguments: {0}")]
    InvalidArgs(ValidationReport),
}

/// Static description of an output language.
#[derive(Clone, Copy)]
pub struct EmitterTarget {
    pub target_id: &'static str,
    pub file_extension: &'static str,
    /// Style applied to method and variable names.
    pub identifier_style: IdentStyle,
    type_name: fn(&TypeExpr) -> String,
    string_literal: fn(&str) -> String,
}

impl fmt::Debug for EmitterTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EmitterTarget")
            .field("target_id", &self.target_id)
            .field("file_extension", &self.file_extension)
            .field("identifier_style", &self.identifier_style)
            .finish()
    }
}

impl PartialEq for EmitterTarget {
    fn eq(&self, other: &Self) -> bool {
        self.target_id == other.target_id
    }
}

impl EmitterTarget {
    /// Target-language spelling of a DSL type.
    pub fn map_type(&self, ty: &TypeExpr) -> String {
        (self.type_name)(ty)
    }

    pub fn render_string(&self, s: &str) -> String {
        (self.string_literal)(s)
    }
}

/// Generated files keyed by relative path; iteration is path-ordered.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FileSet {
    files: BTreeMap<String, String>,
}

#[derive(Serialize)]
struct ManifestEntry<'a> {
    path: &'a str,
    sha256: String,
    bytes: usize,
}

impl FileSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Panics on absolute paths or `..` segments; emitters only produce
    /// fixed relative names.
    pub fn insert(&mut self, path: impl Into<String>, text: impl Into<String>) {
        let path = path.into();
        assert!(
            !path.starts_with('/') && !path.split('/').any(|s| s == ".." || s.is_empty()),
            "invalid generated path {path:?}"
        );
        self.files.insert(path, text.into());
    }

    pub fn get(&self, path: &str) -> Option<&str> {
        self.files.get(path).map(String::as_str)
    }

    pub fn paths(&self) -> impl Iterator<Item = &str> {
        self.files.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.files.iter().map(|(p, t)| (p.as_str(), t.as_str()))
    }

    pub fn len(&self) -> usize {
        self.files.len()
    }

    pub fn is_empty(&self) -> bool {
        self.files.is_empty()
    }

    /// `fileset.json`: generated paths with a SHA-256 digest of each file.
    pub fn manifest(&self) -> String {
        let entries: Vec<_> = self
            .files
            .iter()
            .map(|(path, text)| ManifestEntry {
                path,
                sha256: hex_digest(text.as_bytes()),
                bytes: text.len(),
            })
            .collect();
        let mut out = serde_json::to_string_pretty(&serde_json::json!({ "files": entries }))
            .expect("manifest serializes");
        out.push('\n');
        out
    }

    /// Writes every file plus `fileset.json` under `dir`.
    pub fn write_to(&self, dir: &std::path::Path) -> std::io::Result<()> {
        for (path, text) in &self.files {
            let full = dir.join(path);
            if let Some(parent) = full.parent() {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(full, text)?;
        }
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("fileset.json"), self.manifest())
    }
}

fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// A code generator for one target.
pub trait Emitter: Send + Sync {
    fn target(&self) -> EmitterTarget;

    fn emit_module(&self, module: &SemanticModule) -> Result<FileSet, CodegenError>;

    /// A standalone snippet that builds `args` and calls the client method.
    fn emit_sample(
        &self,
        module: &SemanticModule,
        api: &str,
        args: &BTreeMap<String, Value>,
    ) -> Result<String, CodegenError>;
}

fn emitters() -> Vec<Box<dyn Emitter>> {
    vec![Box::new(PythonEmitter), Box::new(TypeScriptEmitter)]
}

/// Built-in targets, in registration order.
pub fn list_targets() -> Vec<EmitterTarget> {
    emitters().iter().map(|e| e.target()).collect()
}

pub fn find_target(target_id: &str) -> Option<EmitterTarget> {
    list_targets().into_iter().find(|t| t.target_id == target_id)
}

fn emitter_for(target: &EmitterTarget) -> Result<Box<dyn Emitter>, CodegenError> {
    emitters()
        .into_iter()
        .find(|e| e.target().target_id == target.target_id)
        .ok_or_else(|| CodegenError::UnknownTarget(target.target_id.to_string()))
}

pub fn emit(module: &SemanticModule, target: &EmitterTarget) -> Result<FileSet, CodegenError> {
    if module.has_errors() {
        return Err(CodegenError::ModuleHasErrors);
    }
    emitter_for(target)?.emit_module(module)
}

pub fn emit_code_sample(
    module: &SemanticModule,
    api: &str,
    args: &BTreeMap<String, Value>,
    target: &EmitterTarget,
) -> Result<String, CodegenError> {
    if module.has_errors() {
        return Err(CodegenError::ModuleHasErrors);
    }
    let decl = module
        .apis
        .get(api)
        .ok_or_else(|| CodegenError::UnknownApi(api.to_string()))?;
    crate::runtime::validate_args(module, decl, args).map_err(CodegenError::InvalidArgs)?;
    emitter_for(target)?.emit_sample(module, api, args)
}

/// Behaviors every generated core implements natively.
pub(crate) const BUILTIN_BEHAVIORS: [&str; 2] = ["toJSONString", "parseJSON"];

/// Behavior names an api calls, first use first.
pub(crate) fn behaviors_used(api: &crate::frontend::ApiDecl) -> Vec<String> {
    use crate::frontend::{walk_exprs, ExprKind};
    let mut names: Vec<String> = Vec::new();
    for block in [&api.request_block, &api.returns_block] {
        walk_exprs(&block.stmts, &mut |e| {
            if let ExprKind::BehaviorCall { name, .. } = &e.kind {
                if !names.contains(&name.name) {
                    names.push(name.name.clone());
                }
            }
        });
    }
    names
}

/// Every `var` declared in `stmts`, nested blocks included, in source order.
pub(crate) fn collect_locals<'a>(stmts: &'a [crate::frontend::Stmt], out: &mut Vec<&'a crate::frontend::Ident>) {
    use crate::frontend::StmtKind;
    for s in stmts {
        match &s.kind {
            StmtKind::VarDecl { name, .. } => out.push(name),
            StmtKind::If {
                then_block,
                else_ifs,
                else_block,
                ..
            } => {
                collect_locals(&then_block.stmts, out);
                for (_, b) in else_ifs {
                    collect_locals(&b.stmts, out);
                }
                if let Some(b) = else_block {
                    collect_locals(&b.stmts, out);
                }
            }
            _ => {}
        }
    }
}

/// Model metadata shared by all targets: field names, optionality, type
/// descriptors and constraint attributes.
pub(crate) fn model_meta(model: &crate::frontend::ModelDecl) -> serde_json::Value {
    use crate::frontend::Literal;
    let fields: Vec<_> = model
        .fields
        .iter()
        .map(|f| {
            let attrs: serde_json::Map<_, _> = f
                .attributes
                .iter()
                .map(|a| {
                    let v = match &a.value {
                        Literal::String(s) => serde_json::Value::String(s.clone()),
                        Literal::Number(n) => Value::Number(*n).to_json(),
                        Literal::Bool(b) => serde_json::Value::Bool(*b),
                    };
                    (a.key.name.clone(), v)
                })
                .collect();
            serde_json::json!({
                "name": f.name.name,
                "optional": f.optional,
                "type": type_descriptor(&f.ty),
                "attributes": attrs,
            })
        })
        .collect();
    serde_json::json!({ "name": model.name.name, "fields": fields })
}

/// Runtime type descriptor used by generated cores: a primitive name,
/// `["map", T]`, `["array", T]` or `["model", name]`.
pub(crate) fn type_descriptor(ty: &TypeExpr) -> serde_json::Value {
    use serde_json::json;
    match ty {
        TypeExpr::Map(_, v) => json!(["map", type_descriptor(v)]),
        TypeExpr::Array(e) => json!(["array", type_descriptor(e)]),
        TypeExpr::Named(n) => json!(["model", n]),
        other => json!(other.to_string()),
    }
}

#[cfg(test)]
mod tests;
