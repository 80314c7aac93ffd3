//! Syntax tree for Tea modules.
//!
//! Every node carries a [`Span`]. Node lists keep source order. Expressions
//! also carry an optional type slot that stays empty after parsing and is
//! filled in by semantic analysis.

use std::fmt;

use serde::Serialize;

use super::token::Span;

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct SyntaxTree {
    pub imports: Vec<ImportDecl>,
    pub models: Vec<ModelDecl>,
    pub behavior_types: Vec<BehaviorTypeDecl>,
    pub apis: Vec<ApiDecl>,
}

impl SyntaxTree {
    pub fn is_empty(&self) -> bool {
        self.imports.is_empty()
            && self.models.is_empty()
            && self.behavior_types.is_empty()
            && self.apis.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Ident {
    pub name: String,
    pub span: Span,
}

impl Ident {
    pub fn new(name: impl Into<String>, span: Span) -> Self {
        Ident {
            name: name.into(),
            span,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImportDecl {
    pub module: Ident,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelDecl {
    pub name: Ident,
    pub fields: Vec<FieldDecl>,
    pub span: Span,
}

impl ModelDecl {
    pub fn field(&self, name: &str) -> Option<&FieldDecl> {
        self.fields.iter().find(|f| f.name.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldDecl {
    pub name: Ident,
    pub optional: bool,
    pub ty: TypeExpr,
    pub ty_span: Span,
    pub attributes: Vec<Attribute>,
    pub span: Span,
}

impl FieldDecl {
    pub fn attribute(&self, key: &str) -> Option<&Literal> {
        self.attributes
            .iter()
            .find(|a| a.key.name == key)
            .map(|a| &a.value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Attribute {
    pub key: Ident,
    pub value: Literal,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Literal {
    String(String),
    Number(f64),
    Bool(bool),
}

impl Literal {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Literal::Number(n) => Some(*n),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BehaviorTypeDecl {
    /// Behavior name without the leading `@`.
    pub name: Ident,
    pub param_types: Vec<TypeExpr>,
    pub param_type_spans: Vec<Span>,
    pub return_type: TypeExpr,
    pub return_type_span: Span,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApiDecl {
    pub name: Ident,
    pub params: Vec<Param>,
    pub return_type: TypeExpr,
    pub return_type_span: Span,
    pub request_block: Block,
    pub returns_block: Block,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Param {
    pub name: Ident,
    pub ty: TypeExpr,
    pub ty_span: Span,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Block {
    pub stmts: Vec<Stmt>,
    pub span: Span,
}

/// Type expressions. `Map` keys are always `String` in well-formed trees.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum TypeExpr {
    String,
    Number,
    Boolean,
    Any,
    Readable,
    Void,
    Map(Box<TypeExpr>, Box<TypeExpr>),
    Array(Box<TypeExpr>),
    Named(String),
}

impl TypeExpr {
    pub fn map_of(value: TypeExpr) -> TypeExpr {
        TypeExpr::Map(Box::new(TypeExpr::String), Box::new(value))
    }

    pub fn array_of(element: TypeExpr) -> TypeExpr {
        TypeExpr::Array(Box::new(element))
    }

    /// One representative of each variant, used to check that type
    /// mappings are total.
    pub fn all_variants() -> Vec<TypeExpr> {
        vec![
            TypeExpr::String,
            TypeExpr::Number,
            TypeExpr::Boolean,
            TypeExpr::Any,
            TypeExpr::Readable,
            TypeExpr::Void,
            TypeExpr::map_of(TypeExpr::String),
            TypeExpr::array_of(TypeExpr::Number),
            TypeExpr::Named("User".into()),
        ]
    }
}

impl fmt::Display for TypeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeExpr::String => f.write_str("string"),
            TypeExpr::Number => f.write_str("number"),
            TypeExpr::Boolean => f.write_str("boolean"),
            TypeExpr::Any => f.write_str("any"),
            TypeExpr::Readable => f.write_str("readable"),
            TypeExpr::Void => f.write_str("void"),
            TypeExpr::Map(k, v) => write!(f, "map[{k}]{v}"),
            TypeExpr::Array(e) => write!(f, "[{e}]"),
            TypeExpr::Named(n) => f.write_str(n),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum StmtKind {
    VarDecl {
        name: Ident,
        init: Expr,
    },
    Assign {
        target: Vec<Ident>,
        value: Expr,
    },
    If {
        cond: Expr,
        then_block: Block,
        else_ifs: Vec<(Expr, Block)>,
        else_block: Option<Block>,
    },
    Return(Expr),
    Expr(Expr),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum BinOp {
    Eq,
    Ne,
    And,
    Or,
    Add,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::And => "&&",
            BinOp::Or => "||",
            BinOp::Add => "+",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
    /// Filled in by semantic analysis.
    pub ty: Option<TypeExpr>,
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Expr {
            kind,
            span,
            ty: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum TemplatePart {
    Lit(String),
    Expr(Expr),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ExprKind {
    StringLit(String),
    TemplateString(Vec<TemplatePart>),
    NumberLit(f64),
    BoolLit(bool),
    NullLit,
    MapLit(Vec<(Ident, Expr)>),
    PathAccess(Vec<Ident>),
    Call {
        module: Ident,
        method: Ident,
        args: Vec<Expr>,
    },
    BehaviorCall {
        name: Ident,
        args: Vec<Expr>,
    },
    BinaryOp {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
}

pub const REQUEST: &str = "__request";
pub const RESPONSE: &str = "__response";

/// Visits every expression under `stmts`, including nested blocks.
pub fn walk_exprs<'a>(stmts: &'a [Stmt], f: &mut dyn FnMut(&'a Expr)) {
    fn expr<'a>(e: &'a Expr, f: &mut dyn FnMut(&'a Expr)) {
        f(e);
        match &e.kind {
            ExprKind::TemplateString(parts) => {
                for p in parts {
                    if let TemplatePart::Expr(e) = p {
                        expr(e, f);
                    }
                }
            }
            ExprKind::MapLit(entries) => entries.iter().for_each(|(_, e)| expr(e, f)),
            ExprKind::Call { args, .. } | ExprKind::BehaviorCall { args, .. } => {
                args.iter().for_each(|e| expr(e, f))
            }
            ExprKind::BinaryOp { lhs, rhs, .. } => {
                expr(lhs, f);
                expr(rhs, f);
            }
            _ => {}
        }
    }
    for s in stmts {
        match &s.kind {
            StmtKind::VarDecl { init: e, .. }
            | StmtKind::Assign { value: e, .. }
            | StmtKind::Return(e)
            | StmtKind::Expr(e) => expr(e, f),
            StmtKind::If {
                cond,
                then_block,
                else_ifs,
                else_block,
            } => {
                expr(cond, f);
                walk_exprs(&then_block.stmts, f);
                for (c, b) in else_ifs {
                    expr(c, f);
                    walk_exprs(&b.stmts, f);
                }
                if let Some(b) = else_block {
                    walk_exprs(&b.stmts, f);
                }
            }
        }
    }
}
