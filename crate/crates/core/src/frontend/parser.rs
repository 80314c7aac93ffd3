use std::fmt;

use thiserror::Error;

use super::ast::*;
use super::token::{SourcePos, Span, Token, TokenKind};

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{pos}: expected {expected}, found {found}")]
pub struct ParseError {
    pub expected: String,
    pub found: String,
    pub pos: SourcePos,
}

/// All errors from one parse, in source order.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseErrors(pub Vec<ParseError>);

impl fmt::Display for ParseErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ParseErrors {}

type PResult<T> = Result<T, ParseError>;

/// Builds a syntax tree from a token list ending in `Eof`. Comment tokens are
/// ignored. On failure the parser resynchronises at the next top-level
/// keyword so several errors can be reported at once.
pub fn parse(tokens: &[Token]) -> Result<SyntaxTree, ParseErrors> {
    let toks: Vec<&Token> = tokens
        .iter()
        .filter(|t| t.kind != TokenKind::Comment)
        .collect();
    let mut p = Parser {
        toks,
        idx: 0,
        prev_end: SourcePos::START,
    };
    p.module()
}

struct Parser<'t> {
    toks: Vec<&'t Token>,
    idx: usize,
    prev_end: SourcePos,
}

const TOP_LEVEL: &[&str] = &["model", "type", "api", "import"];

impl<'t> Parser<'t> {
    fn peek(&self) -> &'t Token {
        // A token list without Eof still terminates: clamp to the last token.
        self.toks
            .get(self.idx)
            .or_else(|| self.toks.last())
            .copied()
            .expect("token list is never empty")
    }

    fn at_eof(&self) -> bool {
        self.toks.is_empty() || self.peek().kind == TokenKind::Eof
    }

    fn advance(&mut self) -> &'t Token {
        let t = self.peek();
        if self.idx < self.toks.len() {
            self.idx += 1;
        }
        self.prev_end = t.span.end;
        t
    }

    fn unexpected<T>(&self, expected: impl Into<String>) -> PResult<T> {
        let found = self.peek();
        Err(ParseError {
            expected: expected.into(),
            found: found.to_string(),
            pos: found.span.start,
        })
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.peek().is_punct(p) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> PResult<&'t Token> {
        if self.peek().is_punct(p) {
            Ok(self.advance())
        } else {
            self.unexpected(format!("'{p}'"))
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> PResult<&'t Token> {
        if self.peek().is_keyword(kw) {
            Ok(self.advance())
        } else {
            self.unexpected(format!("'{kw}'"))
        }
    }

    fn ident(&mut self) -> PResult<Ident> {
        let t = self.peek();
        if t.kind == TokenKind::Ident {
            self.advance();
            Ok(Ident::new(t.text.clone(), t.span))
        } else {
            self.unexpected("identifier")
        }
    }

    fn span_from(&self, start: SourcePos) -> Span {
        Span::new(start, self.prev_end.max(start))
    }

    fn module(&mut self) -> Result<SyntaxTree, ParseErrors> {
        if self.toks.is_empty() {
            return Ok(SyntaxTree::default());
        }
        let mut tree = SyntaxTree::default();
        let mut errors = Vec::new();
        let mut seen_decl = false;
        while !self.at_eof() {
            let t = self.peek();
            let result = match t.text.as_str() {
                "import" if t.kind == TokenKind::Keyword && !seen_decl => {
                    self.import().map(|d| tree.imports.push(d))
                }
                "model" if t.kind == TokenKind::Keyword => {
                    seen_decl = true;
                    self.model().map(|d| tree.models.push(d))
                }
                "type" if t.kind == TokenKind::Keyword => {
                    seen_decl = true;
                    self.behavior_type().map(|d| tree.behavior_types.push(d))
                }
                "api" if t.kind == TokenKind::Keyword => {
                    seen_decl = true;
                    self.api().map(|d| tree.apis.push(d))
                }
                _ if seen_decl => self.unexpected("'model', 'type' or 'api'"),
                _ => self.unexpected("'import', 'model', 'type' or 'api'"),
            };
            if let Err(e) = result {
                errors.push(e);
                self.synchronize();
            }
        }
        if errors.is_empty() {
            Ok(tree)
        } else {
            Err(ParseErrors(errors))
        }
    }

    fn synchronize(&mut self) {
        self.advance();
        while !self.at_eof() {
            let t = self.peek();
            if t.kind == TokenKind::Keyword && TOP_LEVEL.contains(&t.text.as_str()) {
                return;
            }
            self.advance();
        }
    }

    fn import(&mut self) -> PResult<ImportDecl> {
        let start = self.expect_keyword("import")?.span.start;
        let module = self.ident()?;
        self.expect_punct(";")?;
        Ok(ImportDecl {
            module,
            span: self.span_from(start),
        })
    }

    fn model(&mut self) -> PResult<ModelDecl> {
        let start = self.expect_keyword("model")?.span.start;
        let name = self.ident()?;
        self.expect_punct("{")?;
        let mut fields = vec![self.field()?];
        while self.eat_punct(",") {
            if self.peek().is_punct("}") {
                break;
            }
            fields.push(self.field()?);
        }
        self.expect_punct("}")?;
        Ok(ModelDecl {
            name,
            fields,
            span: self.span_from(start),
        })
    }

    fn field(&mut self) -> PResult<FieldDecl> {
        let name = self.ident()?;
        let start = name.span.start;
        let optional = self.eat_punct("?");
        self.expect_punct(":")?;
        let (ty, ty_span) = self.spanned_type()?;
        let mut attributes = Vec::new();
        if self.eat_punct("(") {
            attributes.push(self.attribute()?);
            while self.eat_punct(",") {
                attributes.push(self.attribute()?);
            }
            self.expect_punct(")")?;
        }
        Ok(FieldDecl {
            name,
            optional,
            ty,
            ty_span,
            attributes,
            span: self.span_from(start),
        })
    }

    fn attribute(&mut self) -> PResult<Attribute> {
        let key = self.ident()?;
        let start = key.span.start;
        self.expect_punct("=")?;
        let negative = self.eat_punct("-");
        let t = self.peek();
        let value = match t.kind {
            TokenKind::StringLit if !negative => Literal::String(t.text.clone()),
            TokenKind::BoolLit if !negative => Literal::Bool(t.text == "true"),
            TokenKind::NumberLit => {
                let n = parse_number(t)?;
                Literal::Number(if negative { -n } else { n })
            }
            _ => return self.unexpected("literal"),
        };
        self.advance();
        Ok(Attribute {
            key,
            value,
            span: self.span_from(start),
        })
    }

    fn behavior_type(&mut self) -> PResult<BehaviorTypeDecl> {
        let start = self.expect_keyword("type")?.span.start;
        let t = self.peek();
        if t.kind != TokenKind::AtIdent {
            return self.unexpected("behavior name starting with '@'");
        }
        self.advance();
        let name = Ident::new(&t.text[1..], t.span);
        self.expect_punct("=")?;
        self.expect_punct("(")?;
        let mut params = Vec::new();
        if !self.peek().is_punct(")") {
            params.push(self.spanned_type()?);
            while self.eat_punct(",") {
                params.push(self.spanned_type()?);
            }
        }
        self.expect_punct(")")?;
        self.expect_punct(":")?;
        let (return_type, return_type_span) = self.spanned_type()?;
        let (param_types, param_type_spans) = params.into_iter().unzip();
        Ok(BehaviorTypeDecl {
            name,
            param_types,
            param_type_spans,
            return_type,
            return_type_span,
            span: self.span_from(start),
        })
    }

    fn api(&mut self) -> PResult<ApiDecl> {
        let start = self.expect_keyword("api")?.span.start;
        let name = self.ident()?;
        self.expect_punct("(")?;
        let mut params = Vec::new();
        if !self.peek().is_punct(")") {
            params.push(self.param()?);
            while self.eat_punct(",") {
                params.push(self.param()?);
            }
        }
        self.expect_punct(")")?;
        self.expect_punct(":")?;
        let (return_type, return_type_span) = self.spanned_type()?;
        let request_block = self.block()?;
        self.expect_keyword("returns")?;
        let returns_block = self.block()?;
        Ok(ApiDecl {
            name,
            params,
            return_type,
            return_type_span,
            request_block,
            returns_block,
            span: self.span_from(start),
        })
    }

    fn param(&mut self) -> PResult<Param> {
        let name = self.ident()?;
        let start = name.span.start;
        self.expect_punct(":")?;
        let (ty, ty_span) = self.spanned_type()?;
        Ok(Param {
            name,
            ty,
            ty_span,
            span: self.span_from(start),
        })
    }

    fn spanned_type(&mut self) -> PResult<(TypeExpr, Span)> {
        let start = self.peek().span.start;
        let ty = self.type_expr()?;
        Ok((ty, self.span_from(start)))
    }

    fn type_expr(&mut self) -> PResult<TypeExpr> {
        if self.eat_punct("[") {
            let element = self.type_expr()?;
            self.expect_punct("]")?;
            return Ok(TypeExpr::array_of(element));
        }
        let t = self.peek();
        if t.kind != TokenKind::Ident {
            return self.unexpected("type");
        }
        self.advance();
        Ok(match t.text.as_str() {
            "string" => TypeExpr::String,
            "number" => TypeExpr::Number,
            "boolean" => TypeExpr::Boolean,
            "any" => TypeExpr::Any,
            "readable" => TypeExpr::Readable,
            "void" => TypeExpr::Void,
            "map" => {
                self.expect_punct("[")?;
                if !(self.peek().kind == TokenKind::Ident && self.peek().text == "string") {
                    return self.unexpected("'string' (map keys are strings)");
                }
                self.advance();
                self.expect_punct("]")?;
                TypeExpr::map_of(self.type_expr()?)
            }
            other => TypeExpr::Named(other.to_string()),
        })
    }

    fn block(&mut self) -> PResult<Block> {
        let start = self.expect_punct("{")?.span.start;
        let mut stmts = Vec::new();
        while !self.peek().is_punct("}") {
            if self.at_eof() {
                return self.unexpected("'}'");
            }
            stmts.push(self.stmt()?);
        }
        self.advance();
        Ok(Block {
            stmts,
            span: self.span_from(start),
        })
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let start = self.peek().span.start;
        let t = self.peek();
        let kind = if t.is_keyword("var") {
            self.advance();
            let name = self.ident()?;
            self.expect_punct("=")?;
            let init = self.expr()?;
            self.expect_punct(";")?;
            StmtKind::VarDecl { name, init }
        } else if t.is_keyword("if") {
            self.if_stmt()?
        } else if t.is_keyword("return") {
            self.advance();
            let value = self.expr()?;
            self.expect_punct(";")?;
            StmtKind::Return(value)
        } else {
            let e = self.expr()?;
            if self.peek().is_punct("=") {
                let ExprKind::PathAccess(target) = e.kind else {
                    return self.unexpected("';'");
                };
                self.advance();
                let value = self.expr()?;
                self.expect_punct(";")?;
                StmtKind::Assign { target, value }
            } else {
                self.expect_punct(";")?;
                StmtKind::Expr(e)
            }
        };
        Ok(Stmt {
            kind,
            span: self.span_from(start),
        })
    }

    fn if_stmt(&mut self) -> PResult<StmtKind> {
        self.expect_keyword("if")?;
        self.expect_punct("(")?;
        let cond = self.expr()?;
        self.expect_punct(")")?;
        let then_block = self.block()?;
        let mut else_ifs = Vec::new();
        let mut else_block = None;
        while self.peek().is_keyword("else") {
            self.advance();
            if self.peek().is_keyword("if") {
                self.advance();
                self.expect_punct("(")?;
                let c = self.expr()?;
                self.expect_punct(")")?;
                else_ifs.push((c, self.block()?));
            } else {
                else_block = Some(self.block()?);
                break;
            }
        }
        Ok(StmtKind::If {
            cond,
            then_block,
            else_ifs,
            else_block,
        })
    }

    fn expr(&mut self) -> PResult<Expr> {
        self.binary(0)
    }

    fn binary(&mut self, level: usize) -> PResult<Expr> {
        const LEVELS: &[&[(&str, BinOp)]] = &[
            &[("||", BinOp::Or)],
            &[("&&", BinOp::And)],
            &[("==", BinOp::Eq), ("!=", BinOp::Ne)],
            &[("+", BinOp::Add)],
        ];
        if level == LEVELS.len() {
            return self.primary();
        }
        let mut lhs = self.binary(level + 1)?;
        loop {
            let t = self.peek();
            let Some((_, op)) = LEVELS[level].iter().find(|(s, _)| t.is_punct(s)) else {
                return Ok(lhs);
            };
            self.advance();
            let rhs = self.binary(level + 1)?;
            let span = lhs.span.to(rhs.span);
            lhs = Expr::new(
                ExprKind::BinaryOp {
                    op: *op,
                    lhs: Box::new(lhs),
                    rhs: Box::new(rhs),
                },
                span,
            );
        }
    }

    fn args(&mut self) -> PResult<Vec<Expr>> {
        self.expect_punct("(")?;
        let mut args = Vec::new();
        if !self.peek().is_punct(")") {
            args.push(self.expr()?);
            while self.eat_punct(",") {
                args.push(self.expr()?);
            }
        }
        self.expect_punct(")")?;
        Ok(args)
    }

    fn primary(&mut self) -> PResult<Expr> {
        let t = self.peek();
        let start = t.span.start;
        let kind = match t.kind {
            TokenKind::StringLit => {
                self.advance();
                ExprKind::StringLit(t.text.clone())
            }
            TokenKind::NumberLit => {
                self.advance();
                ExprKind::NumberLit(parse_number(t)?)
            }
            TokenKind::BoolLit => {
                self.advance();
                ExprKind::BoolLit(t.text == "true")
            }
            TokenKind::Keyword if t.text == "null" => {
                self.advance();
                ExprKind::NullLit
            }
            TokenKind::TemplateStringPart => self.template()?,
            TokenKind::AtIdent => {
                self.advance();
                let name = Ident::new(&t.text[1..], t.span);
                let args = self.args()?;
                ExprKind::BehaviorCall { name, args }
            }
            TokenKind::Ident => {
                let mut segments = vec![self.ident()?];
                while self.eat_punct(".") {
                    segments.push(self.ident()?);
                }
                if self.peek().is_punct("(") {
                    if segments.len() != 2 {
                        return self.unexpected("'Module.function(...)' call");
                    }
                    let method = segments.pop().unwrap();
                    let module = segments.pop().unwrap();
                    let args = self.args()?;
                    ExprKind::Call {
                        module,
                        method,
                        args,
                    }
                } else {
                    ExprKind::PathAccess(segments)
                }
            }
            TokenKind::Punct if t.text == "{" => self.map_lit()?,
            TokenKind::Punct if t.text == "(" => {
                self.advance();
                let mut inner = self.expr()?;
                self.expect_punct(")")?;
                inner.span = self.span_from(start);
                return Ok(inner);
            }
            _ => return self.unexpected("expression"),
        };
        Ok(Expr::new(kind, self.span_from(start)))
    }

    fn template(&mut self) -> PResult<ExprKind> {
        let mut parts = Vec::new();
        let first = self.advance();
        parts.push(TemplatePart::Lit(first.text.clone()));
        while self.peek().is_punct("${") {
            self.advance();
            parts.push(TemplatePart::Expr(self.expr()?));
            self.expect_punct("}")?;
            let t = self.peek();
            if t.kind != TokenKind::TemplateStringPart {
                return self.unexpected("template string continuation");
            }
            self.advance();
            parts.push(TemplatePart::Lit(t.text.clone()));
        }
        // Drop empty literal fragments but keep at least one part.
        let mut parts: Vec<TemplatePart> = parts
            .into_iter()
            .filter(|p| !matches!(p, TemplatePart::Lit(s) if s.is_empty()))
            .collect();
        if parts.is_empty() {
            parts.push(TemplatePart::Lit(String::new()));
        }
        Ok(ExprKind::TemplateString(parts))
    }

    fn map_lit(&mut self) -> PResult<ExprKind> {
        self.expect_punct("{")?;
        let mut entries = Vec::new();
        while !self.peek().is_punct("}") {
            let t = self.peek();
            let key = match t.kind {
                TokenKind::Ident | TokenKind::StringLit => {
                    self.advance();
                    Ident::new(t.text.clone(), t.span)
                }
                _ => return self.unexpected("map key"),
            };
            self.expect_punct("=")?;
            let value = self.expr()?;
            entries.push((key, value));
            if !self.eat_punct(",") {
                break;
            }
        }
        self.expect_punct("}")?;
        Ok(ExprKind::MapLit(entries))
    }
}

fn parse_number(t: &Token) -> PResult<f64> {
    t.text.parse::<f64>().map_err(|_| ParseError {
        expected: "number".into(),
        found: t.to_string(),
        pos: t.span.start,
    })
}
