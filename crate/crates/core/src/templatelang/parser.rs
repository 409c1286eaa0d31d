//! Recursive-descent parser producing the raw syntax tree.
//!
//! Type names must be declared before use (as in C) because a statement
//! starting with `Foo bar` is only a declaration when `Foo` names a type.

use std::collections::HashSet;
use std::sync::Arc;

use super::ast::*;
use super::lexer::{Tok, Token};
use super::native::{NativeType, KNOWN_ATTRS};
use super::Diagnostic;

pub struct RawUnit {
    pub typedefs: Vec<TypeDef>,
    pub functions: Vec<FunctionDef>,
    pub toplevel: Vec<Stmt>,
    pub warnings: Vec<Diagnostic>,
}

pub struct Parser {
    toks: Vec<Token>,
    pos: usize,
    type_names: HashSet<String>,
    warnings: Vec<Diagnostic>,
    typedefs: Vec<TypeDef>,
}

type PResult<T> = Result<T, Diagnostic>;

const ASSIGN_OPS: &[(&str, AssignOp)] = &[
    ("=", AssignOp::Set),
    ("+=", AssignOp::Add),
    ("-=", AssignOp::Sub),
    ("*=", AssignOp::Mul),
    ("/=", AssignOp::Div),
    ("%=", AssignOp::Rem),
    ("<<=", AssignOp::Shl),
    (">>=", AssignOp::Shr),
    ("&=", AssignOp::And),
    ("^=", AssignOp::Xor),
    ("|=", AssignOp::Or),
];

const BIN_OPS: &[(&str, BinOp)] = &[
    ("*", BinOp::Mul),
    ("/", BinOp::Div),
    ("%", BinOp::Rem),
    ("+", BinOp::Add),
    ("-", BinOp::Sub),
    ("<<", BinOp::Shl),
    (">>", BinOp::Shr),
    ("<", BinOp::Lt),
    ("<=", BinOp::Le),
    (">", BinOp::Gt),
    (">=", BinOp::Ge),
    ("==", BinOp::Eq),
    ("!=", BinOp::Ne),
    ("&", BinOp::BitAnd),
    ("^", BinOp::BitXor),
    ("|", BinOp::BitOr),
    ("&&", BinOp::And),
    ("||", BinOp::Or),
];

/// Lowest precedence admitted inside `<key=value>` so that `>` closes the list.
const ATTR_VALUE_PREC: u8 = 9;

const KEYWORDS: &[&str] = &[
    "typedef", "struct", "union", "enum", "local", "const", "if", "else", "while", "do", "for",
    "switch", "case", "default", "break", "continue", "return",
];

fn ident(s: &str) -> Ident {
    Arc::from(s)
}

impl Parser {
    pub fn new(toks: Vec<Token>) -> Self {
        Self {
            toks,
            pos: 0,
            type_names: HashSet::new(),
            warnings: Vec::new(),
            typedefs: Vec::new(),
        }
    }

    // ---- token helpers ----

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    fn advance(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn unexpected(&self, expected: &[&str]) -> Diagnostic {
        let found = self.peek().describe();
        let mut d = Diagnostic::error(
            self.span(),
            format!("expected {}, found {found}", expected.join(" or ")),
        );
        d.expected = expected.iter().map(|s| s.to_string()).collect();
        d
    }

    fn expect_punct(&mut self, p: &'static str) -> PResult<()> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            Err(self.unexpected(&[&format!("`{p}`")]))
        }
    }

    fn expect_ident(&mut self) -> PResult<Ident> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.advance();
                Ok(ident(&s))
            }
            _ => Err(self.unexpected(&["identifier"])),
        }
    }

    fn is_type_name(&self, s: &str) -> bool {
        NativeType::lookup(s).is_some() || self.type_names.contains(s)
    }

    fn define_type(&mut self, def: TypeDef) {
        self.type_names.insert(def.name.to_string());
        self.typedefs.push(def);
    }

    // ---- top level ----

    pub fn parse_unit(mut self) -> PResult<RawUnit> {
        let mut functions = Vec::new();
        let mut toplevel = Vec::new();
        while *self.peek() != Tok::Eof {
            if self.is_kw("typedef") {
                self.parse_typedef()?;
            } else if self.is_kw("struct") && self.is_struct_definition() {
                self.parse_struct_definition()?;
            } else if self.is_kw("enum") && self.is_enum_definition() {
                self.parse_enum_definition()?;
            } else if self.is_function_definition() {
                functions.push(self.parse_function()?);
            } else {
                toplevel.push(self.parse_stmt()?);
            }
        }
        Ok(RawUnit {
            typedefs: self.typedefs,
            functions,
            toplevel,
            warnings: self.warnings,
        })
    }

    fn is_struct_definition(&self) -> bool {
        matches!(self.peek_at(1), Tok::Ident(_))
            && matches!(self.peek_at(2), Tok::Punct("{") | Tok::Punct("("))
    }

    fn is_enum_definition(&self) -> bool {
        // enum [<base>] NAME {
        let mut i = 1;
        if matches!(self.peek_at(i), Tok::Punct("<")) {
            i += 3;
        }
        matches!(self.peek_at(i), Tok::Ident(_)) && matches!(self.peek_at(i + 1), Tok::Punct("{"))
    }

    fn is_function_definition(&self) -> bool {
        let ty = match self.peek() {
            Tok::Ident(s) if self.is_type_name(s) => s,
            _ => return false,
        };
        let _ = ty;
        if !matches!(self.peek_at(1), Tok::Ident(_)) || !matches!(self.peek_at(2), Tok::Punct("(")) {
            return false;
        }
        let mut depth = 0usize;
        let mut i = 2;
        loop {
            match self.peek_at(i) {
                Tok::Punct("(") => depth += 1,
                Tok::Punct(")") => {
                    depth -= 1;
                    if depth == 0 {
                        return matches!(self.peek_at(i + 1), Tok::Punct("{"));
                    }
                }
                Tok::Eof => return false,
                _ => {}
            }
            i += 1;
        }
    }

    fn parse_params(&mut self) -> PResult<Vec<Param>> {
        self.expect_punct("(")?;
        let mut params = Vec::new();
        if self.eat_punct(")") {
            return Ok(params);
        }
        if self.is_kw("void") && matches!(self.peek_at(1), Tok::Punct(")")) {
            self.advance();
            self.advance();
            return Ok(params);
        }
        loop {
            self.eat_kw("const");
            self.eat_kw("local");
            let ty = self.parse_type_name()?;
            if self.is_punct("&") {
                return Err(Diagnostic::error(
                    self.span(),
                    "reference parameters are not supported",
                ));
            }
            let name = self.expect_ident()?;
            let is_array = if self.eat_punct("[") {
                self.expect_punct("]")?;
                true
            } else {
                false
            };
            params.push(Param { ty, name, is_array });
            if self.eat_punct(")") {
                return Ok(params);
            }
            self.expect_punct(",")?;
        }
    }

    fn parse_type_name(&mut self) -> PResult<Ident> {
        if self.eat_kw("struct") || self.eat_kw("enum") {
            return self.expect_ident();
        }
        match self.peek().clone() {
            Tok::Ident(s) if self.is_type_name(&s) => {
                self.advance();
                Ok(ident(&s))
            }
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                // Unknown type names are reported by the resolver with a better message.
                self.advance();
                Ok(ident(&s))
            }
            _ => Err(self.unexpected(&["type name"])),
        }
    }

    fn parse_function(&mut self) -> PResult<FunctionDef> {
        let span = self.span();
        let ret = self.parse_type_name()?;
        let name = self.expect_ident()?;
        let params = self.parse_params()?;
        let body = self.parse_block_body()?;
        Ok(FunctionDef {
            name,
            ret,
            params,
            body,
            span,
        })
    }

    fn parse_block_body(&mut self) -> PResult<Vec<Stmt>> {
        self.expect_punct("{")?;
        let mut body = Vec::new();
        while !self.eat_punct("}") {
            if *self.peek() == Tok::Eof {
                return Err(self.unexpected(&["`}`"]));
            }
            body.push(self.parse_stmt()?);
        }
        Ok(body)
    }

    fn parse_record_body(&mut self) -> PResult<Vec<Stmt>> {
        self.parse_block_body()
    }

    /// `<...>` attribute list after a type or declarator; returns raw attrs.
    fn parse_attrs(&mut self) -> PResult<Vec<Attr>> {
        let mut attrs = Vec::new();
        if !self.eat_punct("<") {
            return Ok(attrs);
        }
        loop {
            let span = self.span();
            let key = self.expect_ident()?;
            self.expect_punct("=")?;
            let value = self.parse_binary(ATTR_VALUE_PREC)?;
            if !KNOWN_ATTRS.contains(&&*key) {
                self.warnings.push(Diagnostic::warning(
                    span,
                    format!("unknown attribute `{key}` ignored"),
                ));
            } else {
                attrs.push(Attr { key, value });
            }
            if self.eat_punct(">") {
                return Ok(attrs);
            }
            self.expect_punct(",")?;
        }
    }

    fn parse_typedef(&mut self) -> PResult<()> {
        let span = self.span();
        self.advance(); // typedef
        if self.eat_kw("struct") {
            let tag = match self.peek() {
                Tok::Ident(_) => Some(self.expect_ident()?),
                _ => None,
            };
            let params = if self.is_punct("(") {
                self.parse_params()?
            } else {
                Vec::new()
            };
            if let Some(tag) = &tag {
                self.type_names.insert(tag.to_string());
            }
            let body = self.parse_record_body()?;
            let name = self.expect_ident()?;
            let _ = self.parse_attrs()?;
            self.expect_punct(";")?;
            self.define_type(TypeDef {
                name: name.clone(),
                kind: TypeKind::Record { params, body },
                span,
            });
            if let Some(tag) = tag.filter(|t| *t != name) {
                self.define_type(TypeDef {
                    name: tag,
                    kind: TypeKind::Alias(name),
                    span,
                });
            }
            Ok(())
        } else if self.eat_kw("enum") {
            let base = self.parse_enum_base()?;
            if matches!(self.peek(), Tok::Ident(_)) {
                self.advance(); // tag
            }
            let variants = self.parse_enum_body()?;
            let name = self.expect_ident()?;
            let _ = self.parse_attrs()?;
            self.expect_punct(";")?;
            self.define_type(TypeDef {
                name,
                kind: TypeKind::Enum { base, variants },
                span,
            });
            Ok(())
        } else if self.is_kw("union") {
            Err(Diagnostic::error(span, "unions are not supported"))
        } else {
            let target = self.parse_type_name()?;
            let name = self.expect_ident()?;
            if self.is_punct("[") {
                return Err(Diagnostic::error(self.span(), "array typedefs are not supported"));
            }
            let _ = self.parse_attrs()?;
            self.expect_punct(";")?;
            self.define_type(TypeDef {
                name,
                kind: TypeKind::Alias(target),
                span,
            });
            Ok(())
        }
    }

    fn parse_enum_base(&mut self) -> PResult<Ident> {
        if self.eat_punct("<") {
            let base = self.parse_type_name()?;
            self.expect_punct(">")?;
            Ok(base)
        } else {
            Ok(ident("int"))
        }
    }

    fn parse_enum_body(&mut self) -> PResult<Vec<EnumVariant>> {
        self.expect_punct("{")?;
        let mut variants = Vec::new();
        loop {
            if self.eat_punct("}") {
                break;
            }
            let name = self.expect_ident()?;
            let value = if self.eat_punct("=") {
                Some(self.parse_cond()?)
            } else {
                None
            };
            variants.push(EnumVariant { name, value });
            if self.eat_punct("}") {
                break;
            }
            self.expect_punct(",")?;
        }
        Ok(variants)
    }

    fn parse_struct_definition(&mut self) -> PResult<()> {
        let span = self.span();
        self.advance(); // struct
        let name = self.expect_ident()?;
        let params = if self.is_punct("(") {
            self.parse_params()?
        } else {
            Vec::new()
        };
        // Register before the body so that recursive types parse.
        self.type_names.insert(name.to_string());
        let body = self.parse_record_body()?;
        self.expect_punct(";")?;
        self.define_type(TypeDef {
            name,
            kind: TypeKind::Record { params, body },
            span,
        });
        Ok(())
    }

    fn parse_enum_definition(&mut self) -> PResult<()> {
        let span = self.span();
        self.advance(); // enum
        let base = self.parse_enum_base()?;
        let name = self.expect_ident()?;
        let variants = self.parse_enum_body()?;
        self.expect_punct(";")?;
        self.define_type(TypeDef {
            name,
            kind: TypeKind::Enum { base, variants },
            span,
        });
        Ok(())
    }

    // ---- statements ----

    fn starts_declaration(&self) -> bool {
        match self.peek() {
            Tok::Ident(s) if s == "local" || s == "const" => true,
            Tok::Ident(s) if s == "struct" || s == "enum" => true,
            Tok::Ident(s) if self.is_type_name(s) => matches!(self.peek_at(1), Tok::Ident(_)),
            _ => false,
        }
    }

    pub fn parse_stmt(&mut self) -> PResult<Stmt> {
        let span = self.span();
        let kind = if self.is_punct("{") {
            StmtKind::Block(self.parse_block_body()?)
        } else if self.eat_punct(";") {
            StmtKind::Empty
        } else if self.eat_kw("if") {
            self.expect_punct("(")?;
            let cond = self.parse_expr()?;
            self.expect_punct(")")?;
            let then = Box::new(self.parse_stmt()?);
            let els = if self.eat_kw("else") {
                Some(Box::new(self.parse_stmt()?))
            } else {
                None
            };
            StmtKind::If { cond, then, els }
        } else if self.eat_kw("while") {
            self.expect_punct("(")?;
            let cond = self.parse_expr()?;
            self.expect_punct(")")?;
            let body = Box::new(self.parse_stmt()?);
            StmtKind::While { cond, body }
        } else if self.eat_kw("do") {
            let body = Box::new(self.parse_stmt()?);
            if !self.eat_kw("while") {
                return Err(self.unexpected(&["`while`"]));
            }
            self.expect_punct("(")?;
            let cond = self.parse_expr()?;
            self.expect_punct(")")?;
            self.expect_punct(";")?;
            StmtKind::DoWhile { body, cond }
        } else if self.eat_kw("for") {
            self.expect_punct("(")?;
            let init = if self.eat_punct(";") {
                None
            } else if self.starts_declaration() {
                Some(Box::new(self.parse_decl_stmt()?))
            } else {
                let s = self.span();
                let e = self.parse_expr()?;
                self.expect_punct(";")?;
                Some(Box::new(Stmt {
                    kind: StmtKind::Expr(e),
                    span: s,
                }))
            };
            let cond = if self.is_punct(";") {
                None
            } else {
                Some(self.parse_expr()?)
            };
            self.expect_punct(";")?;
            let step = if self.is_punct(")") {
                None
            } else {
                Some(self.parse_expr()?)
            };
            self.expect_punct(")")?;
            let body = Box::new(self.parse_stmt()?);
            StmtKind::For {
                init,
                cond,
                step,
                body,
            }
        } else if self.eat_kw("switch") {
            self.expect_punct("(")?;
            let scrutinee = self.parse_expr()?;
            self.expect_punct(")")?;
            self.expect_punct("{")?;
            let mut cases: Vec<SwitchCase> = Vec::new();
            while !self.eat_punct("}") {
                if self.eat_kw("case") {
                    let label = self.parse_cond()?;
                    self.expect_punct(":")?;
                    cases.push(SwitchCase {
                        label: Some(label),
                        body: Vec::new(),
                    });
                } else if self.eat_kw("default") {
                    self.expect_punct(":")?;
                    cases.push(SwitchCase {
                        label: None,
                        body: Vec::new(),
                    });
                } else {
                    let stmt = self.parse_stmt()?;
                    match cases.last_mut() {
                        Some(c) => c.body.push(stmt),
                        None => {
                            return Err(Diagnostic::error(
                                stmt.span,
                                "statement before the first `case` label",
                            ))
                        }
                    }
                }
            }
            StmtKind::Switch { scrutinee, cases }
        } else if self.eat_kw("break") {
            self.expect_punct(";")?;
            StmtKind::Break
        } else if self.eat_kw("continue") {
            self.expect_punct(";")?;
            StmtKind::Continue
        } else if self.eat_kw("return") {
            let value = if self.is_punct(";") {
                None
            } else {
                Some(self.parse_expr()?)
            };
            self.expect_punct(";")?;
            StmtKind::Return(value)
        } else if self.is_kw("typedef") {
            return Err(Diagnostic::error(span, "typedefs are only allowed at top level"));
        } else if self.starts_declaration() {
            return self.parse_decl_stmt();
        } else {
            let e = self.parse_expr()?;
            self.expect_punct(";")?;
            StmtKind::Expr(e)
        };
        Ok(Stmt { kind, span })
    }

    fn parse_decl_stmt(&mut self) -> PResult<Stmt> {
        let span = self.span();
        let mut local = false;
        loop {
            if self.eat_kw("local") {
                local = true;
            } else if self.eat_kw("const") {
            } else {
                break;
            }
        }
        let ty = self.parse_type_name()?;
        let name = self.expect_ident()?;
        let array = if self.eat_punct("[") {
            if self.eat_punct("]") {
                Some(ArraySpec::Unsized)
            } else {
                let e = self.parse_expr()?;
                self.expect_punct("]")?;
                Some(ArraySpec::Sized(e))
            }
        } else {
            None
        };
        let mut args = Vec::new();
        if self.eat_punct("(")
            && !self.eat_punct(")") {
                loop {
                    args.push(self.parse_assign()?);
                    if self.eat_punct(")") {
                        break;
                    }
                    self.expect_punct(",")?;
                }
            }
        let mut attrs = self.parse_attrs()?;
        let init = if self.eat_punct("=") {
            if self.eat_punct("{") {
                let mut items = Vec::new();
                if !self.eat_punct("}") {
                    loop {
                        items.push(self.parse_assign()?);
                        if self.eat_punct("}") {
                            break;
                        }
                        self.expect_punct(",")?;
                        if self.eat_punct("}") {
                            break;
                        }
                    }
                }
                Some(Init::List(items))
            } else if local {
                Some(Init::Expr(self.parse_assign()?))
            } else {
                return Err(self.unexpected(&["`{` (input declarations take a choice list)"]));
            }
        } else {
            None
        };
        if attrs.is_empty() {
            attrs = self.parse_attrs()?;
        }
        self.expect_punct(";")?;
        if local && !attrs.is_empty() {
            return Err(Diagnostic::error(
                span,
                "attributes only apply to input declarations",
            ));
        }
        Ok(Stmt {
            kind: StmtKind::Decl(Box::new(VarDecl {
                local,
                ty,
                name,
                array,
                args,
                init,
                attrs,
                decl_id: None,
            })),
            span,
        })
    }

    // ---- expressions ----

    pub fn parse_expr(&mut self) -> PResult<Expr> {
        self.parse_assign()
    }

    fn parse_assign(&mut self) -> PResult<Expr> {
        let lhs = self.parse_cond()?;
        for &(sym, op) in ASSIGN_OPS {
            if self.is_punct(sym) {
                let span = self.span();
                self.advance();
                let rhs = self.parse_assign()?;
                return Ok(Expr::new(
                    ExprKind::Assign(op, Box::new(lhs), Box::new(rhs)),
                    span,
                ));
            }
        }
        Ok(lhs)
    }

    fn parse_cond(&mut self) -> PResult<Expr> {
        let c = self.parse_binary(1)?;
        if self.is_punct("?") {
            let span = self.span();
            self.advance();
            let a = self.parse_expr()?;
            self.expect_punct(":")?;
            let b = self.parse_cond()?;
            return Ok(Expr::new(
                ExprKind::Cond(Box::new(c), Box::new(a), Box::new(b)),
                span,
            ));
        }
        Ok(c)
    }

    fn peek_binop(&self) -> Option<BinOp> {
        match self.peek() {
            Tok::Punct(p) => BIN_OPS.iter().find(|(s, _)| s == p).map(|&(_, op)| op),
            _ => None,
        }
    }

    fn parse_binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.parse_unary()?;
        while let Some(op) = self.peek_binop() {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            let span = self.span();
            self.advance();
            let rhs = self.parse_binary(prec + 1)?;
            lhs = Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), span);
        }
        Ok(lhs)
    }

    fn parse_unary(&mut self) -> PResult<Expr> {
        let span = self.span();
        let op = match self.peek() {
            Tok::Punct("-") => Some(UnOp::Neg),
            Tok::Punct("+") => Some(UnOp::Plus),
            Tok::Punct("!") => Some(UnOp::Not),
            Tok::Punct("~") => Some(UnOp::BitNot),
            _ => None,
        };
        if let Some(op) = op {
            self.advance();
            let e = self.parse_unary()?;
            return Ok(Expr::new(ExprKind::Unary(op, Box::new(e)), span));
        }
        if self.is_punct("++") || self.is_punct("--") {
            let increment = self.is_punct("++");
            self.advance();
            let target = self.parse_unary()?;
            return Ok(Expr::new(
                ExprKind::IncDec {
                    prefix: true,
                    increment,
                    target: Box::new(target),
                },
                span,
            ));
        }
        self.parse_postfix()
    }

    fn parse_postfix(&mut self) -> PResult<Expr> {
        let mut e = self.parse_primary()?;
        loop {
            let span = self.span();
            if self.eat_punct("[") {
                let idx = self.parse_expr()?;
                self.expect_punct("]")?;
                e = Expr::new(ExprKind::Index(Box::new(e), Box::new(idx)), span);
            } else if self.eat_punct(".") {
                let field = self.expect_ident()?;
                e = Expr::new(ExprKind::Member(Box::new(e), field), span);
            } else if self.is_punct("(") {
                let name = match &e.kind {
                    ExprKind::Ident(n) => n.clone(),
                    _ => return Err(Diagnostic::error(span, "only named functions can be called")),
                };
                self.advance();
                let mut args = Vec::new();
                if !self.eat_punct(")") {
                    loop {
                        args.push(self.parse_assign()?);
                        if self.eat_punct(")") {
                            break;
                        }
                        self.expect_punct(",")?;
                    }
                }
                e = Expr::new(ExprKind::Call(name, args), e.span);
            } else if self.is_punct("++") || self.is_punct("--") {
                let increment = self.is_punct("++");
                self.advance();
                e = Expr::new(
                    ExprKind::IncDec {
                        prefix: false,
                        increment,
                        target: Box::new(e),
                    },
                    span,
                );
            } else {
                return Ok(e);
            }
        }
    }

    fn parse_primary(&mut self) -> PResult<Expr> {
        let span = self.span();
        let kind = match self.peek().clone() {
            Tok::Int(v) => {
                self.advance();
                ExprKind::Int(v)
            }
            Tok::Float(v) => {
                self.advance();
                ExprKind::Float(v)
            }
            Tok::Str(s) => {
                self.advance();
                let mut s = s;
                // Adjacent literals concatenate.
                while let Tok::Str(more) = self.peek().clone() {
                    self.advance();
                    s.extend(more);
                }
                ExprKind::Str(s)
            }
            Tok::Char(c) => {
                self.advance();
                ExprKind::Char(c)
            }
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.advance();
                ExprKind::Ident(ident(&s))
            }
            Tok::Punct("(") => {
                self.advance();
                let first = self.parse_expr()?;
                if self.eat_punct(")") {
                    return Ok(first);
                }
                let mut items = vec![first];
                while self.eat_punct(",") {
                    items.push(self.parse_expr()?);
                }
                self.expect_punct(")")?;
                ExprKind::List(items)
            }
            _ => return Err(self.unexpected(&["expression"])),
        };
        Ok(Expr::new(kind, span))
    }
}
