//! Lexing, parsing and static checks for the binary-template language.

pub mod ast;
mod lexer;
pub mod magic;
pub mod native;
mod parser;
pub mod printer;
mod resolve;

use std::collections::HashMap;
use std::fmt;

pub use ast::{Ident, Span};
pub use magic::{mine_magic, MagicKey, MagicTable, MagicValue};
pub use native::NativeType;

use ast::{FunctionDef, Stmt, TypeDef};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
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

/// Which check produced an error diagnostic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagKind {
    Syntax,
    Resolve,
    Arity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub kind: DiagKind,
    pub span: Span,
    pub message: String,
    /// Tokens that would have been accepted, for syntax errors.
    pub expected: Vec<String>,
}

impl Diagnostic {
    pub fn error(span: Span, message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Error,
            kind: DiagKind::Syntax,
            span,
            message: message.into(),
            expected: Vec::new(),
        }
    }

    pub fn warning(span: Span, message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Warning,
            ..Self::error(span, message)
        }
    }

    fn with_kind(mut self, kind: DiagKind) -> Self {
        self.kind = kind;
        self
    }

    /// `file:line:col: severity: message`
    pub fn render(&self, file: &str) -> String {
        format!(
            "{file}:{}:{}: {}: {}",
            self.span.line, self.span.col, self.severity, self.message
        )
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}: {}", self.span, self.severity, self.message)
    }
}

/// Failure to turn source text into a [`TemplateUnit`].
#[derive(Debug, Clone, thiserror::Error)]
#[error("{}", .diagnostics.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n"))]
pub struct TemplateError {
    pub diagnostics: Vec<Diagnostic>,
}

impl TemplateError {
    /// Kind of the first error.
    pub fn kind(&self) -> DiagKind {
        self.diagnostics
            .iter()
            .find(|d| d.severity == Severity::Error)
            .map(|d| d.kind)
            .unwrap_or(DiagKind::Syntax)
    }

    pub fn render(&self, file: &str) -> String {
        self.diagnostics
            .iter()
            .map(|d| d.render(file))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

/// What a type name denotes after following aliases.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TypeRef {
    Native(NativeType),
    /// Index into `TemplateUnit::typedefs`.
    Record(usize),
    /// Index into `TemplateUnit::enums`.
    Enum(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnumInfo {
    pub name: Ident,
    pub base: NativeType,
    pub variants: Vec<(Ident, i64)>,
}

/// An input declaration, as enumerated for coverage.
#[derive(Debug, Clone, PartialEq)]
pub struct DeclInfo {
    pub id: usize,
    pub name: Ident,
    pub type_name: Ident,
    pub span: Span,
}

/// A parsed and resolved template. Immutable and `Send + Sync`.
#[derive(Debug, Clone)]
pub struct TemplateUnit {
    pub typedefs: Vec<TypeDef>,
    pub functions: Vec<FunctionDef>,
    pub toplevel: Vec<Stmt>,
    pub magic: MagicTable,
    pub enums: Vec<EnumInfo>,
    pub decls: Vec<DeclInfo>,
    pub warnings: Vec<Diagnostic>,
    types: HashMap<Ident, TypeRef>,
    function_index: HashMap<Ident, usize>,
    enum_constants: HashMap<Ident, i64>,
}

impl TemplateUnit {
    pub fn resolve_type(&self, name: &str) -> Option<TypeRef> {
        if let Some(t) = NativeType::lookup(name) {
            return Some(TypeRef::Native(t));
        }
        self.types.get(name).copied()
    }

    pub fn function(&self, name: &str) -> Option<&FunctionDef> {
        self.function_index.get(name).map(|&i| &self.functions[i])
    }

    pub fn enum_constant(&self, name: &str) -> Option<i64> {
        self.enum_constants.get(name).copied()
    }

    /// Byte width of a scalar type, `None` for records, strings and floats.
    pub fn scalar_width(&self, t: TypeRef) -> Option<(u8, bool)> {
        match t {
            TypeRef::Native(NativeType::Int { width, signed }) => Some((width, signed)),
            TypeRef::Enum(i) => match self.enums[i].base {
                NativeType::Int { width, signed } => Some((width, signed)),
                _ => None,
            },
            _ => None,
        }
    }

    pub fn type_display_name(&self, t: TypeRef) -> Ident {
        match t {
            TypeRef::Record(i) => self.typedefs[i].name.clone(),
            TypeRef::Enum(i) => self.enums[i].name.clone(),
            TypeRef::Native(_) => Ident::from("native"),
        }
    }
}

/// Parses and resolves template source. Warnings are kept in the unit.
pub fn parse_template(source: &str) -> Result<TemplateUnit, TemplateError> {
    let wrap = |d: Diagnostic| TemplateError {
        diagnostics: vec![d],
    };
    let toks = lexer::tokenize(source).map_err(wrap)?;
    let raw = parser::Parser::new(toks).parse_unit().map_err(wrap)?;
    let mut unit = resolve::resolve(raw)?;
    unit.magic = mine_magic(&unit);
    Ok(unit)
}

/// Every input declaration with its stable id and position.
pub fn list_declarations(unit: &TemplateUnit) -> Vec<(usize, Span)> {
    unit.decls.iter().map(|d| (d.id, d.span)).collect()
}
