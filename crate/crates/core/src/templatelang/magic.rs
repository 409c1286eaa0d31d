//! Magic values mined from `==` / `!=` comparisons against literals.

use std::fmt;

use super::ast::*;
use super::TemplateUnit;

/// Field path: the last name in a member chain plus an optional constant index.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MagicKey {
    pub name: Ident,
    pub index: Option<i64>,
}

impl fmt::Display for MagicKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.index {
            Some(i) => write!(f, "{}[{i}]", self.name),
            None => write!(f, "{}", self.name),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum MagicValue {
    Int(i64),
    /// String literal compared against a whole array.
    Bytes(Vec<u8>),
}

/// Insertion-ordered map from field path to distinct literal values.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MagicTable {
    entries: Vec<(MagicKey, Vec<MagicValue>)>,
}

impl MagicTable {
    pub fn get(&self, name: &str, index: Option<i64>) -> Option<&[MagicValue]> {
        self.entries
            .iter()
            .find(|(k, _)| &*k.name == name && k.index == index)
            .map(|(_, v)| v.as_slice())
    }

    pub fn insert(&mut self, key: MagicKey, value: MagicValue) {
        match self.entries.iter_mut().find(|(k, _)| *k == key) {
            Some((_, vals)) => {
                if !vals.contains(&value) {
                    vals.push(value);
                }
            }
            None => self.entries.push((key, vec![value])),
        }
    }

    pub fn entries(&self) -> &[(MagicKey, Vec<MagicValue>)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }
}

fn literal(e: &Expr) -> Option<MagicValue> {
    match &e.kind {
        ExprKind::Int(v) => Some(MagicValue::Int(*v)),
        ExprKind::Char(c) => Some(MagicValue::Int(*c as i64)),
        ExprKind::Str(s) => Some(MagicValue::Bytes(s.clone())),
        ExprKind::Unary(UnOp::Neg, inner) => match inner.kind {
            ExprKind::Int(v) => Some(MagicValue::Int(v.wrapping_neg())),
            _ => None,
        },
        _ => None,
    }
}

fn path(e: &Expr) -> Option<MagicKey> {
    match &e.kind {
        ExprKind::Ident(n) => Some(MagicKey {
            name: n.clone(),
            index: None,
        }),
        ExprKind::Member(_, n) => Some(MagicKey {
            name: n.clone(),
            index: None,
        }),
        ExprKind::Index(base, idx) => {
            let i = match idx.kind {
                ExprKind::Int(i) => i,
                _ => return None,
            };
            let name = match &base.kind {
                ExprKind::Ident(n) | ExprKind::Member(_, n) => n.clone(),
                _ => return None,
            };
            Some(MagicKey {
                name,
                index: Some(i),
            })
        }
        _ => None,
    }
}

struct Miner {
    table: MagicTable,
}

impl Miner {
    fn stmts(&mut self, body: &[Stmt]) {
        body.iter().for_each(|s| self.stmt(s));
    }

    fn stmt(&mut self, s: &Stmt) {
        match &s.kind {
            StmtKind::Decl(d) => {
                if let Some(ArraySpec::Sized(e)) = &d.array {
                    self.expr(e);
                }
                d.args.iter().for_each(|e| self.expr(e));
                match &d.init {
                    Some(Init::List(items)) => items.iter().for_each(|e| self.expr(e)),
                    Some(Init::Expr(e)) => self.expr(e),
                    None => {}
                }
                d.attrs.iter().for_each(|a| self.expr(&a.value));
            }
            StmtKind::If { cond, then, els } => {
                self.expr(cond);
                self.stmt(then);
                if let Some(e) = els {
                    self.stmt(e);
                }
            }
            StmtKind::While { cond, body } | StmtKind::DoWhile { body, cond } => {
                self.expr(cond);
                self.stmt(body);
            }
            StmtKind::For {
                init,
                cond,
                step,
                body,
            } => {
                if let Some(i) = init {
                    self.stmt(i);
                }
                cond.iter().chain(step.iter()).for_each(|e| self.expr(e));
                self.stmt(body);
            }
            StmtKind::Switch { scrutinee, cases } => {
                self.expr(scrutinee);
                for c in cases {
                    if let Some(l) = &c.label {
                        self.expr(l);
                    }
                    self.stmts(&c.body);
                }
            }
            StmtKind::Return(Some(e)) | StmtKind::Expr(e) => self.expr(e),
            StmtKind::Block(b) => self.stmts(b),
            _ => {}
        }
    }

    fn expr(&mut self, e: &Expr) {
        match &e.kind {
            ExprKind::Binary(op, a, b) => {
                if matches!(op, BinOp::Eq | BinOp::Ne) {
                    let pair = match (path(a), literal(b)) {
                        (Some(p), Some(l)) => Some((p, l)),
                        _ => match (path(b), literal(a)) {
                            (Some(p), Some(l)) => Some((p, l)),
                            _ => None,
                        },
                    };
                    if let Some((p, l)) = pair {
                        self.table.insert(p, l);
                    }
                }
                self.expr(a);
                self.expr(b);
            }
            ExprKind::Member(a, _) | ExprKind::Unary(_, a) => self.expr(a),
            ExprKind::IncDec { target, .. } => self.expr(target),
            ExprKind::Index(a, b) | ExprKind::Assign(_, a, b) => {
                self.expr(a);
                self.expr(b);
            }
            ExprKind::Cond(a, b, c) => {
                self.expr(a);
                self.expr(b);
                self.expr(c);
            }
            ExprKind::Call(_, items) | ExprKind::List(items) => {
                items.iter().for_each(|x| self.expr(x))
            }
            _ => {}
        }
    }
}

/// Collects magic values from every comparison in the unit.
pub fn mine_magic(unit: &TemplateUnit) -> MagicTable {
    let mut m = Miner {
        table: MagicTable::default(),
    };
    for td in &unit.typedefs {
        if let TypeKind::Record { body, .. } = &td.kind {
            m.stmts(body);
        }
    }
    for f in &unit.functions {
        m.stmts(&f.body);
    }
    m.stmts(&unit.toplevel);
    m.table
}
