//! Expression evaluation, assignment and user function calls.

use super::{EResult, EngineError, Exec, Flow, MAX_CALL_DEPTH};
use crate::runtime::value::normalize;
use crate::runtime::{Binding, Value};
use crate::templatelang::ast::{AssignOp, BinOp, Expr, ExprKind, UnOp};
use crate::templatelang::native::{builtin_arity, constant};
use crate::templatelang::{NativeType, Span, TypeRef};

/// 64-bit wrapping integer semantics. `None` on division by zero.
pub fn eval_binop_int(op: BinOp, a: i64, b: i64) -> Option<i64> {
    use BinOp::*;
    Some(match op {
        Mul => a.wrapping_mul(b),
        Div => {
            if b == 0 {
                return None;
            }
            a.wrapping_div(b)
        }
        Rem => {
            if b == 0 {
                return None;
            }
            a.wrapping_rem(b)
        }
        Add => a.wrapping_add(b),
        Sub => a.wrapping_sub(b),
        Shl => a.wrapping_shl(b as u32 & 63),
        Shr => a.wrapping_shr(b as u32 & 63),
        Lt => (a < b) as i64,
        Le => (a <= b) as i64,
        Gt => (a > b) as i64,
        Ge => (a >= b) as i64,
        Eq => (a == b) as i64,
        Ne => (a != b) as i64,
        BitAnd => a & b,
        BitXor => a ^ b,
        BitOr => a | b,
        And => (a != 0 && b != 0) as i64,
        Or => (a != 0 || b != 0) as i64,
    })
}

fn float_binop(op: BinOp, a: f64, b: f64) -> Option<Value> {
    use BinOp::*;
    Some(match op {
        Mul => Value::Float(a * b),
        Div => Value::Float(a / b),
        Add => Value::Float(a + b),
        Sub => Value::Float(a - b),
        Lt => Value::Int((a < b) as i64),
        Le => Value::Int((a <= b) as i64),
        Gt => Value::Int((a > b) as i64),
        Ge => Value::Int((a >= b) as i64),
        Eq => Value::Int((a == b) as i64),
        Ne => Value::Int((a != b) as i64),
        _ => return None,
    })
}

/// Integer width of a local of type `t`, used to truncate assignments.
pub(super) fn local_width(t: Option<TypeRef>, exec: &Exec<'_>) -> Option<(u8, bool)> {
    t.and_then(|t| exec.unit.scalar_width(t))
}

impl<'u> Exec<'u> {
    pub(super) fn eval_int(&mut self, e: &'u Expr) -> EResult<i64> {
        let v = self.eval(e)?;
        v.as_int()
            .ok_or_else(|| self.err(e.span, format!("expected an integer, got {v}")))
    }

    pub(super) fn eval(&mut self, e: &'u Expr) -> EResult<Value> {
        Ok(match &e.kind {
            ExprKind::Int(v) => Value::Int(*v),
            ExprKind::Float(v) => Value::Float(*v),
            ExprKind::Str(s) => Value::str(s),
            ExprKind::Char(c) => Value::Int(*c as i64),
            ExprKind::Ident(name) => {
                if let Some(b) = self.scope.lookup(name) {
                    b.value.clone()
                } else if let Some(v) = self.unit.enum_constant(name) {
                    Value::Int(v)
                } else if let Some(v) = constant(name) {
                    Value::Int(v)
                } else {
                    return Err(self.err(e.span, format!("unknown identifier `{name}`")));
                }
            }
            ExprKind::Member(base, field) => {
                let b = self.eval(base)?;
                match &b {
                    Value::Record(r) => r.field(field).cloned().ok_or_else(|| {
                        EngineError::InvalidFieldAccess(format!(
                            "{}: `{}` has no field `{field}`",
                            e.span, r.type_name
                        ))
                    })?,
                    _ => {
                        return Err(EngineError::InvalidFieldAccess(format!(
                            "{}: `.{field}` on a non-record value",
                            e.span
                        )))
                    }
                }
            }
            ExprKind::Index(base, idx) => {
                let b = self.eval(base)?;
                let i = self.eval_int(idx)?;
                let item = if i < 0 { None } else { b.index(i as usize) };
                item.ok_or_else(|| {
                    EngineError::InvalidFieldAccess(format!(
                        "{}: index {i} out of range for {}",
                        e.span,
                        crate::templatelang::printer::print_expr(base)
                    ))
                })?
            }
            ExprKind::Unary(op, a) => {
                let v = self.eval(a)?;
                match (op, &v) {
                    (UnOp::Neg, Value::Float(f)) => Value::Float(-f),
                    (UnOp::Plus, Value::Float(_)) => v,
                    (UnOp::Not, _) => Value::Int(!v.truthy() as i64),
                    (_, Value::Int(x)) => Value::Int(match op {
                        UnOp::Neg => x.wrapping_neg(),
                        UnOp::Plus => *x,
                        UnOp::BitNot => !x,
                        UnOp::Not => unreachable!(),
                    }),
                    _ => return Err(self.err(e.span, format!("bad operand {v} for unary operator"))),
                }
            }
            ExprKind::Binary(BinOp::And, a, b) => {
                Value::Int((self.eval(a)?.truthy() && self.eval(b)?.truthy()) as i64)
            }
            ExprKind::Binary(BinOp::Or, a, b) => {
                Value::Int((self.eval(a)?.truthy() || self.eval(b)?.truthy()) as i64)
            }
            ExprKind::Binary(op, a, b) => {
                let x = self.eval(a)?;
                let y = self.eval(b)?;
                self.binop(*op, &x, &y, e.span)?
            }
            ExprKind::Assign(op, target, rhs) => {
                let r = match &rhs.kind {
                    ExprKind::List(items) if matches!(op, AssignOp::Add | AssignOp::Sub) => {
                        let mut vals = Vec::with_capacity(items.len());
                        for x in items {
                            vals.push(self.eval(x)?);
                        }
                        Value::array(vals)
                    }
                    _ => self.eval(rhs)?,
                };
                self.assign(*op, target, r, e.span)?
            }
            ExprKind::IncDec {
                prefix,
                increment,
                target,
            } => {
                let old = self.eval(target)?;
                let op = if *increment { AssignOp::Add } else { AssignOp::Sub };
                let new = self.assign(op, target, Value::Int(1), e.span)?;
                if *prefix {
                    new
                } else {
                    old
                }
            }
            ExprKind::Cond(c, a, b) => {
                if self.eval(c)?.truthy() {
                    self.eval(a)?
                } else {
                    self.eval(b)?
                }
            }
            ExprKind::Call(name, args) => {
                if builtin_arity(name).is_some() {
                    self.builtin(name, args, e.span)?
                } else {
                    self.call(name, args, e.span)?
                }
            }
            ExprKind::List(_) => {
                return Err(self.err(
                    e.span,
                    "a parenthesized list is only allowed on the right of `+=`/`-=`",
                ))
            }
        })
    }

    fn binop(&self, op: BinOp, x: &Value, y: &Value, span: Span) -> EResult<Value> {
        match (x, y) {
            (Value::Int(a), Value::Int(b)) => eval_binop_int(op, *a, *b)
                .map(Value::Int)
                .ok_or_else(|| self.err(span, "division by zero")),
            (Value::Float(_), _) | (_, Value::Float(_)) => {
                match (x.as_float(), y.as_float()) {
                    (Some(a), Some(b)) => float_binop(op, a, b),
                    _ => None,
                }
                .ok_or_else(|| self.err(span, format!("bad operands {x} {} {y}", op.symbol())))
            }
            _ => match op {
                BinOp::Eq => Ok(Value::Int(x.loose_eq(y) as i64)),
                BinOp::Ne => Ok(Value::Int(!x.loose_eq(y) as i64)),
                BinOp::Add => match (x.as_bytes(), y.as_bytes()) {
                    (Some(mut a), Some(b)) => {
                        a.extend(b);
                        Ok(Value::str(&a))
                    }
                    _ => Err(self.err(span, format!("bad operands {x} + {y}"))),
                },
                _ => Err(self.err(span, format!("bad operands {x} {} {y}", op.symbol()))),
            },
        }
    }

    /// Performs `target op= rhs` and returns the stored value.
    pub(super) fn assign(&mut self, op: AssignOp, target: &'u Expr, rhs: Value, span: Span) -> EResult<Value> {
        match &target.kind {
            ExprKind::Ident(name) => {
                let Some(binding) = self.scope.lookup(name) else {
                    return Err(self.err(span, format!("assignment to undeclared `{name}`")));
                };
                let old = binding.value.clone();
                let width = binding.width;
                let new = match (op, &old) {
                    (AssignOp::Set, _) => rhs.deep_copy(),
                    (AssignOp::Add | AssignOp::Sub, Value::Array(items)) => {
                        let values = match &rhs {
                            Value::Array(a) => a.borrow().clone(),
                            other => vec![other.clone()],
                        };
                        let mut items = items.borrow_mut();
                        for v in values {
                            let v = match (&v, width) {
                                (Value::Int(x), Some((w, s))) => Value::Int(normalize(*x, w, s)),
                                _ => v,
                            };
                            if op == AssignOp::Add {
                                if !items.iter().any(|x| x.loose_eq(&v)) {
                                    items.push(v);
                                }
                            } else {
                                items.retain(|x| !x.loose_eq(&v));
                            }
                        }
                        drop(items);
                        return Ok(old);
                    }
                    (op, _) => self.binop(op.binop().unwrap(), &old, &rhs, span)?,
                };
                self.scope.assign(name, new);
                Ok(self.scope.lookup(name).unwrap().value.clone())
            }
            ExprKind::Index(base, idx) => {
                let arr = self.eval(base)?;
                let i = self.eval_int(idx)?;
                let Value::Array(items) = &arr else {
                    return Err(self.err(span, "element assignment needs a local array"));
                };
                let len = items.borrow().len();
                if i < 0 || i as usize >= len {
                    return Err(EngineError::InvalidFieldAccess(format!(
                        "{span}: index {i} out of range"
                    )));
                }
                let old = items.borrow()[i as usize].clone();
                let mut new = match op {
                    AssignOp::Set => rhs.deep_copy(),
                    op => self.binop(op.binop().unwrap(), &old, &rhs, span)?,
                };
                let width = match &base.kind {
                    ExprKind::Ident(n) => self.scope.lookup(n).and_then(|b| b.width),
                    _ => None,
                };
                if let (Value::Int(x), Some((w, s))) = (&new, width) {
                    new = Value::Int(normalize(*x, w, s));
                }
                items.borrow_mut()[i as usize] = new.clone();
                Ok(new)
            }
            _ => Err(self.err(span, "left side of assignment is not assignable")),
        }
    }

    fn call(&mut self, name: &str, args: &'u [Expr], span: Span) -> EResult<Value> {
        let unit = self.unit;
        let f = unit
            .function(name)
            .ok_or_else(|| self.err(span, format!("unknown function `{name}`")))?;
        let mut values = Vec::with_capacity(args.len());
        for a in args {
            values.push(self.eval(a)?);
        }
        if self.depth >= MAX_CALL_DEPTH {
            return Err(EngineError::RecursionLimit);
        }
        self.depth += 1;
        self.scope.push();
        for (p, v) in f.params.iter().zip(values) {
            let t = unit.resolve_type(&p.ty);
            let width = local_width(t, self);
            let v = match (v, width) {
                (Value::Int(x), Some((w, s))) if !p.is_array => Value::Int(normalize(x, w, s)),
                (v, _) => v.deep_copy(),
            };
            self.scope.declare(
                p.name.clone(),
                Binding {
                    value: v,
                    width,
                    input: false,
                },
            );
        }
        let flow = self.exec_block(&f.body);
        self.scope.pop();
        self.depth -= 1;
        let ret = match flow? {
            Flow::Return(v) => v,
            _ => Value::Void,
        };
        Ok(match (ret, unit.resolve_type(&f.ret)) {
            (Value::Int(x), Some(TypeRef::Native(NativeType::Int { width, signed }))) => {
                Value::Int(normalize(x, width, signed))
            }
            (v, _) => v,
        })
    }
}
