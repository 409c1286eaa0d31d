//! Name resolution and static checks run after parsing.

use std::collections::{HashMap, HashSet};

use super::ast::*;
use super::native::{builtin_arity, constant, NativeType};
use super::parser::RawUnit;
use super::{
    DeclInfo, DiagKind, Diagnostic, EnumInfo, MagicTable, TemplateError, TemplateUnit, TypeRef,
};

struct Resolver {
    types: HashMap<Ident, TypeRef>,
    /// Parameter count per record typedef index.
    record_params: HashMap<usize, usize>,
    functions: HashMap<Ident, usize>,
    function_params: Vec<usize>,
    errors: Vec<Diagnostic>,
    decls: Vec<DeclInfo>,
}

fn resolve_err(span: Span, msg: String) -> Diagnostic {
    Diagnostic::error(span, msg).with_kind(DiagKind::Resolve)
}

fn arity_err(span: Span, msg: String) -> Diagnostic {
    Diagnostic::error(span, msg).with_kind(DiagKind::Arity)
}

/// Evaluates an integer constant expression (enum values).
pub fn eval_const(e: &Expr, env: &HashMap<Ident, i64>) -> Option<i64> {
    Some(match &e.kind {
        ExprKind::Int(v) => *v,
        ExprKind::Char(c) => *c as i64,
        ExprKind::Ident(n) => match env.get(n) {
            Some(v) => *v,
            None => constant(n)?,
        },
        ExprKind::Unary(op, a) => {
            let a = eval_const(a, env)?;
            match op {
                UnOp::Neg => a.wrapping_neg(),
                UnOp::Plus => a,
                UnOp::Not => (a == 0) as i64,
                UnOp::BitNot => !a,
            }
        }
        ExprKind::Binary(op, a, b) => {
            let a = eval_const(a, env)?;
            let b = eval_const(b, env)?;
            crate::engine::eval_binop_int(*op, a, b)?
        }
        ExprKind::Cond(c, a, b) => {
            if eval_const(c, env)? != 0 {
                eval_const(a, env)?
            } else {
                eval_const(b, env)?
            }
        }
        _ => return None,
    })
}

impl Resolver {
    fn lookup(&self, name: &str) -> Option<TypeRef> {
        NativeType::lookup(name)
            .map(TypeRef::Native)
            .or_else(|| self.types.get(name).copied())
    }

    fn check_param_types(&mut self, params: &[Param], span: Span, what: &str) {
        let mut seen = HashSet::new();
        for p in params {
            if !seen.insert(p.name.clone()) {
                self.errors.push(resolve_err(
                    span,
                    format!("duplicate parameter `{}` in {what}", p.name),
                ));
            }
            if self.lookup(&p.ty).is_none() {
                self.errors
                    .push(resolve_err(span, format!("unknown type `{}`", p.ty)));
            }
        }
    }

    fn stmts(&mut self, body: &mut [Stmt]) {
        for s in body {
            self.stmt(s);
        }
    }

    fn stmt(&mut self, s: &mut Stmt) {
        let span = s.span;
        match &mut s.kind {
            StmtKind::Decl(d) => self.decl(d, span),
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
                if let Some(c) = cond {
                    self.expr(c);
                }
                if let Some(st) = step {
                    self.expr(st);
                }
                self.stmt(body);
            }
            StmtKind::Switch { scrutinee, cases } => {
                self.expr(scrutinee);
                for c in cases {
                    if let Some(l) = &mut c.label {
                        self.expr(l);
                    }
                    self.stmts(&mut c.body);
                }
            }
            StmtKind::Return(Some(e)) | StmtKind::Expr(e) => self.expr(e),
            StmtKind::Block(b) => self.stmts(b),
            StmtKind::Return(None) | StmtKind::Break | StmtKind::Continue | StmtKind::Empty => {}
        }
    }

    fn decl(&mut self, d: &mut VarDecl, span: Span) {
        let Some(t) = self.lookup(&d.ty) else {
            self.errors
                .push(resolve_err(span, format!("unknown type `{}`", d.ty)));
            return;
        };
        let expected_args = match t {
            TypeRef::Record(i) => self.record_params[&i],
            _ => 0,
        };
        if d.args.len() != expected_args {
            self.errors.push(arity_err(
                span,
                format!(
                    "type `{}` takes {expected_args} argument(s), {} given",
                    d.ty,
                    d.args.len()
                ),
            ));
        }
        match t {
            TypeRef::Native(NativeType::Void) => {
                self.errors
                    .push(resolve_err(span, format!("variable `{}` declared void", d.name)));
            }
            TypeRef::Native(NativeType::Float) if !d.local => {
                self.errors.push(resolve_err(
                    span,
                    format!("floating-point input `{}` is not supported", d.name),
                ));
            }
            _ => {}
        }
        let codec = d.attrs.iter().any(|a| &*a.key == "codec");
        if !d.local {
            if matches!(d.array, Some(ArraySpec::Unsized)) && !codec {
                self.errors.push(resolve_err(
                    span,
                    format!("input array `{}` needs a length", d.name),
                ));
            }
            if codec {
                let has_size = d.attrs.iter().any(|a| &*a.key == "size");
                let byte_elems = matches!(
                    t,
                    TypeRef::Native(NativeType::Int { width: 1, .. })
                );
                if !matches!(d.array, Some(ArraySpec::Unsized)) || !has_size || !byte_elems {
                    self.errors.push(resolve_err(
                        span,
                        format!(
                            "codec region `{}` must be an unsized byte array with a `size` attribute",
                            d.name
                        ),
                    ));
                }
            }
            d.decl_id = Some(self.decls.len());
            self.decls.push(DeclInfo {
                id: self.decls.len(),
                name: d.name.clone(),
                type_name: d.ty.clone(),
                span,
            });
        } else if matches!(d.array, Some(ArraySpec::Unsized))
            && !matches!(d.init, Some(Init::List(_)))
        {
            self.errors.push(resolve_err(
                span,
                format!("local array `{}` needs a length or an initializer list", d.name),
            ));
        }
        if let Some(ArraySpec::Sized(e)) = &mut d.array {
            self.expr(e);
        }
        for a in &mut d.args {
            self.expr(a);
        }
        match &mut d.init {
            Some(Init::List(items)) => items.iter_mut().for_each(|e| self.expr(e)),
            Some(Init::Expr(e)) => self.expr(e),
            None => {}
        }
        for a in &mut d.attrs {
            self.expr(&mut a.value);
        }
    }

    fn expr(&mut self, e: &mut Expr) {
        let span = e.span;
        match &mut e.kind {
            ExprKind::Call(name, args) => {
                for a in args.iter_mut() {
                    self.expr(a);
                }
                let n = args.len();
                if let Some((lo, hi)) = builtin_arity(name) {
                    if n < lo || n > hi {
                        self.errors.push(arity_err(
                            span,
                            format!("builtin `{name}` called with {n} argument(s)"),
                        ));
                    }
                } else if let Some(&i) = self.functions.get(name) {
                    let want = self.function_params[i];
                    if n != want {
                        self.errors.push(arity_err(
                            span,
                            format!("function `{name}` takes {want} argument(s), {n} given"),
                        ));
                    }
                } else {
                    self.errors
                        .push(resolve_err(span, format!("unknown function `{name}`")));
                }
            }
            ExprKind::Member(a, _) | ExprKind::Unary(_, a) => self.expr(a),
            ExprKind::IncDec { target, .. } => self.expr(target),
            ExprKind::Index(a, b) | ExprKind::Binary(_, a, b) | ExprKind::Assign(_, a, b) => {
                self.expr(a);
                self.expr(b);
            }
            ExprKind::Cond(a, b, c) => {
                self.expr(a);
                self.expr(b);
                self.expr(c);
            }
            ExprKind::List(items) => items.iter_mut().for_each(|x| self.expr(x)),
            ExprKind::Int(_)
            | ExprKind::Float(_)
            | ExprKind::Str(_)
            | ExprKind::Char(_)
            | ExprKind::Ident(_) => {}
        }
    }
}

pub(super) fn resolve(raw: RawUnit) -> Result<TemplateUnit, TemplateError> {
    let RawUnit {
        mut typedefs,
        mut functions,
        mut toplevel,
        warnings,
    } = raw;
    let mut r = Resolver {
        types: HashMap::new(),
        record_params: HashMap::new(),
        functions: HashMap::new(),
        function_params: Vec::new(),
        errors: Vec::new(),
        decls: Vec::new(),
    };
    let mut enums = Vec::new();
    let mut enum_constants: HashMap<Ident, i64> = HashMap::new();

    // Records and enums first, then aliases in definition order.
    for (i, td) in typedefs.iter().enumerate() {
        if NativeType::lookup(&td.name).is_some() || r.types.contains_key(&td.name) {
            r.errors.push(resolve_err(
                td.span,
                format!("duplicate type name `{}`", td.name),
            ));
            continue;
        }
        match &td.kind {
            TypeKind::Record { params, .. } => {
                r.types.insert(td.name.clone(), TypeRef::Record(i));
                r.record_params.insert(i, params.len());
            }
            TypeKind::Enum { base, variants } => {
                let base_t = match NativeType::lookup(base) {
                    Some(t @ NativeType::Int { .. }) => t,
                    _ => {
                        r.errors.push(resolve_err(
                            td.span,
                            format!("enum base `{base}` is not an integer type"),
                        ));
                        NativeType::Int {
                            width: 4,
                            signed: true,
                        }
                    }
                };
                if variants.is_empty() {
                    r.errors.push(resolve_err(
                        td.span,
                        format!("enum `{}` has no values", td.name),
                    ));
                }
                let mut next = 0i64;
                let mut values = Vec::new();
                for v in variants {
                    let value = match &v.value {
                        Some(e) => match eval_const(e, &enum_constants) {
                            Some(x) => x,
                            None => {
                                r.errors.push(resolve_err(
                                    e.span,
                                    format!("enum value `{}` is not a constant", v.name),
                                ));
                                next
                            }
                        },
                        None => next,
                    };
                    next = value.wrapping_add(1);
                    if enum_constants.insert(v.name.clone(), value).is_some() {
                        r.errors.push(resolve_err(
                            td.span,
                            format!("duplicate enum constant `{}`", v.name),
                        ));
                    }
                    values.push((v.name.clone(), value));
                }
                r.types.insert(td.name.clone(), TypeRef::Enum(enums.len()));
                enums.push(EnumInfo {
                    name: td.name.clone(),
                    base: base_t,
                    variants: values,
                });
            }
            TypeKind::Alias(_) => {}
        }
    }
    for td in &typedefs {
        if let TypeKind::Alias(target) = &td.kind {
            if r.types.contains_key(&td.name) {
                continue;
            }
            match r.lookup(target) {
                Some(t) => {
                    r.types.insert(td.name.clone(), t);
                }
                None => r.errors.push(resolve_err(
                    td.span,
                    format!("unknown type `{target}`"),
                )),
            }
        }
    }

    for (i, f) in functions.iter().enumerate() {
        if builtin_arity(&f.name).is_some() || r.functions.contains_key(&f.name) {
            r.errors.push(resolve_err(
                f.span,
                format!("duplicate function name `{}`", f.name),
            ));
            continue;
        }
        r.functions.insert(f.name.clone(), i);
    }
    r.function_params = functions.iter().map(|f| f.params.len()).collect();

    for td in &mut typedefs {
        if let TypeKind::Record { params, body } = &mut td.kind {
            let what = format!("type `{}`", td.name);
            r.check_param_types(params, td.span, &what);
            r.stmts(body);
        }
    }
    for f in &mut functions {
        if r.lookup(&f.ret).is_none() {
            r.errors
                .push(resolve_err(f.span, format!("unknown type `{}`", f.ret)));
        }
        let what = format!("function `{}`", f.name);
        r.check_param_types(&f.params, f.span, &what);
        r.stmts(&mut f.body);
    }
    r.stmts(&mut toplevel);

    if !r.errors.is_empty() {
        return Err(TemplateError {
            diagnostics: r.errors,
        });
    }
    Ok(TemplateUnit {
        typedefs,
        functions,
        toplevel,
        magic: MagicTable::default(),
        enums,
        decls: r.decls,
        warnings,
        types: r.types,
        function_index: r.functions,
        enum_constants,
    })
}
