//! Pretty-printer. Output re-parses to the same syntax tree (modulo spans).

use std::fmt::Write;

use super::ast::*;
use super::TemplateUnit;

pub fn print_unit(unit: &TemplateUnit) -> String {
    let mut p = Printer::default();
    for td in &unit.typedefs {
        p.typedef(td);
    }
    for f in &unit.functions {
        p.function(f);
    }
    for s in &unit.toplevel {
        p.stmt(s);
    }
    p.out
}

pub fn print_expr(e: &Expr) -> String {
    let mut s = String::new();
    expr(&mut s, e);
    s
}

#[derive(Default)]
struct Printer {
    out: String,
    indent: usize,
}

fn escape_bytes(out: &mut String, bytes: &[u8], quote: u8) {
    for &b in bytes {
        match b {
            b'\\' => out.push_str("\\\\"),
            b'\n' => out.push_str("\\n"),
            b'\t' => out.push_str("\\t"),
            b'\r' => out.push_str("\\r"),
            _ if b == quote => {
                out.push('\\');
                out.push(b as char);
            }
            0x20..=0x7e => out.push(b as char),
            _ => {
                let _ = write!(out, "\\x{b:02x}");
            }
        }
    }
}

fn params(out: &mut String, ps: &[Param]) {
    out.push('(');
    for (i, p) in ps.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        let _ = write!(out, "{} {}", p.ty, p.name);
        if p.is_array {
            out.push_str("[]");
        }
    }
    out.push(')');
}

fn expr(out: &mut String, e: &Expr) {
    match &e.kind {
        ExprKind::Int(v) => {
            if *v < 0 {
                let _ = write!(out, "0x{:x}", *v as u64);
            } else {
                let _ = write!(out, "{v}");
            }
        }
        ExprKind::Float(v) => {
            let _ = write!(out, "{v:?}");
        }
        ExprKind::Str(s) => {
            out.push('"');
            escape_bytes(out, s, b'"');
            out.push('"');
        }
        ExprKind::Char(c) => {
            out.push('\'');
            escape_bytes(out, &[*c], b'\'');
            out.push('\'');
        }
        ExprKind::Ident(n) => out.push_str(n),
        ExprKind::Member(a, f) => {
            expr(out, a);
            out.push('.');
            out.push_str(f);
        }
        ExprKind::Index(a, i) => {
            expr(out, a);
            out.push('[');
            expr(out, i);
            out.push(']');
        }
        ExprKind::Unary(op, a) => {
            out.push('(');
            out.push(match op {
                UnOp::Neg => '-',
                UnOp::Plus => '+',
                UnOp::Not => '!',
                UnOp::BitNot => '~',
            });
            expr(out, a);
            out.push(')');
        }
        ExprKind::Binary(op, a, b) => {
            out.push('(');
            expr(out, a);
            let _ = write!(out, " {} ", op.symbol());
            expr(out, b);
            out.push(')');
        }
        ExprKind::Assign(op, a, b) => {
            out.push('(');
            expr(out, a);
            let _ = write!(out, " {} ", op.symbol());
            expr(out, b);
            out.push(')');
        }
        ExprKind::IncDec {
            prefix,
            increment,
            target,
        } => {
            let sym = if *increment { "++" } else { "--" };
            out.push('(');
            if *prefix {
                out.push_str(sym);
                expr(out, target);
            } else {
                expr(out, target);
                out.push_str(sym);
            }
            out.push(')');
        }
        ExprKind::Cond(c, a, b) => {
            out.push('(');
            expr(out, c);
            out.push_str(" ? ");
            expr(out, a);
            out.push_str(" : ");
            expr(out, b);
            out.push(')');
        }
        ExprKind::Call(name, args) => {
            out.push_str(name);
            out.push('(');
            list(out, args);
            out.push(')');
        }
        ExprKind::List(items) => {
            out.push('(');
            list(out, items);
            out.push(')');
        }
    }
}

fn list(out: &mut String, items: &[Expr]) {
    for (i, a) in items.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        expr(out, a);
    }
}

fn decl(out: &mut String, d: &VarDecl) {
    if d.local {
        out.push_str("local ");
    }
    let _ = write!(out, "{} {}", d.ty, d.name);
    match &d.array {
        Some(ArraySpec::Unsized) => out.push_str("[]"),
        Some(ArraySpec::Sized(e)) => {
            out.push('[');
            expr(out, e);
            out.push(']');
        }
        None => {}
    }
    if !d.args.is_empty() {
        out.push('(');
        list(out, &d.args);
        out.push(')');
    }
    if !d.attrs.is_empty() {
        out.push_str(" <");
        for (i, a) in d.attrs.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            let _ = write!(out, "{}=", a.key);
            // Parenthesized so that `>` inside the value cannot close the list.
            out.push('(');
            expr(out, &a.value);
            out.push(')');
        }
        out.push('>');
    }
    match &d.init {
        Some(Init::List(items)) => {
            out.push_str(" = { ");
            list(out, items);
            out.push_str(" }");
        }
        Some(Init::Expr(e)) => {
            out.push_str(" = ");
            expr(out, e);
        }
        None => {}
    }
    out.push(';');
}

impl Printer {
    fn line(&mut self, text: &str) {
        for _ in 0..self.indent {
            self.out.push_str("    ");
        }
        self.out.push_str(text);
        self.out.push('\n');
    }

    fn typedef(&mut self, td: &TypeDef) {
        match &td.kind {
            TypeKind::Record { params: ps, body } => {
                let mut head = String::from("typedef struct ");
                if !ps.is_empty() {
                    params(&mut head, ps);
                    head.push(' ');
                }
                head.push('{');
                self.line(&head);
                self.block_body(body);
                self.line(&format!("}} {};", td.name));
            }
            TypeKind::Enum { base, variants } => {
                self.line(&format!("typedef enum <{base}> {{"));
                self.indent += 1;
                for v in variants {
                    let mut s = v.name.to_string();
                    if let Some(e) = &v.value {
                        s.push_str(" = ");
                        expr(&mut s, e);
                    }
                    s.push(',');
                    self.line(&s);
                }
                self.indent -= 1;
                self.line(&format!("}} {};", td.name));
            }
            TypeKind::Alias(target) => self.line(&format!("typedef {target} {};", td.name)),
        }
    }

    fn function(&mut self, f: &FunctionDef) {
        let mut head = format!("{} {}", f.ret, f.name);
        params(&mut head, &f.params);
        head.push_str(" {");
        self.line(&head);
        self.block_body(&f.body);
        self.line("}");
    }

    fn block_body(&mut self, body: &[Stmt]) {
        self.indent += 1;
        for s in body {
            self.stmt(s);
        }
        self.indent -= 1;
    }

    fn stmt(&mut self, s: &Stmt) {
        match &s.kind {
            StmtKind::Decl(d) => {
                let mut t = String::new();
                decl(&mut t, d);
                self.line(&t);
            }
            StmtKind::If { cond, then, els } => {
                self.line(&format!("if ({})", print_expr(cond)));
                self.nested(then);
                if let Some(e) = els {
                    self.line("else");
                    self.nested(e);
                }
            }
            StmtKind::While { cond, body } => {
                self.line(&format!("while ({})", print_expr(cond)));
                self.nested(body);
            }
            StmtKind::DoWhile { body, cond } => {
                self.line("do");
                self.nested(body);
                self.line(&format!("while ({});", print_expr(cond)));
            }
            StmtKind::For {
                init,
                cond,
                step,
                body,
            } => {
                let mut head = String::from("for (");
                match init.as_deref() {
                    Some(Stmt {
                        kind: StmtKind::Decl(d),
                        ..
                    }) => decl(&mut head, d),
                    Some(Stmt {
                        kind: StmtKind::Expr(e),
                        ..
                    }) => {
                        expr(&mut head, e);
                        head.push(';');
                    }
                    _ => head.push(';'),
                }
                head.push(' ');
                if let Some(c) = cond {
                    expr(&mut head, c);
                }
                head.push_str("; ");
                if let Some(st) = step {
                    expr(&mut head, st);
                }
                head.push(')');
                self.line(&head);
                self.nested(body);
            }
            StmtKind::Switch { scrutinee, cases } => {
                self.line(&format!("switch ({}) {{", print_expr(scrutinee)));
                for c in cases {
                    match &c.label {
                        Some(l) => self.line(&format!("case {}:", print_expr(l))),
                        None => self.line("default:"),
                    }
                    self.block_body(&c.body);
                }
                self.line("}");
            }
            StmtKind::Break => self.line("break;"),
            StmtKind::Continue => self.line("continue;"),
            StmtKind::Return(None) => self.line("return;"),
            StmtKind::Return(Some(e)) => self.line(&format!("return {};", print_expr(e))),
            StmtKind::Expr(e) => self.line(&format!("{};", print_expr(e))),
            StmtKind::Block(b) => {
                self.line("{");
                self.block_body(b);
                self.line("}");
            }
            StmtKind::Empty => self.line(";"),
        }
    }

    fn nested(&mut self, s: &Stmt) {
        if matches!(s.kind, StmtKind::Block(_)) {
            self.stmt(s);
        } else {
            self.indent += 1;
            self.stmt(s);
            self.indent -= 1;
        }
    }
}
