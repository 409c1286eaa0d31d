//! Declarations: locals bind values, inputs move bytes and make decisions.

use super::expr::local_width;
use super::{EResult, EngineError, Exec, Flow, DEFAULT_CODEC_MAXLEN, HINT_LENGTH_MODULUS, MAX_CALL_DEPTH};
use crate::decisionstream::{ChoiceSpec, DsError, EventKind};
use crate::runtime::value::{int_from_bytes, int_to_bytes, normalize};
use crate::runtime::{Binding, Determined, NodeStart, RecordValue, Value};
use crate::templatelang::ast::{ArraySpec, Init, TypeKind, VarDecl};
use crate::templatelang::{MagicValue, NativeType, Span, TypeRef};

/// Upper bound for local array lengths.
const MAX_LOCAL_ARRAY: i64 = 1 << 24;
/// Unconstrained strings get a length in `[0, STRING_LENGTHS)`.
const STRING_LENGTHS: u8 = 16;

fn type_range(w: u8, signed: bool) -> (i64, i64) {
    match (w, signed) {
        (8, true) => (i64::MIN, i64::MAX),
        (8, false) => (0, i64::MAX),
        (w, true) => {
            let half = 1i64 << (w as u32 * 8 - 1);
            (-half, half - 1)
        }
        (w, false) => (0, (1i64 << (w as u32 * 8)) - 1),
    }
}

impl<'u> Exec<'u> {
    fn convert_local(&self, v: Value, t: Option<TypeRef>) -> Value {
        match (t, v) {
            (Some(TypeRef::Native(NativeType::Str)), v) => match v.as_bytes() {
                Some(b) => {
                    let end = b.iter().position(|&c| c == 0).unwrap_or(b.len());
                    Value::str(&b[..end])
                }
                None => v,
            },
            (Some(TypeRef::Native(NativeType::Float)), Value::Int(x)) => Value::Float(x as f64),
            (t, Value::Int(x)) => match t.and_then(|t| self.unit.scalar_width(t)) {
                Some((w, s)) => Value::Int(normalize(x, w, s)),
                None => Value::Int(x),
            },
            (Some(t), Value::Float(f)) if self.unit.scalar_width(t).is_some() => {
                let (w, s) = self.unit.scalar_width(t).unwrap();
                Value::Int(normalize(f as i64, w, s))
            }
            (_, v) => v,
        }
    }

    fn default_local(&self, t: Option<TypeRef>) -> Value {
        match t {
            Some(TypeRef::Native(NativeType::Str)) => Value::str(b""),
            Some(TypeRef::Native(NativeType::Float)) => Value::Float(0.0),
            _ => Value::Int(0),
        }
    }

    pub(super) fn declare_local(&mut self, d: &'u VarDecl, span: Span) -> EResult<()> {
        let t = self.unit.resolve_type(&d.ty);
        if matches!(t, Some(TypeRef::Record(_))) {
            return Err(self.err(span, format!("local `{}` cannot have a record type", d.name)));
        }
        let width = local_width(t, self);
        let value = match &d.array {
            Some(spec) => {
                let mut items = Vec::new();
                match &d.init {
                    Some(Init::List(list)) => {
                        for e in list {
                            let v = self.eval(e)?;
                            items.push(self.convert_local(v, t));
                        }
                    }
                    Some(Init::Expr(e)) => {
                        let v = self.eval(e)?;
                        let n = v.len().unwrap_or(0);
                        for i in 0..n {
                            let x = v.index(i).unwrap();
                            items.push(self.convert_local(x, t));
                        }
                    }
                    None => {}
                }
                if let ArraySpec::Sized(e) = spec {
                    let n = self.eval_int(e)?;
                    if !(0..=MAX_LOCAL_ARRAY).contains(&n) {
                        return Err(self.err(span, format!("bad local array length {n}")));
                    }
                    let fill = self.default_local(t);
                    items.resize(n as usize, fill);
                }
                Value::array(items)
            }
            None => {
                let v = match &d.init {
                    Some(Init::Expr(e)) => self.eval(e)?,
                    Some(Init::List(list)) if list.len() == 1 => self.eval(&list[0])?,
                    Some(Init::List(_)) => {
                        return Err(self.err(span, "scalar local initialized with a list"))
                    }
                    None => self.default_local(t),
                };
                self.convert_local(v.deep_copy(), t)
            }
        };
        self.scope.declare(
            d.name.clone(),
            Binding {
                value,
                width,
                input: false,
            },
        );
        Ok(())
    }

    fn begin_node(&mut self, name: String, type_name: String) -> EResult<usize> {
        let optional = self.ds.take_lookahead_pending();
        let pos = self.buf.position();
        let id = self.tree.begin(NodeStart {
            name,
            type_name,
            file_start: pos,
            seed_start: self.ds.cursor(),
            event_start: self.ds.events().len(),
            optional,
            rewrite: pos < self.buf.high_water(),
        });
        self.ds.set_node(Some(id));
        if self.splice_target == Some(id) {
            self.ds.splice_target_begin()?;
        }
        Ok(id)
    }

    fn end_node(&mut self, id: usize) -> EResult<()> {
        self.tree
            .end(self.buf.position(), self.ds.cursor(), self.ds.events().len());
        self.ds.set_node(Some(self.tree.current_id()));
        if self.splice_target == Some(id) {
            self.splice_used = Some(self.ds.splice_target_end()?);
        }
        Ok(())
    }

    pub(super) fn declare_input(&mut self, d: &'u VarDecl, span: Span) -> EResult<Flow> {
        let unit = self.unit;
        let t = unit
            .resolve_type(&d.ty)
            .ok_or_else(|| self.err(span, format!("unknown type `{}`", d.ty)))?;
        if let Some(id) = d.decl_id {
            self.coverage[id] = true;
        }
        let label = match &d.array {
            Some(_) => format!("{}[]", d.ty),
            None => d.ty.to_string(),
        };
        let node = self.begin_node(d.name.to_string(), label)?;
        let mut flow = Flow::Normal;
        let value = match (t, &d.array) {
            (TypeRef::Record(idx), None) => {
                let (v, f) = self.record_instance(idx, d, span)?;
                flow = f;
                v
            }
            (TypeRef::Record(idx), Some(ArraySpec::Sized(len))) => {
                let n = self.eval_int(len)?;
                let n = self.array_len(n, 1)?;
                let mut items = Vec::with_capacity(n);
                for i in 0..n {
                    let el = self.begin_node(format!("{}[{i}]", d.name), d.ty.to_string())?;
                    let (v, f) = self.record_instance(idx, d, span)?;
                    self.end_node(el)?;
                    items.push(v);
                    if let Flow::Return(_) = f {
                        flow = f;
                        break;
                    }
                }
                Value::array(items)
            }
            (TypeRef::Native(NativeType::Str), None) => self.input_string(d, span)?,
            (_, Some(ArraySpec::Unsized)) => self.input_codec(d, span)?,
            (_, Some(ArraySpec::Sized(len))) => match unit.scalar_width(t) {
                Some((w, s)) => self.input_scalar_array(d, t, w, s, len, span)?,
                None => return Err(self.err(span, format!("unsupported input array type `{}`", d.ty))),
            },
            (_, None) => match unit.scalar_width(t) {
                Some((w, s)) => {
                    let spec = self.base_spec(d, t, w, s)?;
                    Value::Int(self.scalar_io(&spec, &d.name, span)?)
                }
                None => return Err(self.err(span, format!("unsupported input type `{}`", d.ty))),
            },
        };
        self.end_node(node)?;
        let width = match &d.array {
            None => unit.scalar_width(t),
            Some(_) => None,
        };
        self.scope.declare(
            d.name.clone(),
            Binding {
                value,
                width,
                input: true,
            },
        );
        Ok(flow)
    }

    fn record_instance(&mut self, idx: usize, d: &'u VarDecl, span: Span) -> EResult<(Value, Flow)> {
        let unit = self.unit;
        let td = &unit.typedefs[idx];
        let TypeKind::Record { params, body } = &td.kind else {
            unreachable!("record index points at a record")
        };
        let mut args = Vec::with_capacity(d.args.len());
        for a in &d.args {
            args.push(self.eval(a)?);
        }
        if self.depth >= MAX_CALL_DEPTH {
            return Err(EngineError::RecursionLimit);
        }
        self.depth += 1;
        self.scope.push();
        for (p, v) in params.iter().zip(args) {
            let pt = unit.resolve_type(&p.ty);
            let width = if p.is_array { None } else { local_width(pt, self) };
            let v = self.convert_local(v.deep_copy(), if p.is_array { None } else { pt });
            self.scope.declare(
                p.name.clone(),
                Binding {
                    value: v,
                    width,
                    input: false,
                },
            );
        }
        let flow = self.exec_block(body);
        let fields = self.scope.pop();
        self.depth -= 1;
        let flow = match flow? {
            Flow::Return(v) => Flow::Return(v),
            _ => Flow::Normal,
        };
        let _ = span;
        Ok((
            Value::Record(std::rc::Rc::new(RecordValue {
                type_name: td.name.clone(),
                fields,
            })),
            flow,
        ))
    }

    /// Length check for input arrays, with the `ChangeArrayLength` fallback.
    fn array_len(&mut self, n: i64, elem: usize) -> EResult<usize> {
        let pos = self.buf.position();
        let remaining = self.buf.budget().saturating_sub(pos);
        if n >= 0 && (n as u128) * (elem.max(1) as u128) <= remaining as u128 {
            return Ok(n as usize);
        }
        if !self.hint_mode {
            return Err(EngineError::BudgetExceeded {
                offset: pos,
                len: n.max(0) as usize * elem,
                budget: self.buf.budget(),
            });
        }
        if self.parsing {
            return Err(EngineError::ParseRejected(format!(
                "array length {n} out of range at offset {pos}"
            )));
        }
        let b = self.ds.raw(1)?[0];
        Ok((b % HINT_LENGTH_MODULUS) as usize)
    }

    fn attr(&self, d: &'u VarDecl, key: &str) -> Option<&'u crate::templatelang::ast::Expr> {
        d.attrs.iter().find(|a| &*a.key == key).map(|a| &a.value)
    }

    fn bounds(&mut self, d: &'u VarDecl, w: u8, s: bool, span: Span) -> EResult<Option<(i64, i64)>> {
        let lo = match self.attr(d, "min") {
            Some(e) => Some(self.eval_int(e)?),
            None => None,
        };
        let hi = match self.attr(d, "max") {
            Some(e) => Some(self.eval_int(e)?),
            None => None,
        };
        if lo.is_none() && hi.is_none() {
            return Ok(None);
        }
        let (tmin, tmax) = type_range(w, s);
        let (lo, hi) = (lo.unwrap_or(tmin), hi.unwrap_or(tmax));
        if lo > hi {
            return Err(self.err(span, format!("empty range <min={lo}, max={hi}>")));
        }
        Ok(Some((lo, hi)))
    }

    /// Choice for one scalar: init-list, then mined magic, then enum values, then bounds.
    fn base_spec(&mut self, d: &'u VarDecl, t: TypeRef, w: u8, s: bool) -> EResult<ChoiceSpec> {
        let mut spec = ChoiceSpec {
            width: w,
            signed: s,
            big_endian: self.big_endian,
            ..ChoiceSpec::default()
        };
        if let Some(Init::List(items)) = &d.init {
            for e in items {
                if let Value::Int(v) = self.eval(e)? {
                    spec.candidates.push(v);
                }
            }
        }
        if spec.candidates.is_empty() {
            if let Some(vals) = self.unit.magic.get(&d.name, None) {
                spec.candidates = magic_ints(vals);
            }
        }
        if spec.candidates.is_empty() {
            if let TypeRef::Enum(i) = t {
                spec.candidates = self.unit.enums[i].variants.iter().map(|v| v.1).collect();
            }
        }
        if spec.candidates.is_empty() {
            let span = Span::default();
            spec.bounds = self.bounds(d, w, s, span)?;
        }
        Ok(spec)
    }

    /// Reads or writes one integer, honoring reservations.
    fn scalar_io(&mut self, spec: &ChoiceSpec, field: &str, span: Span) -> EResult<i64> {
        let w = spec.width as usize;
        let pos = self.buf.position();
        match self.buf.reservations(pos, w) {
            Determined::Partial => Err(self.err(
                span,
                format!("`{field}` at offset {pos} is only partly fixed by a lookahead"),
            )),
            Determined::Full(bytes) => {
                if self.parsing {
                    self.buf.read(w).map_err(|e| self.buf_err(e))?;
                } else {
                    self.buf.write(&bytes).map_err(|e| self.buf_err(e))?;
                }
                Ok(int_from_bytes(&bytes, spec.signed, spec.big_endian))
            }
            Determined::None => {
                if self.parsing {
                    let bytes = self.buf.read(w).map_err(|e| self.buf_err(e))?;
                    let v = int_from_bytes(&bytes, spec.signed, spec.big_endian);
                    let r = self.ds.record_value(spec, v);
                    self.defer(r, field, pos)?;
                    Ok(v)
                } else {
                    let v = self.ds.choose_value(spec)?;
                    self.buf
                        .write(&int_to_bytes(v, spec.width, spec.big_endian))
                        .map_err(|e| self.buf_err(e))?;
                    Ok(v)
                }
            }
        }
    }

    fn input_scalar_array(
        &mut self,
        d: &'u VarDecl,
        t: TypeRef,
        w: u8,
        s: bool,
        len: &'u crate::templatelang::ast::Expr,
        span: Span,
    ) -> EResult<Value> {
        let n = self.eval_int(len)?;
        let n = self.array_len(n, w as usize)?;
        let total = n * w as usize;
        if w == 1 {
            let cands = self.array_candidates(d, n)?;
            if !cands.is_empty() {
                let bytes = self.bytes_io(&cands, total, &d.name, span)?;
                return Ok(Value::bytes(bytes, s));
            }
        }
        let base = self.base_spec(d, t, w, s)?;
        let has_init = matches!(d.init, Some(Init::List(_)));
        let per_index = !has_init
            && self
                .unit
                .magic
                .entries()
                .iter()
                .any(|(k, _)| k.name == d.name && k.index.is_some());
        let mut vals = Vec::with_capacity(n);
        for i in 0..n {
            let v = match per_index.then(|| self.unit.magic.get(&d.name, Some(i as i64))).flatten() {
                Some(m) => {
                    let spec = ChoiceSpec {
                        candidates: magic_ints(m),
                        bounds: None,
                        ..base.clone()
                    };
                    self.scalar_io(&spec, &d.name, span)?
                }
                None => self.scalar_io(&base, &d.name, span)?,
            };
            vals.push(v);
        }
        Ok(if w == 1 {
            Value::bytes(vals.into_iter().map(|v| v as u8).collect(), s)
        } else {
            Value::array(vals.into_iter().map(Value::Int).collect())
        })
    }

    /// Whole-array candidates of exactly `n` bytes: string init-list items, then mined strings.
    fn array_candidates(&mut self, d: &'u VarDecl, n: usize) -> EResult<Vec<Vec<u8>>> {
        let mut out = Vec::new();
        if let Some(Init::List(items)) = &d.init {
            for e in items {
                if let Value::Str(b) = self.eval(e)? {
                    if b.len() == n && !out.iter().any(|x: &Vec<u8>| x[..] == b[..]) {
                        out.push(b.to_vec());
                    }
                }
            }
            return Ok(out);
        }
        if let Some(vals) = self.unit.magic.get(&d.name, None) {
            for v in vals {
                if let MagicValue::Bytes(b) = v {
                    if b.len() == n {
                        out.push(b.clone());
                    }
                }
            }
        }
        Ok(out)
    }

    fn bytes_io(&mut self, cands: &[Vec<u8>], total: usize, field: &str, span: Span) -> EResult<Vec<u8>> {
        let pos = self.buf.position();
        match self.buf.reservations(pos, total) {
            Determined::Partial => Err(self.err(
                span,
                format!("`{field}` at offset {pos} is only partly fixed by a lookahead"),
            )),
            Determined::Full(bytes) => {
                if self.parsing {
                    self.buf.read(total).map_err(|e| self.buf_err(e))?;
                } else {
                    self.buf.write(&bytes).map_err(|e| self.buf_err(e))?;
                }
                Ok(bytes)
            }
            Determined::None => {
                if self.parsing {
                    let bytes = self.buf.read(total).map_err(|e| self.buf_err(e))?;
                    let r = self.ds.record_bytes(cands, &bytes);
                    self.defer(r, field, pos)?;
                    Ok(bytes)
                } else {
                    let bytes = self.ds.choose_bytes(cands, total)?;
                    self.buf.write(&bytes).map_err(|e| self.buf_err(e))?;
                    Ok(bytes)
                }
            }
        }
    }

    fn string_candidates(&mut self, d: &'u VarDecl) -> EResult<Vec<Vec<u8>>> {
        let mut out: Vec<Vec<u8>> = Vec::new();
        if let Some(Init::List(items)) = &d.init {
            for e in items {
                if let Some(b) = self.eval(e)?.as_bytes() {
                    if !out.contains(&b) {
                        out.push(b);
                    }
                }
            }
            return Ok(out);
        }
        if let Some(vals) = self.unit.magic.get(&d.name, None) {
            for v in vals {
                if let MagicValue::Bytes(b) = v {
                    out.push(b.clone());
                }
            }
        }
        Ok(out)
    }

    fn input_string(&mut self, d: &'u VarDecl, span: Span) -> EResult<Value> {
        let cands = self.string_candidates(d)?;
        let pos = self.buf.position();
        if self.parsing {
            let avail = self.buf.size().saturating_sub(pos);
            let rest = self.buf.peek(pos, avail).unwrap_or(&[]);
            let Some(n) = rest.iter().position(|&b| b == 0) else {
                return Err(EngineError::ParseRejected(format!(
                    "unterminated string `{}` at offset {pos}",
                    d.name
                )));
            };
            let bytes = rest[..n].to_vec();
            self.buf.read(n + 1).map_err(|e| self.buf_err(e))?;
            let r = if cands.contains(&bytes) {
                self.ds.record_bytes(&cands, &bytes)
            } else if cands.is_empty() && n < STRING_LENGTHS as usize {
                self.ds.emit_gate(false);
                self.ds.emit_raw(&[n as u8]);
                let chars: Vec<u8> = bytes.iter().map(|&c| c - 1).collect();
                self.ds.emit_raw(&chars);
                Ok(())
            } else if n <= 255 {
                let enabled = self.ds.set_evil(true);
                self.ds.emit_gate(true);
                self.ds.set_evil(enabled);
                self.ds.emit_raw(&[n as u8]);
                self.ds.emit_raw(&bytes);
                if enabled {
                    Ok(())
                } else {
                    Err(DsError::Unrepresentable)
                }
            } else {
                Err(DsError::Unrepresentable)
            };
            self.defer(r, &d.name, pos)?;
            return Ok(Value::str(&bytes));
        }
        let bytes = if self.ds.evil_gate()? {
            let n = self.ds.raw(1)?[0] as usize;
            self.ds
                .raw(n)?
                .into_iter()
                .map(|b| if b == 0 { 1 } else { b })
                .collect()
        } else if !cands.is_empty() {
            let i = self.ds.choose_index(cands.len())?;
            cands[i].clone()
        } else {
            let n = (self.ds.raw(1)?[0] % STRING_LENGTHS) as usize;
            self.ds
                .raw(n)?
                .into_iter()
                .map(|b| 1 + b % 255)
                .collect::<Vec<u8>>()
        };
        let mut out = bytes.clone();
        out.push(0);
        self.buf.write(&out).map_err(|e| self.buf_err(e))?;
        let _ = span;
        Ok(Value::str(&bytes))
    }

    /// `ubyte data[] <codec=..., size=..., maxlen=...>`: raw bytes are chosen
    /// and passed through the named codec before being written.
    fn input_codec(&mut self, d: &'u VarDecl, span: Span) -> EResult<Value> {
        let name = match self.attr(d, "codec") {
            Some(e) => self.eval(e)?.as_bytes().unwrap_or_default(),
            None => return Err(self.err(span, "unsized input array without a codec")),
        };
        let name = String::from_utf8_lossy(&name).into_owned();
        let codec = self
            .opts
            .codecs
            .get(&name)
            .ok_or_else(|| self.err(span, format!("unknown codec `{name}`")))?;
        let maxlen = match self.attr(d, "maxlen") {
            Some(e) => self.eval_int(e)?,
            None => DEFAULT_CODEC_MAXLEN,
        };
        let len_spec = ChoiceSpec {
            width: if maxlen <= 0xFFFF { 2 } else { 4 },
            bounds: Some((0, maxlen.max(0))),
            ..ChoiceSpec::default()
        };
        let elem_spec = ChoiceSpec {
            width: 1,
            bounds: self.bounds(d, 1, false, span)?,
            ..ChoiceSpec::default()
        };
        self.ds.mark(EventKind::StreamSwitch);
        let pos = self.buf.position();
        let encoded = if self.parsing {
            let size = match self.attr(d, "size") {
                Some(e) => self.eval_int(e)?,
                None => return Err(self.err(span, "codec region without a size")),
            };
            if size < 0 {
                return Err(EngineError::ParseRejected(format!(
                    "negative size {size} for `{}`",
                    d.name
                )));
            }
            let bytes = self.buf.read(size as usize).map_err(|e| self.buf_err(e))?;
            match codec.decode(&bytes) {
                Ok(raw) if codec.encode(&raw) == bytes => {
                    let r = self.ds.record_value(&len_spec, raw.len() as i64);
                    self.defer(r, &d.name, pos)?;
                    for b in raw {
                        let r = self.ds.record_value(&elem_spec, b as i64);
                        self.defer(r, &d.name, pos)?;
                    }
                }
                _ => self.defer(Err(DsError::Unrepresentable), &d.name, pos)?,
            }
            bytes
        } else {
            let n = self.ds.choose_value(&len_spec)?.max(0) as usize;
            let mut raw = Vec::with_capacity(n);
            for _ in 0..n {
                raw.push(self.ds.choose_value(&elem_spec)? as u8);
            }
            let enc = codec.encode(&raw);
            self.buf.write(&enc).map_err(|e| self.buf_err(e))?;
            enc
        };
        self.ds.mark(EventKind::StreamSwitch);
        Ok(Value::bytes(encoded, false))
    }
}

fn magic_ints(vals: &[MagicValue]) -> Vec<i64> {
    vals.iter()
        .filter_map(|v| match v {
            MagicValue::Int(i) => Some(*i),
            MagicValue::Bytes(_) => None,
        })
        .collect()
}
