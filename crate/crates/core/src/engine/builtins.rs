//! Builtin functions.

use super::checksum::{adler32, crc32};
use super::{EResult, EngineError, Exec, FEOF_CHOICES};
use crate::decisionstream::{ChoiceSpec, DsError, EventKind, TokenSpec, DEFAULT_PREF_PROB};
use crate::runtime::{Determined, Value};
use crate::templatelang::ast::{AssignOp, Expr};
use crate::templatelang::Span;

/// `printf`-style formatting for `%d %i %u %x %X %s %c %%`.
pub fn format_message(fmt: &[u8], args: &[Value]) -> String {
    let mut out = String::new();
    let mut args = args.iter();
    let mut it = fmt.iter().copied().peekable();
    while let Some(c) = it.next() {
        if c != b'%' {
            out.push(c as char);
            continue;
        }
        let Some(spec) = it.next() else {
            out.push('%');
            break;
        };
        if spec == b'%' {
            out.push('%');
            continue;
        }
        let arg = args.next().cloned().unwrap_or(Value::Void);
        match spec {
            b'd' | b'i' => out.push_str(&arg.as_int().unwrap_or(0).to_string()),
            b'u' => out.push_str(&(arg.as_int().unwrap_or(0) as u64).to_string()),
            b'x' => out.push_str(&format!("{:x}", arg.as_int().unwrap_or(0))),
            b'X' => out.push_str(&format!("{:X}", arg.as_int().unwrap_or(0))),
            b's' => match arg.as_bytes() {
                Some(b) => out.push_str(&String::from_utf8_lossy(&b)),
                None => out.push_str(&arg.to_string()),
            },
            b'c' => out.push(arg.as_int().unwrap_or(0) as u8 as char),
            other => {
                out.push('%');
                out.push(other as char);
            }
        }
    }
    out
}

fn byte_list(v: &Value) -> Vec<Vec<u8>> {
    match v {
        Value::Array(items) => items.borrow().iter().filter_map(Value::as_bytes).collect(),
        other => other.as_bytes().into_iter().collect(),
    }
}

fn fit(mut t: Vec<u8>, len: usize) -> Vec<u8> {
    t.resize(len, 0);
    t
}

impl<'u> Exec<'u> {
    pub(super) fn builtin(&mut self, name: &str, args: &'u [Expr], span: Span) -> EResult<Value> {
        match name {
            "FTell" => Ok(Value::Int(self.buf.position() as i64)),
            "FSeek" => {
                let p = self.eval_int(&args[0])?;
                if p < 0 {
                    return Err(EngineError::OutOfRange { offset: 0 });
                }
                self.buf.seek(p as usize).map_err(|e| self.buf_err(e))?;
                Ok(Value::Int(0))
            }
            "FEof" => self.feof().map(|b| Value::Int(b as i64)),
            "FileSize" => Ok(Value::Int(if self.parsing {
                self.buf.size()
            } else {
                self.buf.high_water()
            } as i64)),
            "ReadByte" => self.read_byte(args, span),
            "ReadBytes" => self.read_bytes(args, span),
            "Checksum" => {
                let algo = self.eval_int(&args[0])?;
                let start = self.eval_int(&args[1])?;
                let len = self.eval_int(&args[2])?;
                if start < 0 || len < 0 {
                    return Err(self.err(span, format!("bad checksum range {start}+{len}")));
                }
                let data = self.buf.slice(start as usize, (start + len) as usize);
                match algo {
                    0 => Ok(Value::Int(crc32(&data) as i64)),
                    1 => Ok(Value::Int(adler32(&data) as i64)),
                    a => Err(EngineError::ChecksumAlgoUnknown(a)),
                }
            }
            "SetEvilBit" => {
                let on = self.eval(&args[0])?.truthy();
                Ok(Value::Int(self.ds.set_evil(on) as i64))
            }
            "ChangeArrayLength" => {
                let on = match args.first() {
                    Some(a) => self.eval(a)?.truthy(),
                    None => true,
                };
                let prev = std::mem::replace(&mut self.hint_mode, on);
                Ok(Value::Int(prev as i64))
            }
            "Warning" | "Printf" => {
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    vals.push(self.eval(a)?);
                }
                let fmt = vals[0].as_bytes().unwrap_or_default();
                let msg = format_message(&fmt, &vals[1..]);
                log::debug!("{name}: {msg}");
                if name == "Warning" {
                    self.warnings.push(msg);
                }
                Ok(Value::Int(0))
            }
            "BigEndian" => {
                self.big_endian = true;
                Ok(Value::Void)
            }
            "LittleEndian" => {
                self.big_endian = false;
                Ok(Value::Void)
            }
            "Strlen" => {
                let v = self.eval(&args[0])?;
                let b = v
                    .as_bytes()
                    .ok_or_else(|| self.err(span, format!("Strlen of {v}")))?;
                Ok(Value::Int(b.iter().position(|&c| c == 0).unwrap_or(b.len()) as i64))
            }
            _ => Err(self.err(span, format!("unknown builtin `{name}`"))),
        }
    }

    fn feof(&mut self) -> EResult<bool> {
        let pos = self.buf.position();
        if pos >= self.buf.budget() {
            return Ok(true);
        }
        self.ds.begin_group(EventKind::LookaheadCall);
        let r = if self.parsing {
            let eof = pos >= self.buf.size();
            self.ds.emit_index(if eof { 0 } else { 1 }, FEOF_CHOICES);
            Ok(eof)
        } else {
            self.ds.choose_index(FEOF_CHOICES).map(|i| i == 0)
        };
        self.ds.end_group();
        Ok(r?)
    }

    fn position_arg(&mut self, e: &'u Expr, len: usize) -> EResult<usize> {
        let p = self.eval_int(e)?;
        if p < 0 || p as usize + len > self.buf.budget() {
            return Err(EngineError::OutOfRange { offset: p.max(0) as usize });
        }
        Ok(p as usize)
    }

    /// `ReadByte(pos[, choices])`: peeks one byte; the value is reserved so
    /// that the declaration reaching `pos` later agrees with it.
    fn read_byte(&mut self, args: &'u [Expr], span: Span) -> EResult<Value> {
        let pos = self.position_arg(&args[0], 1)?;
        let candidates = match args.get(1) {
            Some(a) => {
                let v = self.eval(a)?;
                match &v {
                    Value::Array(items) => items.borrow().iter().filter_map(Value::as_int).collect(),
                    other => other
                        .as_bytes()
                        .ok_or_else(|| self.err(span, format!("bad ReadByte choices {other}")))?
                        .into_iter()
                        .map(i64::from)
                        .collect(),
                }
            }
            None => Vec::new(),
        };
        if let Some(b) = self.buf.determined_byte(pos) {
            self.ds.mark(EventKind::LookaheadCall);
            return Ok(Value::Int(b as i64));
        }
        let spec = ChoiceSpec {
            candidates,
            ..ChoiceSpec::unconstrained(1, false)
        };
        self.ds.begin_group(EventKind::LookaheadCall);
        let r = self.read_byte_inner(pos, &spec);
        self.ds.end_group();
        Ok(Value::Int(r? as i64))
    }

    fn read_byte_inner(&mut self, pos: usize, spec: &ChoiceSpec) -> EResult<u8> {
        let b = if self.parsing {
            let Some(&[b]) = self.buf.peek(pos, 1) else {
                return Err(EngineError::ParseRejected(format!(
                    "lookahead past the end of file at offset {pos}"
                )));
            };
            let r = self.ds.record_value(spec, b as i64);
            self.defer(r, "ReadByte", pos)?;
            b
        } else {
            self.ds.choose_value(spec)? as u8
        };
        self.buf.reserve(pos, &[b]).map_err(|e| self.buf_err(e))?;
        Ok(b)
    }

    /// `ReadBytes(out, pos, len[, preferred[, possible[, p]]])`: peeks a token,
    /// stores it in `out` and returns 1, or returns 0 when no token is chosen.
    fn read_bytes(&mut self, args: &'u [Expr], span: Span) -> EResult<Value> {
        let len = self.eval_int(&args[2])?;
        if len < 0 {
            return Err(self.err(span, format!("negative ReadBytes length {len}")));
        }
        let len = len as usize;
        let pos = self.position_arg(&args[1], len)?;
        if !matches!(self.buf.determined(pos, len), Determined::None) {
            return Err(self.err(span, format!("ReadBytes over fixed bytes at offset {pos}")));
        }
        let spec = if args.len() > 3 {
            let preferred = byte_list(&self.eval(&args[3])?);
            let possible = match args.get(4) {
                Some(a) => byte_list(&self.eval(a)?),
                None => preferred.clone(),
            };
            let pref_prob = match args.get(5) {
                Some(a) => self
                    .eval(a)?
                    .as_float()
                    .ok_or_else(|| self.err(span, "ReadBytes probability must be a number"))?,
                None => DEFAULT_PREF_PROB,
            };
            Some(TokenSpec {
                preferred: preferred.into_iter().map(|t| fit(t, len)).collect(),
                possible: possible.into_iter().map(|t| fit(t, len)).collect(),
                pref_prob,
                width: len,
            })
        } else {
            None
        };
        self.ds.begin_group(EventKind::LookaheadCall);
        let r = self.read_bytes_inner(pos, len, spec.as_ref());
        self.ds.end_group();
        match r? {
            Some(t) => {
                self.buf.reserve(pos, &t).map_err(|e| self.buf_err(e))?;
                self.assign(AssignOp::Set, &args[0], Value::bytes(t, false), span)?;
                Ok(Value::Int(1))
            }
            None => Ok(Value::Int(0)),
        }
    }

    fn read_bytes_inner(&mut self, pos: usize, len: usize, spec: Option<&TokenSpec>) -> EResult<Option<Vec<u8>>> {
        let observed = if self.parsing {
            self.buf.peek(pos, len).map(<[u8]>::to_vec)
        } else {
            None
        };
        let Some(spec) = spec else {
            if self.parsing {
                let t = observed.ok_or_else(|| {
                    EngineError::ParseRejected(format!("lookahead past the end of file at offset {pos}"))
                })?;
                self.ds.emit_raw(&t);
                return Ok(Some(t));
            }
            return Ok(Some(self.ds.raw(len)?));
        };
        if !self.parsing {
            return Ok(self.ds.choose_token(spec)?);
        }
        match self.ds.record_token(spec, observed.as_deref()) {
            Ok(t) => Ok(t),
            Err(DsError::Unrepresentable) => {
                self.defer(Err(DsError::Unrepresentable), "ReadBytes", pos)?;
                Ok(observed)
            }
            Err(e) => Err(e.into()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formats() {
        let args = [Value::Int(255), Value::str(b"ok"), Value::Int(65)];
        assert_eq!(format_message(b"%d %x %X %s %c 100%%", &[args[0].clone(), args[0].clone(), args[0].clone(), args[1].clone(), args[2].clone()]), "255 ff FF ok A 100%");
        assert_eq!(format_message(b"%u", &[Value::Int(-1)]), u64::MAX.to_string());
    }
}
