use std::cell::RefCell;
use std::fmt;
use std::rc::Rc;

use crate::templatelang::Ident;

/// Interpreter value. Integers are stored already truncated and sign- or
/// zero-extended to their declared width.
#[derive(Debug, Clone)]
pub enum Value {
    Void,
    Int(i64),
    Float(f64),
    /// Contents of a `string` (without the terminating NUL).
    Str(Rc<[u8]>),
    /// Array of one-byte integers, e.g. `char type[4]`.
    Bytes { data: Rc<[u8]>, signed: bool },
    /// Shared so that `+=`/`-=` and element assignment can mutate locals in place.
    Array(Rc<RefCell<Vec<Value>>>),
    Record(Rc<RecordValue>),
}

#[derive(Debug)]
pub struct RecordValue {
    pub type_name: Ident,
    /// Input fields in declaration order. A re-declared field keeps its slot.
    pub fields: Vec<(Ident, Value)>,
}

impl RecordValue {
    pub fn field(&self, name: &str) -> Option<&Value> {
        self.fields.iter().find(|(n, _)| &**n == name).map(|(_, v)| v)
    }
}

/// Truncates `v` to `width` bytes and extends back to 64 bits.
pub fn normalize(v: i64, width: u8, signed: bool) -> i64 {
    if width >= 8 {
        return v;
    }
    let bits = width as u32 * 8;
    let mask = (1u64 << bits) - 1;
    let raw = v as u64 & mask;
    if signed && raw >> (bits - 1) == 1 {
        (raw | !mask) as i64
    } else {
        raw as i64
    }
}

/// Masks to the unsigned bit pattern of `width` bytes.
pub fn mask(v: i64, width: u8) -> u64 {
    if width >= 8 {
        v as u64
    } else {
        v as u64 & ((1u64 << (width as u32 * 8)) - 1)
    }
}

pub fn int_to_bytes(v: i64, width: u8, big_endian: bool) -> Vec<u8> {
    let le = (v as u64).to_le_bytes();
    let mut out = le[..width as usize].to_vec();
    if big_endian {
        out.reverse();
    }
    out
}

pub fn int_from_bytes(bytes: &[u8], signed: bool, big_endian: bool) -> i64 {
    let mut acc: u64 = 0;
    if big_endian {
        for &b in bytes {
            acc = acc << 8 | b as u64;
        }
    } else {
        for &b in bytes.iter().rev() {
            acc = acc << 8 | b as u64;
        }
    }
    normalize(acc as i64, bytes.len() as u8, signed)
}

impl Value {
    pub fn bytes(data: Vec<u8>, signed: bool) -> Value {
        Value::Bytes {
            data: data.into(),
            signed,
        }
    }

    pub fn str(data: &[u8]) -> Value {
        Value::Str(data.into())
    }

    pub fn array(items: Vec<Value>) -> Value {
        Value::Array(Rc::new(RefCell::new(items)))
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(v) => Some(*v),
            Value::Float(f) => Some(*f as i64),
            _ => None,
        }
    }

    /// Byte view of strings and byte arrays.
    pub fn as_bytes(&self) -> Option<Vec<u8>> {
        match self {
            Value::Str(s) => Some(s.to_vec()),
            Value::Bytes { data, .. } => Some(data.to_vec()),
            Value::Array(items) => items
                .borrow()
                .iter()
                .map(|v| v.as_int().map(|x| x as u8))
                .collect(),
            _ => None,
        }
    }

    pub fn truthy(&self) -> bool {
        match self {
            Value::Void => false,
            Value::Int(v) => *v != 0,
            Value::Float(f) => *f != 0.0,
            Value::Str(s) => !s.is_empty(),
            Value::Bytes { data, .. } => !data.is_empty(),
            Value::Array(a) => !a.borrow().is_empty(),
            Value::Record(_) => true,
        }
    }

    /// Number of elements, for arrays and strings.
    pub fn len(&self) -> Option<usize> {
        match self {
            Value::Str(s) => Some(s.len()),
            Value::Bytes { data, .. } => Some(data.len()),
            Value::Array(a) => Some(a.borrow().len()),
            _ => None,
        }
    }

    pub fn index(&self, i: usize) -> Option<Value> {
        match self {
            Value::Str(s) => s.get(i).map(|&b| Value::Int(b as i64)),
            Value::Bytes { data, signed } => data
                .get(i)
                .map(|&b| Value::Int(normalize(b as i64, 1, *signed))),
            Value::Array(a) => a.borrow().get(i).cloned(),
            _ => None,
        }
    }

    /// Copy with fresh storage, so that assignment does not alias arrays.
    pub fn deep_copy(&self) -> Value {
        match self {
            Value::Array(a) => Value::array(a.borrow().iter().map(Value::deep_copy).collect()),
            other => other.clone(),
        }
    }

    /// Equality used by `==`, `switch` and the array set operators.
    pub fn loose_eq(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => a == b,
            (Value::Float(_), _) | (_, Value::Float(_)) => {
                match (self.as_float(), other.as_float()) {
                    (Some(a), Some(b)) => a == b,
                    _ => false,
                }
            }
            (Value::Record(a), Value::Record(b)) => Rc::ptr_eq(a, b),
            (Value::Void, Value::Void) => true,
            (Value::Int(_), _) | (_, Value::Int(_)) => false,
            _ => match (self.as_bytes(), other.as_bytes()) {
                (Some(a), Some(b)) => a == b,
                _ => false,
            },
        }
    }

    pub fn as_float(&self) -> Option<f64> {
        match self {
            Value::Int(v) => Some(*v as f64),
            Value::Float(f) => Some(*f),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Void => f.write_str("void"),
            Value::Int(v) => write!(f, "{v}"),
            Value::Float(v) => write!(f, "{v}"),
            Value::Str(s) | Value::Bytes { data: s, .. } => {
                write!(f, "\"{}\"", s.escape_ascii())
            }
            Value::Array(a) => {
                f.write_str("[")?;
                for (i, v) in a.borrow().iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str("]")
            }
            Value::Record(r) => write!(f, "<{}>", r.type_name),
        }
    }
}
