/// Built-in scalar types of the template language.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NativeType {
    Int { width: u8, signed: bool },
    /// NUL-terminated string.
    Str,
    Float,
    Void,
}

impl NativeType {
    pub fn lookup(name: &str) -> Option<NativeType> {
        use NativeType::*;
        let int = |width, signed| Int { width, signed };
        Some(match name {
            "char" | "byte" | "int8" | "CHAR" | "BYTE" => int(1, true),
            "uchar" | "ubyte" | "uint8" | "UCHAR" | "UBYTE" | "bool" => int(1, false),
            "short" | "int16" | "SHORT" | "INT16" => int(2, true),
            "ushort" | "uint16" | "USHORT" | "UINT16" | "WORD" => int(2, false),
            "int" | "int32" | "long" | "INT" | "INT32" | "LONG" => int(4, true),
            "uint" | "uint32" | "ulong" | "UINT" | "UINT32" | "ULONG" | "DWORD" => int(4, false),
            "int64" | "quad" | "QUAD" | "INT64" | "__int64" => int(8, true),
            "uint64" | "uquad" | "UQUAD" | "UINT64" | "QWORD" => int(8, false),
            "string" => Str,
            "float" | "double" => Float,
            "void" => Void,
            _ => return None,
        })
    }
}

/// Builtin functions with their accepted argument counts.
pub const BUILTINS: &[(&str, usize, usize)] = &[
    ("FTell", 0, 0),
    ("FSeek", 1, 1),
    ("FEof", 0, 0),
    ("FileSize", 0, 0),
    ("ReadByte", 1, 2),
    ("ReadBytes", 3, 6),
    ("Checksum", 3, 3),
    ("SetEvilBit", 1, 1),
    ("ChangeArrayLength", 0, 1),
    ("Warning", 1, usize::MAX),
    ("Printf", 1, usize::MAX),
    ("BigEndian", 0, 0),
    ("LittleEndian", 0, 0),
    ("Strlen", 1, 1),
];

pub fn builtin_arity(name: &str) -> Option<(usize, usize)> {
    BUILTINS
        .iter()
        .find(|(n, _, _)| *n == name)
        .map(|&(_, lo, hi)| (lo, hi))
}

/// Predefined integer constants.
pub const CONSTANTS: &[(&str, i64)] = &[
    ("true", 1),
    ("false", 0),
    ("TRUE", 1),
    ("FALSE", 0),
    ("CHECKSUM_CRC32", 0),
    ("CHECKSUM_ADLER32", 1),
];

pub fn constant(name: &str) -> Option<i64> {
    CONSTANTS.iter().find(|(n, _)| *n == name).map(|&(_, v)| v)
}

/// Attribute keys understood by the engine; others produce a warning.
pub const KNOWN_ATTRS: &[&str] = &["min", "max", "codec", "size", "maxlen"];
