//! Bundled templates, the zlib stream hook and independent format oracles.
//!
//! The oracles re-implement every check from scratch (including CRC-32 and
//! Adler-32) so that they can judge the engine's output.

mod enumerate;
mod oracle;
mod zlib;

pub use enumerate::{enumerate_mini, MINI_ALPHABET};
pub use oracle::{oracle_adler32, oracle_crc32, verify_mini, verify_pnglite, Verdict, Violation};
pub use zlib::{zlib_stored_decode, zlib_stored_encode, ZlibStored};

pub const MINI_TEMPLATE: &str = include_str!("../../templates/mini.bt");
pub const PNGLITE_TEMPLATE: &str = include_str!("../../templates/pnglite.bt");

/// Bundled templates by name.
pub const BUNDLED: &[(&str, &str)] = &[("mini", MINI_TEMPLATE), ("pnglite", PNGLITE_TEMPLATE)];

pub fn bundled(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

/// Oracle for a bundled template.
pub fn oracle_for(name: &str) -> Option<fn(&[u8]) -> Verdict> {
    match name {
        "mini" => Some(verify_mini),
        "pnglite" => Some(verify_pnglite),
        _ => None,
    }
}
