//! Format oracles. Nothing here calls into the engine.

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub offset: usize,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "offset {}: {}", self.offset, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Verdict {
    pub violations: Vec<Violation>,
}

impl Verdict {
    pub fn valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn first(&self) -> Option<&Violation> {
        self.violations.first()
    }

    fn push(&mut self, offset: usize, message: impl Into<String>) {
        self.violations.push(Violation {
            offset,
            message: message.into(),
        });
    }
}

/// Bitwise CRC-32 (reflected polynomial 0xEDB88320).
pub fn oracle_crc32(data: &[u8]) -> u32 {
    let mut crc = !0u32;
    for &byte in data {
        crc ^= byte as u32;
        for _ in 0..8 {
            let mask = (crc & 1).wrapping_neg();
            crc = (crc >> 1) ^ (0xEDB8_8320 & mask);
        }
    }
    !crc
}

/// Adler-32 reduced after every byte.
pub fn oracle_adler32(data: &[u8]) -> u32 {
    let mut a: u64 = 1;
    let mut b: u64 = 0;
    for &byte in data {
        a = (a + byte as u64) % 65521;
        b = (b + a) % 65521;
    }
    ((b << 16) | a) as u32
}

pub fn verify_mini(file: &[u8]) -> Verdict {
    let mut v = Verdict::default();
    if file.len() < 4 || &file[..4] != b"MINI" {
        v.push(0, "bad magic");
        return v;
    }
    let mut pos = 4;
    loop {
        let Some(&tag) = file.get(pos) else {
            v.push(pos, "missing END chunk");
            return v;
        };
        match tag {
            0xFF => {
                if pos + 1 != file.len() {
                    v.push(pos + 1, "bytes after END chunk");
                }
                return v;
            }
            0x01 => {
                if pos + 3 > file.len() {
                    v.push(pos, "truncated DATA header");
                    return v;
                }
                let length = u16::from_le_bytes([file[pos + 1], file[pos + 2]]) as usize;
                if !(1..=16).contains(&length) {
                    v.push(pos + 1, format!("DATA length {length} outside 1..16"));
                    return v;
                }
                let end = pos + 3 + length;
                if end + 1 > file.len() {
                    v.push(pos, "truncated DATA chunk");
                    return v;
                }
                let sum = file[pos + 3..end].iter().fold(0u8, |s, &b| s.wrapping_add(b));
                if file[end] != sum {
                    v.push(end, format!("check byte {:#04x}, expected {sum:#04x}", file[end]));
                    return v;
                }
                pos = end + 1;
            }
            t => {
                v.push(pos, format!("unknown tag {t:#04x}"));
                return v;
            }
        }
    }
}

const PNG_SIGNATURE: [u8; 8] = [0x89, b'P', b'N', b'G', 0x0D, 0x0A, 0x1A, 0x0A];

fn be32(b: &[u8]) -> u32 {
    u32::from_be_bytes([b[0], b[1], b[2], b[3]])
}

fn allowed_bits(color: u8) -> Option<&'static [u8]> {
    Some(match color {
        0 => &[1, 2, 4, 8, 16],
        2 => &[8, 16],
        3 => &[1, 2, 4, 8],
        4 => &[8, 16],
        6 => &[8, 16],
        _ => return None,
    })
}

/// Chunk-order automaton: the set of types that may come next.
struct Order {
    allowed: Vec<&'static str>,
    done: bool,
}

impl Order {
    fn step(&mut self, ty: &str, color: Option<u8>) -> Result<(), String> {
        if self.done {
            return Err(format!("chunk {ty} after IEND"));
        }
        if !self.allowed.contains(&ty) {
            return Err(format!("chunk {ty} not allowed here"));
        }
        let remove = |a: &mut Vec<&'static str>, t: &str| a.retain(|x| *x != t);
        match ty {
            "IHDR" => {
                self.allowed = match color {
                    Some(3) => vec!["tIME", "tEXt", "PLTE"],
                    Some(0) | Some(4) => vec!["tIME", "tEXt", "IDAT"],
                    _ => vec!["tIME", "tEXt", "PLTE", "IDAT"],
                }
            }
            "PLTE" => {
                remove(&mut self.allowed, "PLTE");
                if !self.allowed.contains(&"IDAT") {
                    self.allowed.push("IDAT");
                }
            }
            "IDAT" => {
                remove(&mut self.allowed, "IDAT");
                remove(&mut self.allowed, "PLTE");
                self.allowed.push("IEND");
            }
            "tIME" => remove(&mut self.allowed, "tIME"),
            "IEND" => self.done = true,
            _ => {}
        }
        Ok(())
    }
}

fn check_ihdr(v: &mut Verdict, at: usize, body: &[u8]) -> Option<u8> {
    if body.len() != 13 {
        v.push(at, format!("IHDR length {} != 13", body.len()));
        return None;
    }
    for (name, off) in [("width", 0), ("height", 4)] {
        let x = be32(&body[off..]);
        if !(1..=24).contains(&x) {
            v.push(at + off, format!("{name} {x} outside 1..24"));
        }
    }
    let (bits, color) = (body[8], body[9]);
    match allowed_bits(color) {
        Some(ok) if !ok.contains(&bits) => {
            v.push(at + 8, format!("bit depth {bits} invalid for color type {color}"))
        }
        None => v.push(at + 9, format!("unknown color type {color}")),
        _ => {}
    }
    if body[10] != 0 {
        v.push(at + 10, "compression method must be 0");
    }
    if body[11] != 0 {
        v.push(at + 11, "filter method must be 0");
    }
    if body[12] > 1 {
        v.push(at + 12, "unknown interlace method");
    }
    Some(color)
}

fn check_idat(v: &mut Verdict, at: usize, body: &[u8]) {
    let bad = |v: &mut Verdict, m: &str| v.push(at, format!("IDAT: {m}"));
    if body.len() < 2 || body[0] & 0x0F != 8 || !((body[0] as u16) << 8 | body[1] as u16).is_multiple_of(31) {
        return bad(v, "bad zlib header");
    }
    let mut pos = 2;
    let mut raw = Vec::new();
    loop {
        if pos + 5 > body.len() {
            return bad(v, "truncated deflate block");
        }
        let hdr = body[pos];
        if (hdr >> 1) & 3 != 0 {
            return bad(v, "unsupported deflate block type");
        }
        let len = u16::from_le_bytes([body[pos + 1], body[pos + 2]]);
        let nlen = u16::from_le_bytes([body[pos + 3], body[pos + 4]]);
        if len ^ nlen != 0xFFFF {
            return bad(v, "LEN/NLEN mismatch");
        }
        pos += 5;
        if pos + len as usize > body.len() {
            return bad(v, "truncated stored data");
        }
        raw.extend_from_slice(&body[pos..pos + len as usize]);
        pos += len as usize;
        if hdr & 1 != 0 {
            break;
        }
    }
    if pos + 4 != body.len() {
        return bad(v, "wrong stream length");
    }
    if be32(&body[pos..]) != oracle_adler32(&raw) {
        bad(v, "bad Adler-32");
    }
}

fn check_time(v: &mut Verdict, at: usize, body: &[u8]) {
    if body.len() != 7 {
        v.push(at, format!("tIME length {} != 7", body.len()));
        return;
    }
    let limits = [(2, 1, 12, "month"), (3, 1, 31, "day"), (4, 0, 23, "hour"), (5, 0, 59, "minute"), (6, 0, 60, "second")];
    for (off, lo, hi, name) in limits {
        if !(lo..=hi).contains(&body[off]) {
            v.push(at + off, format!("{name} {} out of range", body[off]));
        }
    }
}

fn check_text(v: &mut Verdict, at: usize, body: &[u8]) {
    let Some(nul) = body.iter().position(|&b| b == 0) else {
        v.push(at, "tEXt without keyword separator");
        return;
    };
    if !(1..=79).contains(&nul) {
        v.push(at, format!("tEXt keyword length {nul}"));
    }
    if body[..nul].iter().any(|&c| !(32..=126).contains(&c) && c < 161) {
        v.push(at, "tEXt keyword has non-printable bytes");
    }
    if body[nul + 1..].contains(&0) {
        v.push(at + nul + 1, "tEXt text contains NUL");
    }
}

pub fn verify_pnglite(file: &[u8]) -> Verdict {
    let mut v = Verdict::default();
    if file.len() < 8 || file[..8] != PNG_SIGNATURE {
        v.push(0, "bad signature");
        return v;
    }
    let mut order = Order {
        allowed: vec!["IHDR"],
        done: false,
    };
    let mut pos = 8;
    let mut k = 0;
    let mut color = None;
    while pos < file.len() {
        if pos + 12 > file.len() {
            v.push(pos, format!("truncated chunk {k}"));
            return v;
        }
        let len = be32(&file[pos..]) as usize;
        let ty = &file[pos + 4..pos + 8];
        if pos + 12 + len > file.len() {
            v.push(pos, format!("chunk {k} overruns the file"));
            return v;
        }
        let body = &file[pos + 8..pos + 8 + len];
        let crc = be32(&file[pos + 8 + len..]);
        if crc != oracle_crc32(&file[pos + 4..pos + 8 + len]) {
            v.push(pos + 8 + len, format!("bad CRC at chunk {k}"));
        }
        let name = String::from_utf8_lossy(ty).into_owned();
        let at = pos + 8;
        match ty {
            b"IHDR" => color = check_ihdr(&mut v, at, body),
            b"PLTE" => {
                if len == 0 || !len.is_multiple_of(3) {
                    v.push(at, format!("PLTE length {len}"));
                }
            }
            b"IDAT" => check_idat(&mut v, at, body),
            b"tIME" => check_time(&mut v, at, body),
            b"tEXt" => check_text(&mut v, at, body),
            b"IEND" => {
                if len != 0 {
                    v.push(at, "IEND with a body");
                }
            }
            _ => v.push(pos + 4, format!("unknown chunk type {name:?}")),
        }
        let known = ["IHDR", "PLTE", "IDAT", "tIME", "tEXt", "IEND"];
        if let Some(t) = known.iter().find(|t| t.as_bytes() == ty) {
            if let Err(m) = order.step(t, color) {
                v.push(pos + 4, m);
            }
        }
        pos += 12 + len;
        k += 1;
    }
    if !order.done {
        v.push(file.len(), "missing IEND");
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checksums() {
        assert_eq!(oracle_crc32(b"IEND"), 0xAE42_6082);
        assert_eq!(oracle_adler32(b"Wikipedia"), 0x11E6_0398);
    }

    #[test]
    fn mini_minimal() {
        assert!(verify_mini(b"MINI\xFF").valid());
        assert!(!verify_mini(b"MINI").valid());
        let bad = verify_mini(b"MINI\x01\x02\x00\x05\x06\x00\xFF");
        assert_eq!(bad.first().unwrap().offset, 9);
    }
}
