//! zlib container with stored (uncompressed) deflate blocks.

use crate::engine::checksum::adler32;
use crate::engine::{DecodeError, StreamCodec};

const CMF: u8 = 0x78;
const FLG: u8 = 0x01;
const MAX_BLOCK: usize = 0xFFFF;

pub fn zlib_stored_encode(raw: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(raw.len() + 11 + raw.len() / MAX_BLOCK * 5);
    out.extend([CMF, FLG]);
    let mut blocks: Vec<&[u8]> = raw.chunks(MAX_BLOCK).collect();
    if blocks.is_empty() {
        blocks.push(&[]);
    }
    let last = blocks.len() - 1;
    for (i, b) in blocks.into_iter().enumerate() {
        out.push((i == last) as u8);
        let len = b.len() as u16;
        out.extend(len.to_le_bytes());
        out.extend((!len).to_le_bytes());
        out.extend_from_slice(b);
    }
    out.extend(adler32(raw).to_be_bytes());
    out
}

pub fn zlib_stored_decode(stream: &[u8]) -> Result<Vec<u8>, DecodeError> {
    let fail = |m: &str| Err(DecodeError(m.to_string()));
    if stream.len() < 2 {
        return fail("truncated header");
    }
    let (cmf, flg) = (stream[0], stream[1]);
    if cmf & 0x0F != 8 || cmf >> 4 > 7 {
        return fail("not a deflate stream");
    }
    if (u16::from(cmf) << 8 | u16::from(flg)) % 31 != 0 {
        return fail("bad header check");
    }
    if flg & 0x20 != 0 {
        return fail("preset dictionary");
    }
    let mut pos = 2;
    let mut raw = Vec::new();
    loop {
        let Some(&hdr) = stream.get(pos) else {
            return fail("truncated block header");
        };
        if hdr & 0x06 != 0 {
            return fail("compressed blocks are not supported");
        }
        if hdr & !0x07 != 0 {
            return fail("stored block header padding is not zero");
        }
        let Some(lens) = stream.get(pos + 1..pos + 5) else {
            return fail("truncated block length");
        };
        let len = u16::from_le_bytes([lens[0], lens[1]]);
        let nlen = u16::from_le_bytes([lens[2], lens[3]]);
        if len != !nlen {
            return fail("block length check failed");
        }
        pos += 5;
        let Some(data) = stream.get(pos..pos + len as usize) else {
            return fail("truncated block");
        };
        raw.extend_from_slice(data);
        pos += len as usize;
        if hdr & 1 == 1 {
            break;
        }
    }
    let Some(sum) = stream.get(pos..pos + 4) else {
        return fail("missing Adler-32");
    };
    if u32::from_be_bytes([sum[0], sum[1], sum[2], sum[3]]) != adler32(&raw) {
        return fail("Adler-32 mismatch");
    }
    if pos + 4 != stream.len() {
        return fail("trailing bytes after the stream");
    }
    Ok(raw)
}

/// Default IDAT hook.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZlibStored;

impl StreamCodec for ZlibStored {
    fn encode(&self, raw: &[u8]) -> Vec<u8> {
        zlib_stored_encode(raw)
    }

    fn decode(&self, stored: &[u8]) -> Result<Vec<u8>, DecodeError> {
        zlib_stored_decode(stored)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_round_trip() {
        let e = zlib_stored_encode(&[]);
        assert_eq!(e, [0x78, 0x01, 0x01, 0, 0, 0xFF, 0xFF, 0, 0, 0, 1]);
        assert_eq!(zlib_stored_decode(&e).unwrap(), Vec::<u8>::new());
    }

    #[test]
    fn rejects_damage() {
        let mut e = zlib_stored_encode(b"hello");
        assert!(zlib_stored_decode(&e[..e.len() - 1]).is_err());
        let n = e.len();
        e[n - 1] ^= 1;
        assert!(zlib_stored_decode(&e).is_err());
        let mut e = zlib_stored_encode(b"hello");
        e[2] = 0x03;
        assert!(zlib_stored_decode(&e).is_err());
    }

    #[test]
    fn multi_block() {
        let raw: Vec<u8> = (0..70_000u32).map(|i| i as u8).collect();
        let e = zlib_stored_encode(&raw);
        assert_eq!(e[2], 0);
        assert_eq!(zlib_stored_decode(&e).unwrap(), raw);
    }
}
