//! Test target: a naive MINI reader with a planted bug.
//!
//! Exits 0 for files it accepts and 1 for files it rejects. A full-length
//! (16-byte) DATA chunk whose first payload byte has the high bit set makes
//! it abort. Reads the input from the path in the first argument, or stdin.

use std::io::Read;
use std::process::ExitCode;

fn main() -> ExitCode {
    let input = match std::env::args_os().nth(1) {
        Some(path) => std::fs::read(path).unwrap_or_default(),
        None => {
            let mut buf = Vec::new();
            let _ = std::io::stdin().read_to_end(&mut buf);
            buf
        }
    };
    if !input.starts_with(b"MINI") {
        return ExitCode::FAILURE;
    }
    let mut pos = 4;
    while let Some(&tag) = input.get(pos) {
        match tag {
            0xFF => return ExitCode::SUCCESS,
            0x01 if pos + 3 <= input.len() => {
                let len = u16::from_le_bytes([input[pos + 1], input[pos + 2]]) as usize;
                if len == 16 && input.get(pos + 3).is_some_and(|&b| b >= 0x80) {
                    std::process::abort();
                }
                pos += 3 + len + 1;
            }
            _ => return ExitCode::FAILURE,
        }
    }
    ExitCode::FAILURE
}
