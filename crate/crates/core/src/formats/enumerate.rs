//! Exhaustive enumeration of small valid MINI files.

/// Payload alphabet for the bounded enumeration.
pub const MINI_ALPHABET: [u8; 4] = [0x00, 0x01, 0x7F, 0xFF];

fn payloads(max_len: usize, alphabet: &[u8]) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    let mut layer = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for p in &layer {
            for &a in alphabet {
                let mut q: Vec<u8> = p.clone();
                q.push(a);
                next.push(q);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

fn data_chunk(payload: &[u8]) -> Vec<u8> {
    let mut c = vec![0x01];
    c.extend((payload.len() as u16).to_le_bytes());
    c.extend_from_slice(payload);
    c.push(payload.iter().fold(0u8, |s, &b| s.wrapping_add(b)));
    c
}

/// Every MINI file with at most `max_chunks` DATA chunks whose payloads have
/// length `1..=max_len` over `alphabet`.
pub fn enumerate_mini(max_chunks: usize, max_len: usize, alphabet: &[u8]) -> Vec<Vec<u8>> {
    let chunks: Vec<Vec<u8>> = payloads(max_len, alphabet).iter().map(|p| data_chunk(p)).collect();
    let mut bodies = vec![Vec::new()];
    let mut all = bodies.clone();
    for _ in 0..max_chunks {
        let mut next = Vec::new();
        for b in &bodies {
            for c in &chunks {
                let mut x: Vec<u8> = b.clone();
                x.extend_from_slice(c);
                next.push(x);
            }
        }
        all.extend(next.iter().cloned());
        bodies = next;
    }
    all.into_iter()
        .map(|body| {
            let mut f = b"MINI".to_vec();
            f.extend(body);
            f.push(0xFF);
            f
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn count() {
        // 1 + 20 + 20^2 with 4 + 16 payloads per chunk
        assert_eq!(enumerate_mini(2, 2, &MINI_ALPHABET).len(), 421);
    }
}
