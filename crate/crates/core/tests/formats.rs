use proptest::prelude::*;
use tmplfuzz_core::engine::{generate_from_seed, parse, ExecOptions};
use tmplfuzz_core::formats::*;
use tmplfuzz_core::templatelang::parse_template;

const SIG: [u8; 8] = [0x89, 0x50, 0x4E, 0x47, 0x0D, 0x0A, 0x1A, 0x0A];
const IEND: [u8; 12] = [0, 0, 0, 0, 0x49, 0x45, 0x4E, 0x44, 0xAE, 0x42, 0x60, 0x82];

fn chunk(ty: &[u8; 4], body: &[u8]) -> Vec<u8> {
    let mut c = (body.len() as u32).to_be_bytes().to_vec();
    c.extend_from_slice(ty);
    c.extend_from_slice(body);
    c.extend(oracle_crc32(&c[4..]).to_be_bytes());
    c
}

/// 2x1 grayscale, 8 bits, one IDAT holding a stored zlib stream.
fn tiny_png() -> Vec<u8> {
    let mut f = SIG.to_vec();
    f.extend(chunk(b"IHDR", &[0, 0, 0, 2, 0, 0, 0, 1, 8, 0, 0, 0, 0]));
    // 78 01, final stored block of 3 bytes, adler32([0, 10, 20]) = 0x002B001F
    f.extend(chunk(b"IDAT", &[0x78, 0x01, 0x01, 0x03, 0x00, 0xFC, 0xFF, 0, 10, 20, 0x00, 0x2B, 0x00, 0x1F]));
    f.extend(chunk(b"tEXt", b"Title\0hi"));
    f.extend(IEND);
    f
}

fn pnglite() -> tmplfuzz_core::templatelang::TemplateUnit {
    parse_template(PNGLITE_TEMPLATE).unwrap()
}

fn mini() -> tmplfuzz_core::templatelang::TemplateUnit {
    parse_template(MINI_TEMPLATE).unwrap()
}

#[test]
fn checksum_known_answers() {
    assert_eq!(oracle_crc32(b"123456789"), 0xCBF4_3926);
    assert_eq!(oracle_crc32(b"IEND"), 0xAE42_6082);
    assert_eq!(oracle_adler32(b"Wikipedia"), 0x11E6_0398);
    assert_eq!(oracle_adler32(&[0, 10, 20]), 0x002B_001F);
}

#[test]
fn hand_built_png_is_valid_and_round_trips() {
    let f = tiny_png();
    let verdict = verify_pnglite(&f);
    assert!(verdict.valid(), "{:?}", verdict.first());
    let unit = pnglite();
    let opts = ExecOptions::default();
    let p = parse(&unit, &f, &opts).unwrap();
    assert!(!p.evil_taken());
    assert_eq!(generate_from_seed(&unit, &p.seed, &opts).unwrap().file, f);
    let chunks = p.tree.walk().into_iter().filter(|n| &*n.type_name == "PNG_CHUNK").count();
    assert_eq!(chunks, 4);
}

#[test]
fn corrupted_crc_is_rejected_by_oracle_and_strict_parser() {
    let mut f = tiny_png();
    let at = 8 + 12 + 13 - 1;
    f[at] ^= 0x55;
    let verdict = verify_pnglite(&f);
    assert!(verdict.first().unwrap().message.contains("bad CRC"), "{:?}", verdict);
    let strict = ExecOptions { evil: false, ..ExecOptions::default() };
    assert!(parse(&pnglite(), &f, &strict).unwrap_err().is_rejection());
    let lenient = parse(&pnglite(), &f, &ExecOptions::default()).unwrap();
    assert!(lenient.evil_taken());
}

#[test]
fn wrong_signature_is_rejected() {
    let mut f = tiny_png();
    f[1] = b'Q';
    assert!(!verify_pnglite(&f).valid());
    assert!(parse(&pnglite(), &f, &ExecOptions::default()).unwrap_err().is_rejection());
}

#[test]
fn missing_idat_breaks_the_order_rule() {
    let mut f = SIG.to_vec();
    f.extend(chunk(b"IHDR", &[0, 0, 0, 2, 0, 0, 0, 1, 8, 0, 0, 0, 0]));
    f.extend(IEND);
    assert!(!verify_pnglite(&f).valid());
}

#[test]
fn bounded_mini_enumeration_round_trips() {
    let files = enumerate_mini(2, 2, &MINI_ALPHABET);
    // 20 payloads of length 1..=2: 1 + 20 + 400 bodies
    assert_eq!(files.len(), 421);
    let unit = mini();
    let strict = ExecOptions { evil: false, ..ExecOptions::default() };
    for f in &files {
        assert!(verify_mini(f).valid());
        let p = parse(&unit, f, &strict).unwrap();
        assert_eq!(&generate_from_seed(&unit, &p.seed, &strict).unwrap().file, f);
    }
}

fn valid_mini() -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(prop::collection::vec(any::<u8>(), 1..=16), 0..4).prop_map(|chunks| {
        let mut f = b"MINI".to_vec();
        for p in chunks {
            f.push(0x01);
            f.extend((p.len() as u16).to_le_bytes());
            f.extend(&p);
            f.push(p.iter().fold(0u8, |s, &b| s.wrapping_add(b)));
        }
        f.push(0xFF);
        f
    })
}

proptest! {
    #[test]
    fn zlib_stored_inverts(raw in prop::collection::vec(any::<u8>(), 0..200_000)) {
        let enc = zlib_stored_encode(&raw);
        prop_assert_eq!(zlib_stored_decode(&enc).unwrap(), raw);
    }

    #[test]
    fn zlib_damage_is_detected(raw in prop::collection::vec(any::<u8>(), 1..300), at in any::<prop::sample::Index>(), flip in 1u8..) {
        let mut enc = zlib_stored_encode(&raw);
        let i = at.index(enc.len());
        enc[i] ^= flip;
        prop_assert!(zlib_stored_decode(&enc).is_err());
    }

    #[test]
    fn strict_mini_parser_agrees_with_oracle(f in valid_mini(), at in any::<prop::sample::Index>(), flip in any::<u8>(), cut in any::<bool>()) {
        let mut f = f;
        let i = at.index(f.len());
        if cut {
            f.truncate(i);
        } else {
            f[i] ^= flip;
        }
        let strict = ExecOptions { evil: false, ..ExecOptions::default() };
        let engine_ok = parse(&mini(), &f, &strict).is_ok();
        prop_assert_eq!(engine_ok, verify_mini(&f).valid());
    }
}

#[test]
fn single_chunk_mini_files_are_all_producible() {
    let unit = mini();
    let strict = ExecOptions { evil: false, ..ExecOptions::default() };
    for b in [0x00u8, 0x01, 0x02, 0x7E, 0x7F, 0x80, 0xFE, 0xFF, 0x55] {
        let f = vec![b'M', b'I', b'N', b'I', 0x01, 0x01, 0x00, b, b, 0xFF];
        assert!(verify_mini(&f).valid());
        let p = parse(&unit, &f, &strict).unwrap();
        assert_eq!(generate_from_seed(&unit, &p.seed, &strict).unwrap().file, f);
    }
}

#[test]
fn grayscale_rejects_three_bit_depth() {
    let mut f = SIG.to_vec();
    f.extend(chunk(b"IHDR", &[0, 0, 0, 2, 0, 0, 0, 1, 3, 0, 0, 0, 0]));
    f.extend(chunk(b"IDAT", &zlib_stored_encode(&[0, 1])));
    f.extend(IEND);
    let v = verify_pnglite(&f);
    assert!(!v.valid());
    assert_eq!(v.first().unwrap().offset, 8 + 8 + 8);
}

#[test]
fn stored_container_carries_an_independent_adler() {
    let raw: Vec<u8> = (0..16).collect();
    let enc = zlib_stored_encode(&raw);
    let tail = u32::from_be_bytes(enc[enc.len() - 4..].try_into().unwrap());
    assert_eq!(tail, oracle_adler32(&raw));
    assert_eq!(zlib_stored_decode(&zlib_stored_encode(&[])).unwrap(), Vec::<u8>::new());
}

#[test]
fn generated_idat_bodies_decode() {
    let unit = pnglite();
    let opts = ExecOptions { evil: false, ..ExecOptions::default() };
    for s in 0..50 {
        let g = generate_random_checked(&unit, s, &opts);
        let mut pos = 8;
        while pos + 12 <= g.len() {
            let len = u32::from_be_bytes(g[pos..pos + 4].try_into().unwrap()) as usize;
            if &g[pos + 4..pos + 8] == b"IDAT" {
                assert!(zlib_stored_decode(&g[pos + 8..pos + 8 + len]).is_ok());
            }
            pos += 12 + len;
        }
    }
}

fn generate_random_checked(unit: &tmplfuzz_core::templatelang::TemplateUnit, s: u64, opts: &ExecOptions) -> Vec<u8> {
    tmplfuzz_core::engine::generate_random(unit, s, opts).unwrap().file
}

#[test]
fn engine_and_oracle_agree_on_generated_files() {
    let opts = ExecOptions { evil: false, ..ExecOptions::default() };
    for (name, src) in BUNDLED {
        let unit = parse_template(src).unwrap();
        let oracle = oracle_for(name).unwrap();
        let mut agree = 0;
        for s in 0..1000 {
            let f = generate_random_checked(&unit, s, &opts);
            if parse(&unit, &f, &opts).is_ok() == oracle(&f).valid() {
                agree += 1;
            }
        }
        assert!(agree >= 990, "{name}: {agree}/1000");
    }
}
