use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tmplfuzz_core::engine::{generate_random, parse, ExecOptions, Output};
use tmplfuzz_core::formats::{bundled, oracle_for, MINI_TEMPLATE};
use tmplfuzz_core::mutation::*;
use tmplfuzz_core::templatelang::{parse_template, TemplateUnit};

fn corpus_pool(u: &TemplateUnit, n: u64, opts: &ExecOptions) -> ChunkPool {
    let files: Vec<(String, Vec<u8>)> = (0..n)
        .map(|s| (format!("f{s}"), generate_random(u, s, opts).unwrap().file))
        .collect();
    let (pool, rejected) = index_corpus(u, files, opts);
    assert!(rejected.is_empty(), "{rejected:?}");
    pool
}

fn delete_then_reinsert(u: &TemplateUnit, pool: &ChunkPool, target: usize, opts: &ExecOptions) -> Result<Output, MutationError> {
    let c = &pool.chunks[target];
    let deleted = smart_delete(u, pool, target, opts)?;
    let mut pool = pool.clone();
    let base = pool.add(u, SeedFile::from_output("deleted", deleted));
    smart_insert(u, &pool, base, c.lookahead_before.unwrap().0, target, opts)
}

#[test]
fn self_replacement_is_identity() {
    for name in ["mini", "pnglite"] {
        let u = parse_template(bundled(name).unwrap()).unwrap();
        let opts = ExecOptions::default();
        let pool = corpus_pool(&u, 12, &opts);
        assert!(!pool.chunks.is_empty());
        for t in 0..pool.chunks.len() {
            let out = smart_replace(&u, &pool, t, t, &opts).unwrap();
            assert_eq!(out.file, pool.files[pool.chunks[t].base].file, "{name} chunk {t}");
        }
    }
}

#[test]
fn delete_then_insert_is_identity_for_mini() {
    let u = parse_template(MINI_TEMPLATE).unwrap();
    let opts = ExecOptions::default();
    let pool = corpus_pool(&u, 12, &opts);
    let movable: Vec<usize> = (0..pool.chunks.len()).filter(|&t| pool.chunks[t].is_movable()).collect();
    assert!(!movable.is_empty());
    for t in movable {
        let out = delete_then_reinsert(&u, &pool, t, &opts).unwrap();
        assert_eq!(out.file, pool.files[pool.chunks[t].base].file);
    }
}

#[test]
fn deletion_removes_exactly_the_chunk_bytes() {
    let u = parse_template(MINI_TEMPLATE).unwrap();
    let opts = ExecOptions::default();
    let pool = corpus_pool(&u, 8, &opts);
    for t in (0..pool.chunks.len()).filter(|&t| pool.chunks[t].is_movable()) {
        let c = &pool.chunks[t];
        let orig = &pool.files[c.base].file;
        let mut want = orig[..c.file_span.0].to_vec();
        want.extend_from_slice(&orig[c.file_span.1..]);
        assert_eq!(smart_delete(&u, &pool, t, &opts).unwrap().file, want);
    }
}

#[test]
fn type_mismatch_is_not_applicable() {
    let u = parse_template(bundled("pnglite").unwrap()).unwrap();
    let opts = ExecOptions::default();
    let pool = corpus_pool(&u, 4, &opts);
    let a = pool.of_type("PNG_CHUNK")[0];
    let b = pool.of_type("PNG_IHDR")[0];
    assert!(matches!(smart_replace(&u, &pool, a, b, &opts), Err(MutationError::NotApplicable(_))));
}

#[test]
fn random_mini_mutations_stay_valid() {
    let u = parse_template(MINI_TEMPLATE).unwrap();
    let opts = ExecOptions::default();
    let pool = corpus_pool(&u, 12, &opts);
    let oracle = oracle_for("mini").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut valid = 0;
    for _ in 0..200 {
        let (rec, out) = random_smart_mutation(&u, &pool, &mut rng, &opts).unwrap();
        assert!(rec.ok);
        assert_eq!(rec.result_bytes, out.file.len());
        if oracle(&out.file).valid() {
            valid += 1;
        }
    }
    assert!(valid >= 160, "{valid}/200");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn replacement_keeps_context_and_carries_donor(pick in any::<(prop::sample::Index, prop::sample::Index)>()) {
        let u = parse_template(MINI_TEMPLATE).unwrap();
        let opts = ExecOptions { evil: false, ..ExecOptions::default() };
        let pool = corpus_pool(&u, 6, &opts);
        let datas = pool.of_type("DATA");
        prop_assume!(!datas.is_empty());
        let (t, d) = (datas[pick.0.index(datas.len())], datas[pick.1.index(datas.len())]);
        let out = smart_replace(&u, &pool, t, d, &opts).unwrap();
        let (c, dn) = (&pool.chunks[t], &pool.chunks[d]);
        let base = &pool.files[c.base].file;
        let donor = &pool.files[dn.base].file[dn.file_span.0..dn.file_span.1];
        let mut want = base[..c.file_span.0].to_vec();
        want.extend_from_slice(donor);
        want.extend_from_slice(&base[c.file_span.1..]);
        prop_assert_eq!(&out.file, &want);
        prop_assert!(parse(&u, &out.file, &opts).is_ok());
    }

    #[test]
    fn abstraction_keeps_the_prefix(rng_seed in any::<u64>(), pick in any::<prop::sample::Index>()) {
        let u = parse_template(MINI_TEMPLATE).unwrap();
        let opts = ExecOptions { evil: false, ..ExecOptions::default() };
        let pool = corpus_pool(&u, 6, &opts);
        let datas = pool.of_type("DATA");
        prop_assume!(!datas.is_empty());
        let t = datas[pick.index(datas.len())];
        let c = &pool.chunks[t];
        let out = smart_abstract(&u, &pool, t, rng_seed, &opts).unwrap();
        prop_assert_eq!(&out.file[..c.file_span.0], &pool.files[c.base].file[..c.file_span.0]);
        prop_assert!(oracle_for("mini").unwrap()(&out.file).valid());
    }
}
