use proptest::prelude::*;
use tmplfuzz_core::engine::{generate_from_seed, generate_random, parse, EngineError, ExecOptions};
use tmplfuzz_core::formats::{bundled, oracle_for, BUNDLED};
use tmplfuzz_core::templatelang::{parse_template, TemplateUnit};

fn unit(src: &str) -> TemplateUnit {
    parse_template(src).unwrap_or_else(|e| panic!("{}", e.render("test")))
}

fn no_evil() -> ExecOptions {
    ExecOptions { evil: false, ..ExecOptions::default() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn generation_is_deterministic(rng_seed in any::<u64>(), evil in any::<bool>()) {
        let opts = ExecOptions { evil, ..ExecOptions::default() };
        for (name, _) in BUNDLED {
            let u = unit(bundled(name).unwrap());
            let a = generate_random(&u, rng_seed, &opts);
            let b = generate_random(&u, rng_seed, &opts);
            prop_assert_eq!(a.as_ref().map(|o| &o.file), b.as_ref().map(|o| &o.file));
            if let Ok(a) = a {
                let replay = generate_from_seed(&u, &a.seed, &opts).unwrap();
                prop_assert_eq!(&replay.file, &a.file);
                prop_assert_eq!(&replay.seed, &a.seed);
            }
        }
    }

    #[test]
    fn non_evil_generations_round_trip(rng_seed in any::<u64>()) {
        let opts = no_evil();
        for (name, src) in BUNDLED {
            let u = unit(src);
            let g = generate_random(&u, rng_seed, &opts).unwrap();
            prop_assert!(oracle_for(name).unwrap()(&g.file).valid(), "{} invalid", name);
            let p = parse(&u, &g.file, &opts).unwrap();
            let again = generate_from_seed(&u, &p.seed, &opts).unwrap();
            prop_assert_eq!(&again.file, &g.file);
            prop_assert!(p.seed.len() <= g.seed.len() + 8 * p.events.len());
            prop_assert_eq!(parse(&u, &again.file, &opts).unwrap().seed, p.seed);
        }
    }

    #[test]
    fn parsed_evil_generations_round_trip(rng_seed in any::<u64>()) {
        let opts = ExecOptions::default();
        for (_, src) in BUNDLED {
            let u = unit(src);
            let g = generate_random(&u, rng_seed, &opts).unwrap();
            match parse(&u, &g.file, &opts) {
                Ok(p) => prop_assert_eq!(generate_from_seed(&u, &p.seed, &opts).unwrap().file, g.file),
                Err(e) => prop_assert!(g.evil_taken(), "non-evil file failed to parse: {}", e),
            }
        }
    }

    #[test]
    fn arbitrary_seeds_never_panic(seed in prop::collection::vec(any::<u8>(), 0..512)) {
        for (_, src) in BUNDLED {
            let u = unit(src);
            let _ = generate_from_seed(&u, &seed, &ExecOptions::default());
        }
    }

    #[test]
    fn arbitrary_files_never_panic(file in prop::collection::vec(any::<u8>(), 0..256)) {
        for (_, src) in BUNDLED {
            let u = unit(src);
            let _ = parse(&u, &file, &ExecOptions::default());
        }
    }
}

#[test]
fn budget_is_enforced() {
    let u = unit("ubyte a[100];");
    let opts = ExecOptions { budget: 10, ..ExecOptions::default() };
    assert!(matches!(generate_random(&u, 0, &opts), Err(EngineError::BudgetExceeded { budget: 10, .. })));
}

#[test]
fn short_seed_is_exhausted() {
    let u = unit(bundled("mini").unwrap());
    assert!(matches!(generate_from_seed(&u, &[], &ExecOptions::default()), Err(EngineError::SeedExhausted(0))));
}

#[test]
fn unknown_checksum_algorithm() {
    let u = unit("ubyte a; local int c = Checksum(7, 0, 1);");
    assert_eq!(generate_random(&u, 0, &no_evil()).unwrap_err(), EngineError::ChecksumAlgoUnknown(7));
}

#[test]
fn trailing_bytes_are_reported() {
    let u = unit(bundled("mini").unwrap());
    let f = b"MINI\xFF\x00";
    assert_eq!(
        parse(&u, f, &ExecOptions::default()).unwrap_err(),
        EngineError::TrailingBytes { consumed: 5, size: 6 }
    );
    let lenient = ExecOptions { allow_trailing: true, ..ExecOptions::default() };
    assert!(parse(&u, f, &lenient).is_ok());
}

#[test]
fn runaway_templates_stop() {
    let u = unit("int f(int n) { return f(n + 1); } local int x = f(0);");
    assert_eq!(generate_random(&u, 0, &no_evil()).unwrap_err(), EngineError::RecursionLimit);

    let u = unit("while (1) { }");
    let opts = ExecOptions { step_limit: 1000, ..no_evil() };
    assert_eq!(generate_random(&u, 0, &opts).unwrap_err(), EngineError::StepLimit);
}

#[test]
fn runtime_faults_name_the_position() {
    let u = unit("local int z = 0;\nlocal int x = 1 / z;");
    match generate_random(&u, 0, &no_evil()).unwrap_err() {
        EngineError::Runtime { span, message } => {
            assert_eq!(span.line, 2);
            assert!(message.contains("division by zero"));
        }
        e => panic!("{e}"),
    }
}

#[test]
fn negative_return_rejects() {
    let u = unit(bundled("mini").unwrap());
    match parse(&u, b"MIN!\xFF", &ExecOptions::default()).unwrap_err() {
        EngineError::ParseRejected(why) => assert!(why.contains("not a MINI file")),
        e => panic!("{e}"),
    }
    let u = unit("return -2;");
    assert_eq!(generate_random(&u, 0, &no_evil()).unwrap_err(), EngineError::TemplateReturn(-2));
}

#[test]
fn magic_comparison_is_satisfied_without_evil() {
    let u = unit("BigEndian();\nuint16 x;\nif (x != 0xABCD) return -1;\n");
    for s in 0..100 {
        let g = generate_random(&u, s, &no_evil()).unwrap();
        assert_eq!(g.file, [0xAB, 0xCD]);
    }
    assert!(parse(&u, &[0xAB, 0xCE], &no_evil()).is_err());
}

#[test]
fn lookahead_agrees_with_later_declaration() {
    let u = unit("local ubyte tags[] = {3, 9};\nlocal ubyte t = ReadByte(FTell(), tags);\nubyte tag;\nif (tag != t) return -1;\n");
    for s in 0..50 {
        let g = generate_random(&u, s, &no_evil()).unwrap();
        assert!(g.file == [3] || g.file == [9], "{:?}", g.file);
    }
}

#[test]
fn coverage_lists_executed_declarations() {
    let u = unit("ubyte a;\nif (0) { ubyte b; }\nubyte c;\n");
    let g = generate_random(&u, 1, &no_evil()).unwrap();
    assert_eq!(g.coverage, vec![0, 2]);
}
