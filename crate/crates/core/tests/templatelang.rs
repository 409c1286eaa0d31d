use proptest::prelude::*;
use tmplfuzz_core::engine::{generate_from_seed, ExecOptions};
use tmplfuzz_core::formats::BUNDLED;
use tmplfuzz_core::templatelang::printer::print_unit;
use tmplfuzz_core::templatelang::{mine_magic, parse_template, DiagKind, MagicValue};

#[test]
fn bundled_templates_print_to_a_fixpoint() {
    for (name, src) in BUNDLED {
        let unit = parse_template(src).unwrap();
        let once = print_unit(&unit);
        let reparsed = parse_template(&once).unwrap_or_else(|e| panic!("{name}: {}", e.render(name)));
        assert_eq!(print_unit(&reparsed), once, "{name}");
        assert_eq!(reparsed.decls.len(), unit.decls.len(), "{name}");
    }
}

#[test]
fn magic_mining_is_idempotent() {
    for (name, src) in BUNDLED {
        let unit = parse_template(src).unwrap();
        assert_eq!(mine_magic(&unit), unit.magic, "{name}");
        let reparsed = parse_template(&print_unit(&unit)).unwrap();
        assert_eq!(reparsed.magic, unit.magic, "{name}");
    }
}

#[test]
fn mined_magic_for_mini() {
    let unit = parse_template(tmplfuzz_core::formats::MINI_TEMPLATE).unwrap();
    assert_eq!(unit.magic.get("magic", None), Some(&[MagicValue::Bytes(b"MINI".to_vec())][..]));
}

#[test]
fn declaration_ids_are_stable() {
    let unit = parse_template(tmplfuzz_core::formats::MINI_TEMPLATE).unwrap();
    let ids: Vec<usize> = unit.decls.iter().map(|d| d.id).collect();
    assert_eq!(ids, (0..unit.decls.len()).collect::<Vec<_>>());
    assert_eq!(unit.decls.len(), 8);
}

#[test]
fn diagnostics_carry_kind_and_position() {
    let e = parse_template("int x\nint y;").unwrap_err();
    assert_eq!(e.kind(), DiagKind::Syntax);
    assert_eq!(e.diagnostics[0].span.line, 2);

    let e = parse_template("local int f = nope(1);").unwrap_err();
    assert_eq!(e.kind(), DiagKind::Resolve);

    let e = parse_template("local int x = FTell(1, 2);").unwrap_err();
    assert_eq!(e.kind(), DiagKind::Arity);
}

#[derive(Debug, Clone)]
enum E {
    Lit(u32),
    Bin(&'static str, Box<E>, Box<E>),
    Shift(&'static str, Box<E>, u8),
    Neg(Box<E>),
}

fn text(e: &E) -> String {
    match e {
        E::Lit(v) => v.to_string(),
        E::Bin(op, a, b) => format!("({} {op} {})", text(a), text(b)),
        E::Shift(op, a, n) => format!("({} {op} {n})", text(a)),
        E::Neg(a) => format!("(-{})", text(a)),
    }
}

fn value(e: &E) -> i64 {
    match e {
        E::Lit(v) => *v as i64,
        E::Bin(op, a, b) => {
            let (x, y) = (value(a), value(b));
            match *op {
                "+" => x.wrapping_add(y),
                "-" => x.wrapping_sub(y),
                "*" => x.wrapping_mul(y),
                "&" => x & y,
                "|" => x | y,
                "^" => x ^ y,
                "<" => (x < y) as i64,
                "==" => (x == y) as i64,
                _ => unreachable!(),
            }
        }
        E::Shift(op, a, n) => match *op {
            "<<" => value(a) << n,
            _ => value(a) >> n,
        },
        E::Neg(a) => value(a).wrapping_neg(),
    }
}

fn expr() -> impl Strategy<Value = E> {
    any::<u32>().prop_map(E::Lit).prop_recursive(5, 32, 2, |inner| {
        prop_oneof![
            (prop::sample::select(vec!["+", "-", "*", "&", "|", "^", "<", "=="]), inner.clone(), inner.clone())
                .prop_map(|(op, a, b)| E::Bin(op, Box::new(a), Box::new(b))),
            (prop::sample::select(vec!["<<", ">>"]), inner.clone(), 0u8..64)
                .prop_map(|(op, a, n)| E::Shift(op, Box::new(a), n)),
            inner.prop_map(|a| E::Neg(Box::new(a))),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn integer_expressions_match_reference(e in expr()) {
        let src = format!("LittleEndian();\nlocal int64 x = {};\nint64 out = {{ x }};\n", text(&e));
        let unit = parse_template(&src).unwrap();
        let reparsed = parse_template(&print_unit(&unit)).unwrap();
        prop_assert_eq!(print_unit(&reparsed), print_unit(&unit));
        let opts = ExecOptions { evil: false, ..ExecOptions::default() };
        let out = generate_from_seed(&reparsed, &[0, 0], &opts).unwrap();
        prop_assert_eq!(out.file, value(&e).to_le_bytes().to_vec());
    }
}
