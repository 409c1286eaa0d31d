use proptest::prelude::*;
use tmplfuzz_core::decisionstream::{ChoiceSpec, DecisionStream, DsError, TokenSpec};
use tmplfuzz_core::runtime::value::normalize;

fn replay_value(spec: &ChoiceSpec, v: i64, evil: bool) -> Result<(i64, usize), DsError> {
    let mut rec = DecisionStream::for_parse().with_evil(evil);
    rec.record_value(spec, v)?;
    let (seed, _) = rec.into_parts();
    let mut gen = DecisionStream::from_seed(seed.clone()).with_evil(evil);
    let got = gen.choose_value(spec)?;
    assert_eq!(gen.cursor(), seed.len(), "seed not fully consumed");
    Ok((got, seed.len()))
}

fn type_max(width: u8, signed: bool) -> i64 {
    match (width, signed) {
        (8, _) => i64::MAX,
        (w, true) => (1i64 << (8 * w - 1)) - 1,
        (w, false) => (1i64 << (8 * w)) - 1,
    }
}

fn spec_strategy() -> impl Strategy<Value = ChoiceSpec> {
    let width = prop_oneof![Just(1u8), Just(2), Just(4), Just(8)];
    (width, any::<bool>(), any::<bool>(), 0usize..3, prop::collection::vec(any::<i64>(), 1..6), any::<(i16, u16)>())
        .prop_map(|(width, signed, big_endian, kind, cands, (lo, span))| {
            let mut spec = ChoiceSpec {
                width,
                signed,
                big_endian,
                ..ChoiceSpec::default()
            };
            match kind {
                0 => {}
                1 => spec.candidates = cands.into_iter().map(|c| normalize(c, width, signed)).collect(),
                _ => {
                    let lo = normalize(lo as i64, width, signed);
                    let hi = lo.saturating_add(span as i64 % 300).min(type_max(width, signed));
                    spec.bounds = Some((lo, hi));
                }
            }
            spec
        })
}

proptest! {
    #[test]
    fn evil_encoding_reproduces_any_value(spec in spec_strategy(), v in any::<i64>()) {
        let v = normalize(v, spec.width, spec.signed);
        let (got, _) = replay_value(&spec, v, true).unwrap();
        prop_assert_eq!(got, v);
    }

    #[test]
    fn representable_values_need_no_evil(spec in spec_strategy(), pick in any::<u64>(), raw in any::<i64>()) {
        let v = if !spec.candidates.is_empty() {
            spec.candidates[(pick % spec.candidates.len() as u64) as usize]
        } else if let Some((lo, hi)) = spec.bounds {
            lo + (pick % (hi - lo + 1) as u64) as i64
        } else {
            normalize(raw, spec.width, spec.signed)
        };
        let (got, _) = replay_value(&spec, v, false).unwrap();
        prop_assert_eq!(got, v);
    }

    #[test]
    fn out_of_set_values_are_unrepresentable_without_evil(spec in spec_strategy(), raw in any::<i64>()) {
        let v = normalize(raw, spec.width, spec.signed);
        let inside = if !spec.candidates.is_empty() {
            spec.candidates.contains(&v)
        } else if let Some((lo, hi)) = spec.bounds {
            lo <= v && v <= hi
        } else {
            true
        };
        prop_assume!(!inside);
        prop_assert_eq!(replay_value(&spec, v, false).unwrap_err(), DsError::Unrepresentable);
    }

    #[test]
    fn tokens_round_trip(
        preferred in prop::collection::vec(prop::collection::vec(any::<u8>(), 3), 0..4),
        possible in prop::collection::vec(prop::collection::vec(any::<u8>(), 3), 1..4),
        p in 0.0f64..=1.0,
        pick in any::<usize>(),
    ) {
        let spec = TokenSpec { preferred: preferred.clone(), possible: possible.clone(), pref_prob: p, width: 3 };
        let all: Vec<_> = preferred.iter().chain(&possible).cloned().collect();
        let t = &all[pick % all.len()];
        let mut rec = DecisionStream::for_parse();
        let seen = rec.record_token(&spec, Some(t)).unwrap();
        prop_assert_eq!(seen.as_ref(), Some(t));
        let (seed, _) = rec.into_parts();
        let mut gen = DecisionStream::from_seed(seed.clone());
        let again = gen.choose_token(&spec).unwrap();
        prop_assert_eq!(again.as_ref(), Some(t));
        prop_assert_eq!(gen.cursor(), seed.len());
    }

    #[test]
    fn random_stream_replays_from_its_record(rng_seed in any::<u64>(), k in 1usize..1000) {
        let mut a = DecisionStream::random(rng_seed);
        let picks: Vec<usize> = (0..20).map(|_| a.choose_index(k).unwrap()).collect();
        let (seed, _) = a.into_parts();
        let mut b = DecisionStream::from_seed(seed);
        let again: Vec<usize> = (0..20).map(|_| b.choose_index(k).unwrap()).collect();
        prop_assert_eq!(picks, again);
    }
}

#[test]
fn evil_rate_matches_gate_rule() {
    let mut ds = DecisionStream::random(11);
    let n = 200_000;
    let hits = (0..n).filter(|_| ds.evil_gate().unwrap()).count();
    let rate = hits as f64 / n as f64;
    assert!((0.0063..=0.0094).contains(&rate), "rate {rate}");
}
