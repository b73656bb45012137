use proptest::prelude::*;
use varpois_cli::dsl::parse_session;

fn atom() -> impl Strategy<Value = String> {
    prop_oneof![
        Just("u".to_string()),
        Just("u'".to_string()),
        Just("u2''".to_string()),
        Just("u^(3)".to_string()),
        Just("x".to_string()),
        Just("c".to_string()),
        Just("a'".to_string()),
        Just("d".to_string()),
        (1i64..7).prop_map(|n| n.to_string()),
        (1i64..5, 2i64..5).prop_map(|(n, m)| format!("{n}/{m}")),
    ]
}

fn expr() -> impl Strategy<Value = String> {
    atom().prop_recursive(3, 16, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("{a} + {b}")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}) - {b}")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a})*({b})")),
            (inner.clone(), 0u32..3).prop_map(|(a, e)| format!("({a})^{e}")),
            inner.prop_map(|a| format!("-({a})")),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn parse_print_parse_is_identity(e in expr(), f in expr()) {
        let src = format!("vars 2\nparams c\nE = {e}\nM = [[{e}, 0], [1, {f}]]\n");
        let s = parse_session(&src).unwrap();
        let printed = s.to_source();
        let again = parse_session(&printed).unwrap();
        prop_assert_eq!(&again, &s, "printed as {}", printed);
        prop_assert_eq!(again.to_source(), printed);
    }
}
