use proptest::prelude::*;

use super::*;
use crate::error::Error;
use crate::model::Rational;
use crate::testsupport::{fig1, gen_ta, GenSpec, FIG1_TA};

#[test]
fn fig1_text_matches_builder() {
    let parsed = parse_model(FIG1_TA).unwrap();
    assert_eq!(parsed, fig1());
    assert_eq!(parse_model(&emit_model(&parsed)).unwrap(), parsed);
}

#[test]
fn init_equal_to_final_is_rejected() {
    let err = parse_model("ta t; clock x; loc a init final;").unwrap_err();
    // The private location is checked first.
    assert!(matches!(err, Error::Syntax { ref message, .. } if message.contains("private location missing")));
    let err = parse_model("ta t; clock x; loc a init private final;").unwrap_err();
    match err {
        Error::Invalid(d) => assert!(d.iter().any(|d| d.message.contains("init"))),
        other => panic!("unexpected {other}"),
    }
}

#[test]
fn decimal_and_fraction_literals_agree() {
    let a = parse_model("ta t; clock x; loc a init invariant x <= 5/2; loc p private; loc f final; edge a -> f;")
        .unwrap();
    let b = parse_model("ta t; clock x; loc a init invariant x <= 2.5; loc p private; loc f final; edge a -> f;")
        .unwrap();
    assert_eq!(a, b);
    assert_eq!(a.locations[0].invariant.atoms[0].rhs.constant, Rational::new(5, 2));
    assert_eq!(a.denom(), 2);
}

#[test]
fn errors_carry_positions() {
    let err = parse_model_named("ta t;\nclock x;\nloc a init invariant y <= 1;", "m.ta").unwrap_err();
    assert_eq!(err.to_string(), "m.ta:3:22: `y` is not a declared clock");
    let err = parse_model("ta t; clock x; loc a init; loc b private; loc c final; edge a -> zz;").unwrap_err();
    assert!(err.to_string().contains("`zz` is not a declared location"));
    let err = parse_model("ta t; clock x; loc a init; loc a private;").unwrap_err();
    assert!(err.to_string().contains("declared twice"));
    assert!(parse_model("ta t; clock x; loc a init invariant x <= 1/0;").is_err());
    assert!(parse_model("ta t; clock x; loc a init invariant x ! 1;").is_err());
}

#[test]
fn parametric_terms() {
    let sys = parse_model(
        "ta t; clock x; param p, q;\n\
         loc a init invariant x <= 2*p + 1/2*q - 1;\n\
         loc b private; loc c final;\n\
         edge a -> b when x > p do { x } sync go; edge b -> c;",
    )
    .unwrap();
    let text = emit_model(&sys);
    assert_eq!(parse_model(&text).unwrap(), sys);
    assert_eq!(sys.edges[0].action.as_deref(), Some("go"));
}

proptest! {
    #[test]
    fn generated_systems_round_trip(seed in 0u64..10_000) {
        let sys = gen_ta(&GenSpec::with_seed(seed));
        let text = emit_model(&sys);
        prop_assert_eq!(parse_model(&text).unwrap(), sys);
    }
}

#[test]
fn rational_literals() {
    assert_eq!(parse_rational("3"), Some(Rational::from_integer(3)));
    assert_eq!(parse_rational("-3/2"), Some(Rational::new(-3, 2)));
    assert_eq!(parse_rational("2.50"), Some(Rational::new(5, 2)));
    for bad in ["", "x", "1/0", "1/-2", "2.", ".5", "--1", "1e3"] {
        assert_eq!(parse_rational(bad), None, "{bad}");
    }
}
