use moyal::expr::{format_poly, parse_poly, poly_json_roundtrip};
use moyal::lie::{covariance_defect_series, BracketKind, Order};
use moyal::star::{moyal, poisson, star, star_bopp};
use moyal::{GaussianRational, Monomial, PhasePoly};
use num_rational::BigRational;
use proptest::prelude::*;

fn frac(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn coeff() -> impl Strategy<Value = GaussianRational> {
    (-6i64..=6, 1i64..=5, -6i64..=6, 1i64..=5).prop_map(|(a, b, c, d)| GaussianRational::new(frac(a, b), frac(c, d)))
}

fn poly_with(max_deg: u32, max_hbar: u32) -> impl Strategy<Value = PhasePoly> {
    prop::collection::vec((0..=max_deg, 0..=max_deg, 0..=max_hbar, coeff()), 0..5)
        .prop_map(|ts| PhasePoly::from_terms(ts.into_iter().map(|(q, p, h, c)| (Monomial::new(q, p, h), c))))
}

fn poly() -> impl Strategy<Value = PhasePoly> {
    poly_with(3, 2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn star_is_associative(f in poly(), g in poly(), h in poly()) {
        prop_assert_eq!(star(&star(&f, &g), &h), star(&f, &star(&g, &h)));
    }

    #[test]
    fn both_star_routes_agree(f in poly(), g in poly()) {
        prop_assert_eq!(star(&f, &g), star_bopp(&f, &g));
    }

    #[test]
    fn conjugation_reverses_star_order(f in poly(), g in poly()) {
        prop_assert_eq!(star(&f, &g).conj(), star(&g.conj(), &f.conj()));
    }

    #[test]
    fn star_reduces_to_product_without_hbar(f in poly(), g in poly()) {
        prop_assert_eq!(star(&f, &g).classical_limit(), (&f * &g).classical_limit());
    }

    #[test]
    fn moyal_is_i_hbar_poisson_plus_cubic(f in poly_with(4, 0), g in poly_with(4, 0)) {
        let rest = moyal(&f, &g) - &PhasePoly::i_hbar() * &poisson(&f, &g);
        prop_assert!(rest.hbar_powers().iter().all(|&k| k >= 3 && k % 2 == 1));
        prop_assert!((moyal(&f, &g) + moyal(&g, &f)).is_zero());
    }

    #[test]
    fn text_and_json_roundtrip(f in poly_with(6, 3)) {
        let text = format_poly(&f);
        prop_assert_eq!(parse_poly(&text).unwrap(), f.clone());
        prop_assert_eq!(format_poly(&parse_poly(&text).unwrap()), text);
        prop_assert_eq!(poly_json_roundtrip(&f).unwrap(), f);
    }

    #[test]
    fn parser_never_panics(src in "\\PC{0,40}") {
        if let Err(e) = parse_poly(&src) {
            prop_assert!(e.line >= 1 && e.column >= 1);
        }
    }

    #[test]
    fn parser_never_panics_on_grammar_alphabet(src in "[qpihbar0-9+*/^() \n-]{0,40}") {
        if let Err(e) = parse_poly(&src) {
            prop_assert!(e.line >= 1 && e.column >= 1);
        }
    }

    #[test]
    fn classical_flows_are_covariant(g in poly_with(2, 0), f in poly_with(3, 1)) {
        let d = covariance_defect_series(BracketKind::Classical, &g, &f, Order::Truncated(3)).unwrap();
        prop_assert!(d.is_zero());
    }
}
