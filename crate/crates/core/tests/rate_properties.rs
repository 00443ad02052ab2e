use ctmc_bounds::rate::{eval_rate, integrate_rate};
use ctmc_bounds::{parse_rate, RateExpr};
use proptest::prelude::*;

const TOL: f64 = 1e-10;

fn arb_rate() -> impl Strategy<Value = RateExpr> {
    prop_oneof![
        (0.0f64..5.0).prop_map(RateExpr::constant),
        (0.5f64..3.0, 0.0f64..1.0, 0.5f64..3.0).prop_map(|(a, b, w)| {
            RateExpr::constant(a) + RateExpr::constant(b * a) * (RateExpr::time() * w).sin()
        }),
        (0.1f64..2.0, 0.0f64..4.0, 0.0f64..4.0, 0.0f64..4.0).prop_map(|(s, v0, v1, v2)| {
            RateExpr::piecewise(vec![(0.0, v0), (s, v1), (s + 0.7, v2)]).unwrap()
        }),
        (0.1f64..1.0).prop_map(|k| (RateExpr::time() * -k).exp() + RateExpr::time()),
    ]
}

#[test]
fn worked_examples() {
    let e = parse_rate("2 + sin(6.2831853*t)").unwrap();
    assert!((eval_rate(&e, 0.25).unwrap() - 3.0).abs() < 1e-7);
    assert_eq!(eval_rate(&parse_rate("3").unwrap(), 7.2).unwrap(), 3.0);
    let p = parse_rate("piecewise[(0,1),(1.5,4)]").unwrap();
    assert_eq!(eval_rate(&p, 1.5).unwrap(), 4.0);
    assert_eq!(eval_rate(&p, 1.4999).unwrap(), 1.0);
    assert!((integrate_rate(&parse_rate("3").unwrap(), 0.0, 2.0, TOL).unwrap() - 6.0).abs() < TOL);
    let s = parse_rate("2 + sin(6.283185307179586*t)").unwrap();
    assert!((integrate_rate(&s, 0.0, 1.0, TOL).unwrap() - 2.0).abs() < TOL);
    assert!((integrate_rate(&p, 0.0, 2.0, TOL).unwrap() - 3.5).abs() < TOL);
}

#[test]
fn evaluation_errors() {
    assert!(eval_rate(&parse_rate("1/(t - 1)").unwrap(), 1.0).is_err());
    assert!(eval_rate(&parse_rate("exp(1000*t)").unwrap(), 1.0).is_err());
    assert!(eval_rate(&parse_rate("t").unwrap(), -1.0).is_err());
    assert!(integrate_rate(&parse_rate("t").unwrap(), 2.0, 1.0, TOL).is_err());
    assert!(integrate_rate(&parse_rate("t").unwrap(), 0.0, 1.0, 0.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn integral_is_linear(f in arb_rate(), g in arb_rate(), a in -3.0f64..3.0, b in -3.0f64..3.0, t1 in 0.1f64..4.0) {
        let combo = f.clone() * a + g.clone() * b;
        let lhs = integrate_rate(&combo, 0.0, t1, TOL).unwrap();
        let rhs = a * integrate_rate(&f, 0.0, t1, TOL).unwrap() + b * integrate_rate(&g, 0.0, t1, TOL).unwrap();
        prop_assert!((lhs - rhs).abs() <= 10.0 * TOL, "{} vs {}", lhs, rhs);
    }

    #[test]
    fn integral_is_additive(f in arb_rate(), t0 in 0.0f64..2.0, d1 in 0.0f64..2.0, d2 in 0.0f64..2.0) {
        let (t1, t2) = (t0 + d1, t0 + d1 + d2);
        let whole = integrate_rate(&f, t0, t2, TOL).unwrap();
        let parts = integrate_rate(&f, t0, t1, TOL).unwrap() + integrate_rate(&f, t1, t2, TOL).unwrap();
        prop_assert!((whole - parts).abs() <= 10.0 * TOL, "{} vs {}", whole, parts);
    }

    #[test]
    fn display_reparses(f in arb_rate(), t in 0.0f64..10.0) {
        let back = parse_rate(&f.to_string()).unwrap();
        prop_assert_eq!(back.eval(t).unwrap().to_bits(), f.eval(t).unwrap().to_bits());
    }
}
