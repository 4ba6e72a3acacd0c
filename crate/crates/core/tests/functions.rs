use fracrk::discretize::SpectralInterval;
use fracrk::functions::*;
use proptest::prelude::*;
use std::f64::consts::PI;

fn class(ls: bool, cs: bool, cb: bool) -> FunctionClass {
    FunctionClass { ls, cs, cb }
}

#[test]
fn classification_table() {
    let table: &[(&str, FunctionClass)] = &[
        ("pow:+0", class(true, false, false)),
        ("pow:+0.5", class(false, false, true)),
        ("pow:+1", class(false, false, false)),
        ("pow:-0", class(true, false, false)),
        ("pow:-0.5", class(true, true, false)),
        ("pow:-1", class(true, false, false)),
        ("ml:alpha=0.5,beta=1,t=1.5,s=0.5", class(true, true, false)),
        ("ml:alpha=0.5,beta=1,t=1.5,s=0.75", class(true, false, false)),
        ("ml:alpha=0.25,beta=1,t=1.5,s=0.75", class(true, true, false)),
        ("ml:alpha=0.5,beta=1,t=1.5,s=0.8", class(true, false, false)),
        ("ml:alpha=1,beta=1,t=1.5,s=0.25", class(true, true, false)),
        ("ml:alpha=1,beta=1,t=1.5,s=0.5", class(true, false, false)),
        ("ml:alpha=0.5,beta=1,t=0,s=0.5", class(true, false, false)),
        ("ml:alpha=0.5,beta=1,t=1,s=0", class(true, false, false)),
    ];
    for (d, want) in table {
        let f: ParametricFunction = d.parse().unwrap();
        assert_eq!(classify(&f), *want, "{d}");
    }
}

#[test]
fn evaluation_formulas() {
    let x = 7.3;
    assert_eq!("pow:+0.5".parse::<ParametricFunction>().unwrap().evaluate(x).unwrap(), x.sqrt());
    assert_eq!("pow:-0.25".parse::<ParametricFunction>().unwrap().evaluate(x).unwrap(), x.powf(-0.25));
    let heat = ParametricFunction::ml(1.0, 1.0, 0.2, 1.0).unwrap();
    assert!((heat.evaluate(x).unwrap() - (-0.2 * x).exp()).abs() < 1e-16);
    let a0 = ParametricFunction::ml(0.0, 1.0, 2.0, 0.5).unwrap();
    assert!((a0.evaluate(x).unwrap() - 1.0 / (1.0 + x.sqrt())).abs() < 1e-16);
    assert!(matches!(heat.evaluate(0.0), Err(FunctionError::Argument(_))));
}

#[test]
fn limits_at_zero() {
    assert_eq!(ParametricFunction::pow_pos(0.3).unwrap().value_at_zero().unwrap(), 0.0);
    assert!(ParametricFunction::pow_neg(0.3).unwrap().value_at_zero().unwrap().is_infinite());
    let f = ParametricFunction::ml(0.5, 2.0, 1.5, 0.5).unwrap();
    // 1/Γ(2) = 1.
    assert!((f.value_at_zero().unwrap() - 1.0).abs() < 1e-15);
}

#[test]
fn parameter_domains() {
    assert!(ParametricFunction::pow_pos(1.5).is_err());
    assert!(ParametricFunction::pow_neg(-0.1).is_err());
    assert!(ParametricFunction::ml(0.5, 0.25, 1.0, 0.5).is_err());
    assert!(ParametricFunction::ml(0.5, 1.0, -1.0, 0.5).is_err());
    assert!(ParametricFunction::ml(0.5, 1.0, f64::NAN, 0.5).is_err());
    for bad in ["pow:x", "exp:1", "ml:alpha=0.5,t=1", "ml:alpha=0.5,t=1,s=0.5,q=2", "pow"] {
        assert!(bad.parse::<ParametricFunction>().is_err(), "{bad}");
    }
}

#[test]
fn display_roundtrip() {
    for d in ["pow:+0.5", "pow:-1", "ml:alpha=0.25,beta=1.5,t=20,s=0.75"] {
        let f: ParametricFunction = d.parse().unwrap();
        assert_eq!(f.to_string().parse::<ParametricFunction>().unwrap(), f);
    }
}

#[test]
fn gamma_k_formula() {
    let iv = SpectralInterval::new(1.0, PI).unwrap();
    // √(λ_U/(λ_L π)) = 1, so γ_k = 2.23 + (2/π) ln(4k).
    assert!((gamma_k(3, &iv) - (2.23 + 2.0 / PI * 12f64.ln())).abs() < 1e-15);
    assert_eq!(gamma_k(0, &iv), gamma_k(1, &iv));
}

#[test]
fn bound_constant_picks_smallest_branch() {
    let iv = SpectralInterval::new(20.0, 8000.0).unwrap();
    let f = ParametricFunction::pow_neg(0.5).unwrap();
    // CS gives f(λ_L); LS is unbounded at 0.
    let c = bound_constant(&f, classify(&f), &iv, 5).unwrap();
    assert!((c - 20f64.powf(-0.5)).abs() < 1e-16);
    let g = ParametricFunction::pow_pos(0.5).unwrap();
    assert!((bound_constant(&g, classify(&g), &iv, 5).unwrap() - 8000f64.sqrt()).abs() < 1e-12);
    let h = ParametricFunction::ml(0.5, 1.0, 1.5, 0.5).unwrap();
    let cls = classify(&h);
    let c = bound_constant(&h, cls, &iv, 5).unwrap();
    let cs = h.evaluate(20.0).unwrap();
    let ls = 4.0 * gamma_k(5, &iv) * h.value_at_zero().unwrap();
    assert_eq!(c, cs.min(ls));
}

#[test]
fn bound_constant_failures() {
    let iv = SpectralInterval::new(1.0, 10.0).unwrap();
    let f = ParametricFunction::pow_neg(1.0).unwrap();
    assert!(matches!(bound_constant(&f, classify(&f), &iv, 2), Err(FunctionError::ShiftRequired(_))));
    let g = ParametricFunction::pow_pos(1.0).unwrap();
    assert!(matches!(bound_constant(&g, classify(&g), &iv, 2), Err(FunctionError::Unclassified(_))));
}

#[test]
fn laplace_bound_formula() {
    let v = laplace_bound(0.5, 0.5, 4.0, 2.0, 1.0).unwrap();
    assert!((v - 2.0 * (0.5 + 2.0 * 1.5f64.ln())).abs() < 1e-15);
    assert!(laplace_bound(0.5, 0.0, 4.0, 2.0, 1.0).is_err());
    assert!(laplace_bound(0.5, 0.5, 0.0, 2.0, 1.0).is_err());
}

proptest! {
    /// Complete Bernstein functions are increasing and concave on (0, ∞).
    #[test]
    fn cb_members_increase_concavely(s in 0.01f64..0.99, x in 0.01f64..1e4) {
        let f = ParametricFunction::pow_pos(s).unwrap();
        prop_assert!(classify(&f).cb);
        let h = 1e-3 * x;
        let (a, b, c) = (f.evaluate(x - h).unwrap(), f.evaluate(x).unwrap(), f.evaluate(x + h).unwrap());
        prop_assert!(a < b && b < c);
        prop_assert!(a + c - 2.0 * b <= 1e-12 * b);
    }

    /// Laplace-Stieltjes members are positive and decreasing.
    #[test]
    fn ls_members_decrease(alpha in 0.1f64..1.0, t in 0.1f64..10.0, s in 0.1f64..1.0, x in 0.1f64..1e3) {
        let f = ParametricFunction::ml(alpha, 1.0, t, s).unwrap();
        prop_assert!(classify(&f).ls);
        let a = f.evaluate(x).unwrap();
        let b = f.evaluate(1.1 * x).unwrap();
        prop_assert!(a > 0.0 && b <= a * (1.0 + 1e-12));
    }
}
