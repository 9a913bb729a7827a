use proptest::prelude::*;

use super::*;
use crate::filtration::{Filtration, Weight};

fn f2_w13() -> (Filtration, Weight) {
    (
        Filtration::dyadic(1).unwrap(),
        Weight::new("w13", vec![1.0, 3.0]).unwrap(),
    )
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

#[test]
fn f2_w13_closed_forms() {
    let (f, w) = f2_w13();
    let ev = Evaluator::new(&f, &w).unwrap();
    let sqrt3 = 3f64.sqrt();
    let cases = [
        (Estimator::Ap(2.0), 4.0 / 3.0),
        (Estimator::Rh(2.0), 1.25),
        (Estimator::Aexp, 2.0 / sqrt3),
        (Estimator::Asw(0.5), 2.0 / ((1.0 + sqrt3) / 2.0).powi(2)),
        (Estimator::Acon(0.6), 0.5),
        (Estimator::Am(0.5), 0.75),
        (Estimator::AmHat(0.5), 0.5),
        (Estimator::Acf(0.5), 0.75 * 2f64.sqrt()),
        (Estimator::Alambda(0.5), 1.5),
        (Estimator::Alog, 0.75 * 1.5f64.ln()),
        (Estimator::Amed, 1.0),
        (Estimator::Astar, 1.25),
        (Estimator::Regularity, 2.0),
    ];
    for (e, want) in cases {
        let got = ev.estimate(e).unwrap();
        assert!(
            close(got.value, want, 1e-12),
            "{e}: {} vs {want}",
            got.value
        );
        assert!(got.exact);
    }
    // the root atom carries every nontrivial value
    assert_eq!(ev.estimate(Estimator::Ap(2.0)).unwrap().level, 0);
    assert_eq!(ev.estimate(Estimator::Regularity).unwrap().level, 1);
}

#[test]
fn constant_weight_gives_trivial_constants() {
    let f = Filtration::dyadic(3).unwrap();
    let w = Weight::uniform("one", &f);
    let r = full_report(&f, &w, &Grids::default()).unwrap();
    for (_, v) in r.ap.iter().chain(r.rh.iter()).chain(r.asw.iter()) {
        assert!(close(v, 1.0, 1e-14));
    }
    for (_, v) in r.acon.iter().chain(r.alambda.iter()) {
        assert_eq!(v, 0.0);
    }
    for (a, v) in r.am.iter() {
        assert_eq!(Some(v), r.am_hat.get(a));
    }
    for (_, v) in r.acf.iter() {
        assert!(close(v, 1.0, 1e-14));
    }
    assert_eq!(r.alog, 0.0);
    for v in [r.aexp, r.amed, r.astar, r.regularity] {
        assert!(close(v, 1.0, 1e-14), "{v}");
    }
}

#[test]
fn am_on_constant_weight_is_fraction_of_mass() {
    let f = Filtration::dyadic(1).unwrap();
    let w = Weight::uniform("one", &f);
    assert_eq!(am_profile(&f, &w, 0.5).unwrap(), 0.5);
    assert_eq!(am_profile(&f, &w, 0.4).unwrap(), 0.0);
}

#[test]
fn am_hat_matches_am_on_swapped_space() {
    let f = Filtration::dyadic(3).unwrap();
    let w = Weight::new("w", vec![0.3, 2.0, 1.0, 7.0, 0.5, 0.5, 4.0, 1.2]).unwrap();
    let (g, v) = f.swap_measure(&w).unwrap();
    for a in [0.1, 0.25, 0.5, 0.9] {
        assert_eq!(
            am_hat_profile(&f, &w, a).unwrap(),
            am_profile(&g, &v, a).unwrap()
        );
    }
}

#[test]
fn rejects_out_of_range_parameters() {
    let (f, w) = f2_w13();
    assert!(ap_constant(&f, &w, 1.0).is_err());
    assert!(rh_constant(&f, &w, 0.5).is_err());
    assert!(asw_constant(&f, &w, 1.0).is_err());
    assert!(acon_profile(&f, &w, 0.0).is_err());
    assert!(am_profile(&f, &w, 1.0).is_err());
    assert!(acf_constant(&f, &w, f64::NAN).is_err());
    assert!(alambda_constant(&f, &w, 1.5).is_err());
    let bad = Grids {
        p: vec![0.5],
        ..Grids::default()
    };
    assert!(full_report(&f, &w, &bad).is_err());
}

#[test]
fn wide_weights_stay_finite() {
    let f = Filtration::dyadic(2).unwrap();
    let w = Weight::new("wide", vec![1e-9, 1.0, 1e9, 1e-30]).unwrap();
    let ev = Evaluator::new(&f, &w).unwrap();
    for e in [
        Estimator::Ap(1.25),
        Estimator::Rh(5.0),
        Estimator::Asw(0.001),
    ] {
        let v = ev.estimate(e).unwrap().value;
        assert!(v.is_finite() && v >= 1.0, "{e}: {v}");
    }
}

#[test]
fn envelope_mode_is_flagged() {
    let f = Filtration::dyadic(5).unwrap();
    let vals: Vec<f64> = (0..32).map(|i| 1.0 + (i % 7) as f64).collect();
    let w = Weight::new("w", vals).unwrap();
    let r = full_report(&f, &w, &Grids::default()).unwrap();
    assert_eq!(r.profile_mode, ProfileMode::Envelope);
    let am = r
        .witnesses
        .iter()
        .find(|x| x.estimator == "am:0.5")
        .unwrap();
    assert!(!am.exact);
    let acf = r
        .witnesses
        .iter()
        .find(|x| x.estimator == "acf:0.5")
        .unwrap();
    assert!(acf.exact);
}

#[test]
fn report_json_round_trip() {
    let (f, w) = f2_w13();
    let r = full_report(&f, &w, &Grids::default()).unwrap();
    let text = serde_json::to_string(&r).unwrap();
    assert!(text.contains(r#""2":1.3333333333333333"#), "{text}");
    assert!(text.contains(r#""aexp":1.1547005383792515"#));
    assert!(text.contains(r#""astar":1.25"#));
    let back: ConstantReport = serde_json::from_str(&text).unwrap();
    assert_eq!(back, r);
    assert!(back.witness_discrepancy(&f, &w).unwrap() <= 1e-10);
    assert_eq!(
        text,
        serde_json::to_string(&full_report(&f, &w, &Grids::default()).unwrap()).unwrap()
    );
}

fn weight_strategy(depth: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-3.0f64..3.0, 1 << depth)
        .prop_map(|logs| logs.into_iter().map(f64::exp).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn scale_invariance(vals in weight_strategy(3)) {
        let f = Filtration::dyadic(3).unwrap();
        let w = Weight::new("w", vals).unwrap();
        let base = full_report(&f, &w, &Grids::default()).unwrap();
        for c in [1e-3, 1.0, 1e3] {
            let r = full_report(&f, &w.scaled(c).unwrap(), &Grids::default()).unwrap();
            for e in Grids::default().estimators() {
                let (a, b) = (base.get(e).unwrap(), r.get(e).unwrap());
                prop_assert!(close(a, b, 1e-10), "{e} c={c}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn monotone_in_parameters(vals in weight_strategy(3)) {
        let f = Filtration::dyadic(3).unwrap();
        let w = Weight::new("w", vals).unwrap();
        let ev = Evaluator::new(&f, &w).unwrap();
        let grid = [0.05, 0.1, 0.25, 0.5, 0.75, 0.9];
        let at = |e: Estimator| ev.estimate(e).unwrap().value;
        for x in grid.windows(2) {
            let (lo, hi) = (x[0], x[1]);
            prop_assert!(at(Estimator::Acon(lo)) <= at(Estimator::Acon(hi)));
            prop_assert!(at(Estimator::Am(lo)) <= at(Estimator::Am(hi)));
            prop_assert!(at(Estimator::AmHat(lo)) <= at(Estimator::AmHat(hi)));
            prop_assert!(at(Estimator::Acf(lo)) <= at(Estimator::Acf(hi)) * (1.0 + 1e-12));
            // a larger β shrinks the right-hand set, so the constant grows
            prop_assert!(at(Estimator::Alambda(lo)) <= at(Estimator::Alambda(hi)) * (1.0 + 1e-12));
            // larger s means a larger power mean and a smaller ratio
            prop_assert!(at(Estimator::Asw(hi)) <= at(Estimator::Asw(lo)) * (1.0 + 1e-12));
        }
        for r in [ev.estimate(Estimator::Aexp), ev.estimate(Estimator::Amed), ev.estimate(Estimator::Astar)] {
            prop_assert!(r.unwrap().value >= 1.0 - 1e-12);
        }
        prop_assert!(at(Estimator::Rh(1.5)) >= 1.0 - 1e-12);
    }
}
