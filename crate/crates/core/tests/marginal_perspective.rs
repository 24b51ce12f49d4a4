mod common;

use common::{closed_form_families, lin_grid, rel_close};
use etdiv::marginal_perspective::{h_closed, h_oracle, h_value, MarginalPerspective};
use etdiv::{EntropyDescriptor, ExtendedValue};
use proptest::prelude::*;

#[test]
fn oracle_matches_closed_forms_on_grid() {
    let grid = lin_grid(0.1, 10.0, 25);
    for f in closed_form_families() {
        let mut worst = 0.0f64;
        for &r in &grid {
            for &t in &grid {
                let c = h_closed(&f, r, t).unwrap();
                let o = h_oracle(&f, r, t);
                match (c, o) {
                    (ExtendedValue::Infinite, ExtendedValue::Infinite) => {}
                    (ExtendedValue::Finite(c), ExtendedValue::Finite(o)) => {
                        worst = worst.max((c - o).abs() / (1.0 + c));
                    }
                    _ => panic!("{f} at ({r},{t}): closed {c} vs oracle {o}"),
                }
            }
        }
        assert!(worst <= 1e-7, "{f}: worst relative gap {worst:e}");
    }
}

#[test]
fn specialization_identities() {
    let u_half = EntropyDescriptor::power_like(0.5).unwrap();
    let u1 = EntropyDescriptor::power_like(1.0).unwrap();
    let u0 = EntropyDescriptor::power_like(0.0).unwrap();
    let v1 = EntropyDescriptor::power_log(1.0).unwrap();
    let u2 = EntropyDescriptor::power_like(2.0).unwrap();
    let chi2 = EntropyDescriptor::chi_alpha(2.0).unwrap();
    let grid = lin_grid(0.1, 10.0, 25);
    for &r in &grid {
        for &t in &grid {
            let h = |f: &EntropyDescriptor| h_value(f, r, t).to_f64();
            assert!(rel_close(h(&u_half), h(&u1), 1e-9));
            assert!(rel_close(h(&v1), h(&u0), 1e-9));
            assert!(rel_close(h(&u2), 0.5 * h(&chi2), 1e-9));
        }
    }
}

#[test]
fn strict_minimum_separates_points() {
    let grid = lin_grid(0.1, 10.0, 25);
    for f in closed_form_families() {
        if !f.has_strict_minimum() {
            continue;
        }
        let mp = MarginalPerspective::new(f.clone());
        for &r in &grid {
            for &t in &grid {
                if mp.eval_f64(r, t) == 0.0 {
                    assert!((r - t).abs() <= 1e-8, "{f}: H({r},{t}) = 0");
                }
            }
        }
    }
}

#[test]
fn indicator_with_slack_has_zero_off_diagonal() {
    let f = EntropyDescriptor::indicator(0.5, 2.0).unwrap();
    assert!(!f.has_strict_minimum());
    assert_eq!(h_value(&f, 1.0, 2.0), ExtendedValue::ZERO);
}

fn family_strategy() -> impl Strategy<Value = EntropyDescriptor> {
    let fams = closed_form_families();
    (0..fams.len()).prop_map(move |i| fams[i].clone())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn symmetric_homogeneous_and_zero_on_diagonal(
        f in family_strategy(), r in 0.01f64..50.0, t in 0.01f64..50.0, lam in prop::sample::select(vec![0.5, 3.0])
    ) {
        let mp = MarginalPerspective::new(f);
        let h = mp.eval_f64(r, t);
        prop_assert_eq!(h, mp.eval_f64(t, r));
        let hl = mp.eval_f64(lam * r, lam * t);
        prop_assert!(rel_close(hl, lam * h, 1e-9), "{} vs {}", hl, lam * h);
        prop_assert_eq!(mp.eval_f64(r, r), 0.0);
    }

    #[test]
    fn jointly_midpoint_convex(
        f in family_strategy(), r1 in 0.05f64..20.0, t1 in 0.05f64..20.0, r2 in 0.05f64..20.0, t2 in 0.05f64..20.0
    ) {
        let mp = MarginalPerspective::new(f);
        let a = mp.eval_f64(r1, t1);
        let b = mp.eval_f64(r2, t2);
        let m = mp.eval_f64(0.5 * (r1 + r2), 0.5 * (t1 + t2));
        if a.is_finite() && b.is_finite() {
            prop_assert!(m <= 0.5 * (a + b) + 1e-9 * (1.0 + a.abs() + b.abs()));
        }
    }

    #[test]
    fn oracle_tracks_closed_form_off_grid(f in family_strategy(), r in 0.02f64..30.0, t in 0.02f64..30.0) {
        let c = h_closed(&f, r, t).unwrap().to_f64();
        let o = h_oracle(&f, r, t).to_f64();
        prop_assert!(rel_close(o, c, 1e-7) || (c.is_infinite() && o.is_infinite()), "{} vs {}", o, c);
    }
}
