use etdiv::power_mean;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ORDERS: [f64; 11] = [f64::NEG_INFINITY, -5.0, -1.0, -0.5, -1e-7, 0.0, 1e-7, 0.5, 1.0, 3.0, f64::INFINITY];

#[test]
fn monotone_in_the_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED);
    for _ in 0..1000 {
        let r: f64 = rng.random_range(0.0..10.0);
        let t: f64 = rng.random_range(0.0..10.0);
        let mut p1: f64 = rng.random_range(-6.0..6.0);
        let mut p2: f64 = rng.random_range(-6.0..6.0);
        if p1 > p2 {
            std::mem::swap(&mut p1, &mut p2);
        }
        let (m1, m2) = (power_mean(p1, r, t), power_mean(p2, r, t));
        assert!(m1 <= m2 * (1.0 + 1e-14), "M_{p1} = {m1} > M_{p2} = {m2}");
        let degenerate = r == t || (p2 <= 0.0 && r.min(t) == 0.0) || p2 - p1 < 1e-6;
        if !degenerate {
            assert!(m1 < m2, "not strict at p1={p1}, p2={p2}, r={r}, t={t}");
        }
    }
}

#[test]
fn geometric_limit_at_zero() {
    for (r, t) in [(1.0, 2.0), (0.01, 50.0), (3.0, 3.5)] {
        let g = (r * t as f64).sqrt();
        let mut last = f64::INFINITY;
        for k in 1..12 {
            let eps = 10f64.powi(-k);
            let err = (power_mean(eps, r, t) - g).abs().max((power_mean(-eps, r, t) - g).abs());
            assert!(err <= last + 1e-15);
            last = err;
        }
        assert!(last < 1e-10);
    }
}

proptest! {
    #[test]
    fn symmetric_idempotent_homogeneous(r in 0.0f64..1e3, t in 0.0f64..1e3, i in 0usize..ORDERS.len()) {
        let p = ORDERS[i];
        let m = power_mean(p, r, t);
        prop_assert_eq!(m, power_mean(p, t, r));
        prop_assert_eq!(power_mean(p, r, r), r);
        prop_assert!(m >= r.min(t) * (1.0 - 1e-15) && m <= r.max(t) * (1.0 + 1e-15));
        for lam in [0.5, 2.0, 10.0] {
            let ml = power_mean(p, lam * r, lam * t);
            prop_assert!((ml - lam * m).abs() <= 1e-12 * lam * m.max(1e-300));
        }
    }

    #[test]
    fn monotone_in_arguments(r in 0.0f64..100.0, s in 0.0f64..100.0, t in 0.0f64..100.0, i in 0usize..ORDERS.len()) {
        let p = ORDERS[i];
        let (s, t) = if s <= t { (s, t) } else { (t, s) };
        prop_assert!(power_mean(p, r, s) <= power_mean(p, r, t) * (1.0 + 1e-14));
    }
}
