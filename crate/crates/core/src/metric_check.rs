//! Audits of triangle inequalities for powers of marginal perspective functions.
//!
//! For a symmetric, 1-homogeneous `H`, the triangle inequality for `H^a` on
//! `[0, inf)` reduces to the two-variable inequality
//! `H^a(u, 1) <= v^a H^a(u/v, 1) + H^a(v, 1)` for `0 <= u < v < 1`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

pub const DEFAULT_SEED: u64 = 0x5EED;
pub const TOL_TRI: f64 = 1e-9;
pub const TOL_MONO: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConePointSample {
    pub point: usize,
    pub radius: f64,
}

/// The configuration achieving the worst violation.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Witness {
    Pair { u: f64, v: f64 },
    Triple { points: [ConePointSample; 3] },
}

#[derive(Debug, Clone, Serialize)]
pub struct TriangleReport {
    pub passed: bool,
    /// Max of `LHS - RHS` over the tested configurations.
    pub worst_violation: f64,
    pub witness: Option<Witness>,
    pub tested: usize,
    pub skipped: usize,
    /// `H(0, 1) = +inf`, which already rules out a metric power.
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub necessary_condition_failed: bool,
}

impl TriangleReport {
    pub(crate) fn from_samples<W>(samples: impl Iterator<Item = Option<(f64, W)>>, tol: f64) -> (Self, Option<W>) {
        let mut worst = f64::NEG_INFINITY;
        let mut witness = None;
        let (mut tested, mut skipped) = (0, 0);
        for s in samples {
            match s {
                None => skipped += 1,
                Some((gap, w)) => {
                    tested += 1;
                    if gap > worst {
                        worst = gap;
                        witness = Some(w);
                    }
                }
            }
        }
        let passed = worst <= tol;
        let report = TriangleReport {
            passed,
            worst_violation: worst,
            witness: None,
            tested,
            skipped,
            necessary_condition_failed: false,
        };
        (report, if passed { None } else { witness })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TriangleOptions {
    /// Grid resolution `n`: `u, v` range over `{k / n : k = 0..n-1}`.
    pub grid: usize,
    pub random_pairs: usize,
    pub seed: u64,
    pub tol: f64,
}

impl Default for TriangleOptions {
    fn default() -> Self {
        TriangleOptions { grid: 200, random_pairs: 1000, seed: DEFAULT_SEED, tol: TOL_TRI }
    }
}

/// `LHS - RHS` of the reduced inequality, or `None` when the pair is skipped.
fn reduced_gap(h: &(impl Fn(f64, f64) -> f64 + Sync), a: f64, u: f64, v: f64) -> Option<f64> {
    let lhs = h(u, 1.0).powf(a);
    let rhs = v.powf(a) * h(u / v, 1.0).powf(a) + h(v, 1.0).powf(a);
    match (lhs.is_finite(), rhs.is_finite()) {
        (true, true) => Some(lhs - rhs),
        (true, false) => Some(f64::NEG_INFINITY),
        _ => None,
    }
}

/// Tests the triangle inequality of `H^a` on a grid of `(u, v)` pairs plus
/// random pairs.
pub fn check_costless_triangle(h: impl Fn(f64, f64) -> f64 + Sync, a: f64, opts: &TriangleOptions) -> TriangleReport {
    assert!(a > 0.0 && a <= 1.0, "exponent a must lie in (0, 1]");
    if h(0.0, 1.0).is_infinite() {
        return TriangleReport {
            passed: false,
            worst_violation: f64::INFINITY,
            witness: None,
            tested: 0,
            skipped: 0,
            necessary_condition_failed: true,
        };
    }
    let n = opts.grid.max(2);
    let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(n * n / 2 + opts.random_pairs);
    for j in 1..n {
        for i in 0..j {
            pairs.push((i as f64 / n as f64, j as f64 / n as f64));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..opts.random_pairs {
        let x: f64 = rng.random();
        let y: f64 = rng.random();
        if x != y {
            pairs.push((x.min(y), x.max(y)));
        }
    }
    let gaps: Vec<Option<(f64, (f64, f64))>> = pairs
        .par_iter()
        .map(|&(u, v)| reduced_gap(&h, a, u, v).map(|g| (g, (u, v))))
        .collect();
    let (mut report, w) = TriangleReport::from_samples(gaps.into_iter(), opts.tol);
    report.witness = w.map(|(u, v)| Witness::Pair { u, v });
    report
}

#[derive(Debug, Clone, Serialize)]
pub struct MonotonicityReport {
    /// `h` is numerically nonincreasing on the samples.
    pub decreasing: bool,
    /// Largest rise `h(u_{k+1}) - h(u_k)` between consecutive samples.
    pub max_increase: f64,
    pub profile: Vec<(f64, f64)>,
}

/// Samples `h(u) = (1 - u^a)^(1/a) / H(u, 1)` on `[0, 0.99]`; a nonincreasing
/// `h` certifies the triangle inequality for `H^a`.
pub fn monotonicity_certificate(h: impl Fn(f64, f64) -> f64, a: f64, samples: usize) -> MonotonicityReport {
    let n = samples.max(2);
    let profile: Vec<(f64, f64)> = (0..n)
        .map(|k| 0.99 * k as f64 / (n - 1) as f64)
        .filter_map(|u| {
            let hv = h(u, 1.0);
            (hv.is_finite() && hv > 0.0).then(|| (u, (1.0 - u.powf(a)).powf(1.0 / a) / hv))
        })
        .collect();
    let mut max_increase = f64::NEG_INFINITY;
    let mut decreasing = true;
    for w in profile.windows(2) {
        let rise = w[1].1 - w[0].1;
        max_increase = max_increase.max(rise);
        if rise > TOL_MONO * (1.0 + w[0].1.abs()) {
            decreasing = false;
        }
    }
    MonotonicityReport { decreasing, max_increase, profile }
}

/// Checks that `f` is concave, vanishes only at 0 and is subadditive on the samples.
pub fn concave_transform_check(f: impl Fn(f64) -> f64, d_samples: &[f64]) -> bool {
    const TOL: f64 = 1e-12;
    if f(0.0).abs() > TOL {
        return false;
    }
    let vals: Vec<f64> = d_samples.iter().map(|&d| f(d)).collect();
    if d_samples.iter().zip(&vals).any(|(&d, &v)| d > 0.0 && v <= 0.0) {
        return false;
    }
    for (i, &x) in d_samples.iter().enumerate() {
        for (j, &y) in d_samples.iter().enumerate() {
            let slack = TOL * (1.0 + vals[i].abs() + vals[j].abs());
            if f(0.5 * (x + y)) < 0.5 * (vals[i] + vals[j]) - slack {
                return false;
            }
            if f(x + y) > vals[i] + vals[j] + slack {
                return false;
            }
        }
    }
    true
}

/// Largest `a` in `[a_lo, a_hi]` (to within `1e-3`) for which `H^a` passes the
/// costless triangle audit, or `None` if `a_lo` already fails.
pub fn max_metric_power(h: impl Fn(f64, f64) -> f64 + Sync, a_lo: f64, a_hi: f64, opts: &TriangleOptions) -> Option<f64> {
    assert!(0.0 < a_lo && a_lo < a_hi && a_hi <= 1.0, "need 0 < a_lo < a_hi <= 1");
    let pass = |a: f64| check_costless_triangle(&h, a, opts).passed;
    if !pass(a_lo) {
        return None;
    }
    if pass(a_hi) {
        return Some(a_hi);
    }
    let (mut lo, mut hi) = (a_lo, a_hi);
    while hi - lo > 1e-3 {
        let mid = 0.5 * (lo + hi);
        if pass(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(lo)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hellinger(r: f64, t: f64) -> f64 {
        (r.sqrt() - t.sqrt()).powi(2)
    }

    #[test]
    fn hellinger_square_root_is_a_metric() {
        let rep = check_costless_triangle(hellinger, 0.5, &TriangleOptions::default());
        assert!(rep.passed, "{rep:?}");
        assert!(rep.witness.is_none());
        assert_eq!(rep.tested + rep.skipped, 199 * 200 / 2 + 1000);
    }

    #[test]
    fn squared_distance_is_not_a_metric() {
        let rep = check_costless_triangle(|r: f64, t: f64| (r - t).powi(2), 1.0, &TriangleOptions::default());
        assert!(!rep.passed);
        assert!(matches!(rep.witness, Some(Witness::Pair { .. })));
        assert!(rep.worst_violation > 0.1);
    }

    #[test]
    fn infinite_boundary_value_fails_the_necessary_condition() {
        let h = |r: f64, t: f64| if r * t == 0.0 && r != t { f64::INFINITY } else { (r - t).abs() };
        let rep = check_costless_triangle(h, 1.0, &TriangleOptions::default());
        assert!(rep.necessary_condition_failed && !rep.passed);
    }

    #[test]
    fn certificate_for_matusita_is_constant() {
        let a: f64 = 0.5;
        let h = |r: f64, t: f64| (1.0 - 1.0 / a).exp2() * (r.powf(a) - t.powf(a)).abs().powf(1.0 / a);
        let k = monotonicity_certificate(h, a, 100);
        assert!(k.decreasing);
        assert!(k.profile.iter().all(|&(_, v)| (v - 2.0).abs() < 1e-9));
    }

    #[test]
    fn concave_transforms() {
        let d: Vec<f64> = (0..40).map(|i| 0.1 * i as f64).collect();
        assert!(concave_transform_check(f64::sqrt, &d));
        assert!(!concave_transform_check(|x| x * x, &d));
        assert!(!concave_transform_check(|x| x + 1.0, &d));
    }

    #[test]
    fn report_serializes_to_the_documented_shape() {
        let rep = check_costless_triangle(|r: f64, t: f64| (r - t).powi(2), 1.0, &TriangleOptions::default());
        let v = serde_json::to_value(&rep).unwrap();
        for key in ["passed", "worst_violation", "tested", "skipped"] {
            assert!(v.get(key).is_some());
        }
        assert!(v["witness"]["u"].is_number() && v["witness"]["v"].is_number());
    }
}
