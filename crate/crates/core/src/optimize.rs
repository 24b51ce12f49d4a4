//! One-dimensional search primitives shared by the oracles.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Minimizer and minimum value of a 1-D search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum {
    pub x: f64,
    pub value: f64,
}

impl Minimum {
    fn better(self, other: Minimum) -> Minimum {
        if other.value < self.value {
            other
        } else {
            self
        }
    }
}

/// Golden-section search for the minimum of a unimodal `f` on `[a, b]`.
///
/// Stops once the bracket is narrower than `rel_tol * (|a| + |b|)` (plus a tiny
/// absolute floor). The endpoints are evaluated too, so minima sitting on the
/// boundary are returned exactly.
pub fn golden_section(f: impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> Minimum {
    let (mut a, mut b) = if a <= b { (a, b) } else { (b, a) };
    let mut best = Minimum { x: a, value: f(a) }.better(Minimum { x: b, value: f(b) });
    if a == b {
        return best;
    }
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..400 {
        if b - a <= rel_tol * (a.abs() + b.abs()) + 1e-300 {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
    }
    best = best.better(Minimum { x: x1, value: f1 });
    best.better(Minimum { x: x2, value: f2 })
}

/// Golden-section in `ln x` for `0 < a < b`; suited to brackets spanning decades.
pub fn golden_section_log(f: impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> Minimum {
    debug_assert!(a > 0.0 && b >= a);
    let m = golden_section(|y| f(y.exp()), a.ln(), b.ln(), rel_tol);
    let x = m.x.exp().clamp(a, b);
    Minimum { x, value: m.value }
}

/// Coarse scan on `n` points followed by golden-section refinement around the
/// best sample. `log` selects logarithmic spacing (requires `lo > 0`).
///
/// The scan protects against mild non-unimodality, e.g. interpolation wiggles.
pub fn scan_then_golden(
    f: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    n: usize,
    log: bool,
    rel_tol: f64,
) -> Minimum {
    let n = n.max(3);
    let node = |i: usize| -> f64 {
        if i == 0 {
            return lo;
        }
        if i == n - 1 {
            return hi;
        }
        let u = i as f64 / (n - 1) as f64;
        if log {
            (lo.ln() + u * (hi.ln() - lo.ln())).exp()
        } else {
            lo + u * (hi - lo)
        }
    };
    let mut best_i = 0;
    let mut best = f64::INFINITY;
    for i in 0..n {
        let v = f(node(i));
        if v < best || (i == 0 && v.is_nan()) {
            best = v;
            best_i = i;
        }
    }
    let a = node(best_i.saturating_sub(1));
    let b = node((best_i + 1).min(n - 1));
    let refined = if log {
        golden_section_log(&f, a, b, rel_tol)
    } else {
        golden_section(&f, a, b, rel_tol)
    };
    Minimum { x: node(best_i), value: best }.better(refined)
}

/// Bisection for a root of a nondecreasing `g` on `[lo, hi]` with
/// `g(lo) <= 0 <= g(hi)`. Returns the midpoint of the final bracket.
pub fn bisect_increasing(g: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, rel_tol: f64) -> f64 {
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= rel_tol * (lo.abs() + hi.abs()) {
            break;
        }
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_interior_minimum() {
        let m = golden_section(|x| (x - 0.3).powi(2) + 1.0, -2.0, 5.0, 1e-12);
        assert!((m.x - 0.3).abs() < 1e-7);
        assert!((m.value - 1.0).abs() < 1e-14);
    }

    #[test]
    fn golden_returns_exact_endpoint() {
        let m = golden_section(|x| x, 1.0, 3.0, 1e-12);
        assert_eq!(m.x, 1.0);
        assert_eq!(m.value, 1.0);
    }

    #[test]
    fn log_golden_spans_decades() {
        let m = golden_section_log(|x| x + 1e-6 / x, 1e-9, 1e3, 1e-13);
        assert!((m.x - 1e-3).abs() < 1e-8);
    }

    #[test]
    fn scan_escapes_local_wiggle() {
        // Two wells; the scan must pick the deeper one.
        let f = |x: f64| ((x - 1.0) * (x - 4.0)).powi(2) - 0.1 * x;
        let m = scan_then_golden(f, 0.0, 5.0, 64, false, 1e-12);
        assert!((m.x - 4.0).abs() < 0.1);
    }

    #[test]
    fn bisection_solves_monotone_equation() {
        let r = bisect_increasing(|x| x.exp() - 2.0, 0.0, 2.0, 1e-15);
        assert!((r - 2f64.ln()).abs() < 1e-14);
    }
}
