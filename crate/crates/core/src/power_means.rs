//! Power means `M_p(r, t) = ((r^p + t^p) / 2)^(1/p)` of two nonnegative numbers.
//!
//! Conventions: `M_0` is the geometric mean, `M_{-inf}`/`M_{+inf}` are min/max,
//! and for `p < 0` the mean vanishes as soon as one argument does.

/// Below this `|p|` the log-domain expansion is used.
pub const P_SWITCH: f64 = 1e-6;

/// `M_p(r, t)` for `p` in `[-inf, +inf]` and `r, t >= 0`.
pub fn power_mean(p: f64, r: f64, t: f64) -> f64 {
    debug_assert!(r >= 0.0 && t >= 0.0, "power_mean needs nonnegative arguments");
    let (lo, hi) = if r <= t { (r, t) } else { (t, r) };
    if lo == hi {
        return lo;
    }
    if p == f64::INFINITY {
        return hi;
    }
    if p == f64::NEG_INFINITY {
        return lo;
    }
    if lo == 0.0 {
        // M_p(0, t) = t * 2^(-1/p) for p > 0, zero otherwise.
        return if p > 0.0 { hi * (-std::f64::consts::LN_2 / p).exp() } else { 0.0 };
    }
    if p == 0.0 {
        return (lo * hi).sqrt();
    }
    let ln_ratio = (lo / hi).ln();
    if p.abs() < P_SWITCH {
        let (lr, lt) = (r.ln(), t.ln());
        return (0.5 * (lr + lt) + p * (lr - lt).powi(2) / 8.0).exp();
    }
    if p > 0.0 {
        // hi * ((1 + (lo/hi)^p) / 2)^(1/p), via log1p/expm1 to keep small p accurate.
        let inner = (0.5 * (p * ln_ratio).exp_m1()).ln_1p();
        hi * (inner / p).exp()
    } else {
        let inner = (0.5 * (-p * ln_ratio).exp_m1()).ln_1p();
        lo * (inner / p).exp()
    }
}
