// Shared fixtures for the integration tests.
#![allow(dead_code)]

use etdiv::EntropyDescriptor;

/// Representatives of every family with a closed-form marginal perspective.
pub fn closed_form_families() -> Vec<EntropyDescriptor> {
    let mut v = vec![
        EntropyDescriptor::indicator(0.5, 2.0).unwrap(),
        EntropyDescriptor::indicator(0.0, 3.0).unwrap(),
    ];
    for a in [1.0, 1.5, 2.0, 3.0] {
        v.push(EntropyDescriptor::chi_alpha(a).unwrap());
    }
    for a in [0.25, 0.5, 1.0] {
        v.push(EntropyDescriptor::matusita(a).unwrap());
    }
    for p in [-2.0, -1.0, 0.0, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0] {
        v.push(EntropyDescriptor::power_like(p).unwrap());
    }
    for p in [1.0, 1.5, 2.0, 3.0] {
        v.push(EntropyDescriptor::power_log(p).unwrap());
    }
    for (p, q) in [(2.0, 0.5), (1.0, 0.5), (3.0, 1.0), (1.5, 0.25), (-1.0, 2.0), (-0.5, 1.0), (-2.0, 1.5)] {
        v.push(EntropyDescriptor::double_power(p, q).unwrap());
    }
    v
}

/// `n` points spread geometrically over `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

pub fn lin_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    a == b || (a - b).abs() <= tol * (1.0 + b.abs())
}
