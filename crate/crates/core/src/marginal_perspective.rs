//! The marginal perspective function
//! `H_F(r, t) = inf_{theta > 0} [F^(theta, r) + F^(theta, t)]`, where
//! `F^(theta, r) = r F(theta / r)` is the perspective of `F`.

use std::io::Write;

use rayon::prelude::*;

use crate::entropy::{EntropyDescriptor, Family};
use crate::error::{Error, Result};
use crate::extended::ExtendedValue;
use crate::optimize;
use crate::power_means::power_mean;

/// Relative bracket width for the minimization over `theta`.
pub const TOL_THETA: f64 = 1e-12;
/// Relative agreement required between successive boundary extrapolants.
pub const TOL_ENVELOPE: f64 = 1e-9;

fn xlogx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// Closed form of `H_F`, or `None` if the family has none (tabulated
/// entropies, reversed families without a named counterpart, boundary values of
/// double-power entropies with `p < 0`).
pub fn h_closed(f: &EntropyDescriptor, r: f64, t: f64) -> Option<ExtendedValue> {
    let fam = f.canonical_family()?;
    if r == t {
        return Some(ExtendedValue::ZERO);
    }
    let boundary = r == 0.0 || t == 0.0;
    let x = r.max(t);
    let v = match fam {
        Family::Indicator { a, b } => {
            if b == f64::INFINITY || a * r.max(t) <= b * r.min(t) {
                0.0
            } else {
                f64::INFINITY
            }
        }
        Family::ChiAlpha { alpha } => (r - t).abs().powf(alpha) / (r + t).powf(alpha - 1.0),
        Family::Matusita { a } => (1.0 - 1.0 / a).exp2() * (r.powf(a) - t.powf(a)).abs().powf(1.0 / a),
        Family::TotalVariationScaled { c } => c * (r - t).abs(),
        Family::PowerLike { p } => {
            if p == 1.0 {
                (r.sqrt() - t.sqrt()).powi(2)
            } else if p == 0.0 {
                xlogx(r) + xlogx(t) - (r + t) * (0.5 * (r + t)).ln()
            } else {
                (2.0 / p) * (power_mean(1.0, r, t) - power_mean(1.0 - p, r, t))
            }
        }
        Family::PowerLog { p } => {
            if boundary {
                if p == 1.0 {
                    x * std::f64::consts::LN_2
                } else {
                    f64::INFINITY
                }
            } else {
                let inner = r * t * (r.powf(p - 1.0) + t.powf(p - 1.0)) / (r + t);
                (r + t) * inner.ln() - p * (r * t.ln() + t * r.ln())
            }
        }
        Family::DoublePower { p, q } => {
            if boundary {
                if p > 1.0 {
                    (p - q) * x
                } else if p == 1.0 {
                    (1.0 - q) * (1.0 - (-q / (1.0 - q)).exp2()) * x
                } else {
                    return None;
                }
            } else {
                let l = (p * (r.powf(q - 1.0) + t.powf(q - 1.0)).ln()
                    - q * (r.powf(p - 1.0) + t.powf(p - 1.0)).ln())
                    / (p - q);
                (q - p) * (r * t * l.exp() - (r + t))
            }
        }
        Family::Tabulated(_) => return None,
    };
    Some(ExtendedValue::new(v))
}

/// `H_F(r, t)` by convex minimization over `theta`, for `r, t >= 0`.
///
/// On the boundary `r t = 0` the lower semicontinuous envelope is returned,
/// obtained as the limit of `H(r + eps, t + eps)` along `eps = 2^-k (r + t)`,
/// `k = 10..40`, with Aitken acceleration.
pub fn h_oracle(f: &EntropyDescriptor, r: f64, t: f64) -> ExtendedValue {
    if r == t {
        return ExtendedValue::ZERO;
    }
    if r > 0.0 && t > 0.0 {
        return ExtendedValue::new(h_interior(f, r, t));
    }
    boundary_envelope(f.coefficients().f0.is_infinite(), r + t, |eps| h_interior(f, r + eps, t + eps))
}

/// Closed form when available, oracle otherwise.
pub fn h_value(f: &EntropyDescriptor, r: f64, t: f64) -> ExtendedValue {
    h_closed(f, r, t).unwrap_or_else(|| h_oracle(f, r, t))
}

/// Interval of `theta` where both perspective terms can be finite, intersected
/// with `[min(r,t), max(r,t)]`.
pub(crate) fn theta_window(f: &EntropyDescriptor, r: f64, t: f64) -> Option<(f64, f64)> {
    let (dlo, dhi) = f.domain();
    let lo = r.min(t).max(dlo * r.max(t));
    let hi = r.max(t).min(dhi * r.min(t));
    if lo <= hi * (1.0 + 1e-15) {
        Some((lo.min(hi), hi))
    } else {
        None
    }
}

fn h_interior(f: &EntropyDescriptor, r: f64, t: f64) -> f64 {
    let Some((lo, hi)) = theta_window(f, r, t) else {
        return f64::INFINITY;
    };
    let objective = |theta: f64| f.perspective_f64(theta, r) + f.perspective_f64(theta, t);
    if lo == hi {
        return objective(lo);
    }
    optimize::scan_then_golden(objective, lo, hi, 16, true, TOL_THETA).value.max(0.0)
}

/// Limit of `g(eps)` as `eps -> 0` along `eps = 2^-k scale`, `k = 10..40`.
///
/// `diverges_to_inf` selects the answer when the sequence fails to settle.
pub(crate) fn boundary_envelope(diverges_to_inf: bool, scale: f64, g: impl Fn(f64) -> f64) -> ExtendedValue {
    let mut vals: Vec<f64> = Vec::with_capacity(31);
    let mut prev_aitken: Option<f64> = None;
    for k in 10..=40 {
        let v = g(scale * (-(k as f64)).exp2());
        vals.push(v);
        let n = vals.len();
        if v.is_infinite() {
            if n >= 3 && vals[n - 3..].iter().all(|x| x.is_infinite()) {
                return ExtendedValue::INFINITY;
            }
            continue;
        }
        if n < 2 || vals[n - 2].is_infinite() {
            continue;
        }
        if (v - vals[n - 2]).abs() <= TOL_ENVELOPE * (1.0 + v.abs()) {
            return ExtendedValue::new(v);
        }
        if n < 3 || vals[n - 3].is_infinite() {
            continue;
        }
        let (x0, x1, x2) = (vals[n - 3], vals[n - 2], v);
        let denom = x2 - 2.0 * x1 + x0;
        let ratio = (x2 - x1) / (x1 - x0);
        // Aitken only makes sense for a geometrically converging tail.
        if denom != 0.0 && ratio.is_finite() && ratio.abs() < 0.95 {
            let a = x2 - (x2 - x1).powi(2) / denom;
            if let Some(pa) = prev_aitken {
                if (a - pa).abs() <= TOL_ENVELOPE * (1.0 + a.abs()) {
                    return ExtendedValue::new(a);
                }
            }
            prev_aitken = Some(a);
        } else {
            prev_aitken = None;
        }
    }
    let n = vals.len();
    let last = vals[n - 1];
    let growing = n >= 3 && (last - vals[n - 2]) >= 0.95 * (vals[n - 2] - vals[n - 3]) && last > vals[n - 2];
    if diverges_to_inf && (growing || last.is_infinite()) {
        ExtendedValue::INFINITY
    } else {
        ExtendedValue::new(prev_aitken.unwrap_or(last))
    }
}

/// `H_F` bound to one entropy, dispatching to the closed form when it exists.
#[derive(Debug, Clone)]
pub struct MarginalPerspective {
    source: EntropyDescriptor,
    closed_form: bool,
}

impl MarginalPerspective {
    pub fn new(source: EntropyDescriptor) -> Self {
        let closed_form = source.canonical_family().is_some();
        MarginalPerspective { source, closed_form }
    }

    pub fn source(&self) -> &EntropyDescriptor {
        &self.source
    }

    pub fn has_closed_form(&self) -> bool {
        self.closed_form
    }

    pub fn eval(&self, r: f64, t: f64) -> ExtendedValue {
        if self.closed_form {
            h_value(&self.source, r, t)
        } else {
            h_oracle(&self.source, r, t)
        }
    }

    pub fn eval_f64(&self, r: f64, t: f64) -> f64 {
        self.eval(r, t).to_f64()
    }
}

/// Symmetric matrix `H(g_i, g_j)` over a sorted grid of at least two points.
pub fn h_grid(f: &EntropyDescriptor, grid: &[f64]) -> Result<Vec<Vec<ExtendedValue>>> {
    if grid.len() < 2 {
        return Err(Error::Usage(format!("grid needs at least 2 points, got {}", grid.len())));
    }
    if grid.iter().any(|g| !(g.is_finite() && *g >= 0.0)) || grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Usage("grid must be sorted, finite and nonnegative".into()));
    }
    let mp = MarginalPerspective::new(f.clone());
    let n = grid.len();
    let upper: Vec<Vec<ExtendedValue>> = (0..n)
        .into_par_iter()
        .map(|i| (i..n).map(|j| mp.eval(grid[i], grid[j])).collect())
        .collect();
    let mut m = vec![vec![ExtendedValue::ZERO; n]; n];
    for i in 0..n {
        for j in i..n {
            m[i][j] = upper[i][j - i];
            m[j][i] = upper[i][j - i];
        }
    }
    Ok(m)
}

/// Writes an `r,t,H` CSV table for a grid matrix.
pub fn write_grid_csv<W: Write>(grid: &[f64], matrix: &[Vec<ExtendedValue>], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["r", "t", "H"])?;
    for (i, row) in matrix.iter().enumerate() {
        for (j, h) in row.iter().enumerate() {
            w.write_record([grid[i].to_string(), grid[j].to_string(), h.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}
