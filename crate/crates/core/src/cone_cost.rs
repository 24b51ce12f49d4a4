//! Marginal perspective costs `H_c` with a transport term, the cone over a
//! finite metric space and the power-like cone costs `H_p` for `c = d^2`.

use std::f64::consts::FRAC_PI_2;
use std::io::Read;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::entropy::{EntropyDescriptor, Family};
use crate::error::{Error, Result};
use crate::extended::ExtendedValue;
use crate::marginal_perspective::boundary_envelope;
use crate::metric_check::{self, ConePointSample, TriangleOptions, TriangleReport, Witness};
use crate::optimize;
use crate::power_means::power_mean;

/// Points scanned before golden-section refinement, primal and dual.
pub const COST_SCAN: usize = 128;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiniteMetricSpace {
    d: Vec<Vec<f64>>,
}

impl FiniteMetricSpace {
    /// Validates symmetry, zero diagonal, positivity off the diagonal and the
    /// triangle inequality (to `1e-12` relative).
    pub fn new(d: Vec<Vec<f64>>) -> Result<Self> {
        let n = d.len();
        let bad = |msg: String| Err(Error::Usage(format!("not a metric: {msg}")));
        if n == 0 {
            return bad("empty space".into());
        }
        for (i, row) in d.iter().enumerate() {
            if row.len() != n {
                return bad(format!("row {i} has {} entries, expected {n}", row.len()));
            }
            if row[i] != 0.0 {
                return bad(format!("d({i},{i}) = {}", row[i]));
            }
            for (j, &x) in row.iter().enumerate() {
                if !x.is_finite() || x < 0.0 {
                    return bad(format!("d({i},{j}) = {x}"));
                }
                if x != d[j][i] {
                    return bad(format!("d({i},{j}) != d({j},{i})"));
                }
                if i != j && x == 0.0 {
                    return bad(format!("distinct points {i} and {j} at distance 0"));
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if d[i][k] > (d[i][j] + d[j][k]) * (1.0 + 1e-12) {
                        return bad(format!("triangle inequality fails for ({i},{j},{k})"));
                    }
                }
            }
        }
        Ok(FiniteMetricSpace { d })
    }

    pub fn single_point() -> Self {
        FiniteMetricSpace { d: vec![vec![0.0]] }
    }

    /// Euclidean distances between the given coordinates.
    pub fn from_points(points: &[Vec<f64>]) -> Result<Self> {
        let d = points
            .iter()
            .map(|p| {
                points
                    .iter()
                    .map(|q| p.iter().zip(q).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
                    .collect()
            })
            .collect();
        Self::new(d)
    }

    /// Path graph `0 - 1 - ... - (n-1)` with unit edges.
    pub fn path(n: usize) -> Result<Self> {
        Self::new((0..n).map(|i| (0..n).map(|j| (i as f64 - j as f64).abs()).collect()).collect())
    }

    /// Reads a square distance matrix, one comma-separated row per line
    /// (`#` comments and blank lines are ignored).
    pub fn from_csv_reader(reader: impl Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(reader);
        let mut d = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let row: Result<Vec<f64>> = rec
                .iter()
                .map(|x| x.parse::<f64>().map_err(|e| Error::Parse(format!("distance {x:?}: {e}"))))
                .collect();
            d.push(row?);
        }
        Self::new(d)
    }

    pub fn from_csv(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv_reader(std::fs::File::open(path)?)
    }

    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        Self::new(self.d.iter().map(|r| r.iter().map(|x| lambda * x).collect()).collect())
    }

    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.d[i][j]
    }
}

/// A point `(x_i, r)` of the cone; all points of radius 0 are identified.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ConePoint {
    pub point_index: usize,
    pub radius: f64,
}

impl PartialEq for ConePoint {
    fn eq(&self, other: &Self) -> bool {
        (self.radius == 0.0 && other.radius == 0.0)
            || (self.radius == other.radius && self.point_index == other.point_index)
    }
}

/// `H_c(r1, r2) = inf_{theta > 0} theta (R(r1/theta) + R(r2/theta) + c)` by
/// direct minimization over `theta in (0, max(r1, r2)]`.
///
/// `c = +inf` gives `F(0)(r1 + r2)`; boundary values are l.s.c. limits.
pub fn h_cost_primal(f: &EntropyDescriptor, c: f64, r1: f64, r2: f64) -> ExtendedValue {
    assert!(c >= 0.0, "cost must be nonnegative");
    if c == f64::INFINITY {
        return f.coefficients().f0.scale(r1 + r2);
    }
    if r1 == 0.0 && r2 == 0.0 {
        return ExtendedValue::ZERO;
    }
    if r1 > 0.0 && r2 > 0.0 {
        return ExtendedValue::new(primal_interior(f, c, r1, r2));
    }
    boundary_envelope(f.coefficients().f0.is_infinite(), r1 + r2, |eps| primal_interior(f, c, r1 + eps, r2 + eps))
}

fn primal_interior(f: &EntropyDescriptor, c: f64, r1: f64, r2: f64) -> f64 {
    let (lo_r, hi_r) = (r1.min(r2), r1.max(r2));
    let (dlo, dhi) = f.domain();
    let hi = hi_r.min(dhi * lo_r);
    let lo = dlo * hi_r;
    if lo > hi * (1.0 + 1e-15) {
        return f64::INFINITY;
    }
    let objective = |theta: f64| {
        let v = f.perspective_f64(theta, r1) + f.perspective_f64(theta, r2);
        if v.is_infinite() {
            v
        } else {
            v + c * theta
        }
    };
    if lo >= hi {
        return objective(hi).max(0.0);
    }
    // The minimizer may sit far below min(r1, r2) when c is large.
    let scan_lo = if lo > 0.0 { lo } else { hi * 1e-200 };
    let mut best = optimize::scan_then_golden(objective, scan_lo, hi, COST_SCAN, true, 1e-13).value;
    if lo == 0.0 {
        best = best.min(objective(0.0));
    }
    best.max(0.0)
}

/// `H_c` from the dual formula
/// `sup { r1 psi1 + r2 psi2 : R*(psi1) + R*(psi2) <= c }`.
///
/// The active constraint is parameterized by `y = R*(psi1)`, so that
/// `psi_i = (R*)^-1` of `y` and `c - y`; the resulting concave function of `y`
/// is scanned and refined by golden-section.
pub fn h_cost_dual(f: &EntropyDescriptor, c: f64, r1: f64, r2: f64) -> ExtendedValue {
    assert!(c >= 0.0, "cost must be nonnegative");
    let coeffs = f.coefficients();
    if r1 == 0.0 && r2 == 0.0 {
        return ExtendedValue::ZERO;
    }
    if c == f64::INFINITY {
        return coeffs.f0.scale(r1 + r2);
    }
    let rev = f.reverse();
    // Range of R*: (-R(0), aff R_inf) = (-F'_inf, -F'_0).
    let lower = -coeffs.fprime_inf.to_f64();
    let upper = -coeffs.fprime0;
    let f0 = coeffs.f0.to_f64();
    let psi = |y: f64| -> f64 {
        if y >= upper {
            f0
        } else if y <= lower {
            -coeffs.aff_inf
        } else {
            rev.conjugate_inverse(y).unwrap_or(if y > 0.0 { f0 } else { -coeffs.aff_inf })
        }
    };
    let term = |r: f64, p: f64| if r == 0.0 { 0.0 } else { r * p };
    let value = |y: f64| term(r1, psi(y)) + term(r2, psi(c - y));
    let (ylo, yhi) = (lower.max(c - upper), upper.min(c - lower));
    if ylo >= yhi {
        // The constraint is slack at psi1 = psi2 = F(0).
        return coeffs.f0.scale(r1 + r2);
    }
    let neg = |y: f64| {
        let v = value(y);
        if v.is_nan() {
            f64::INFINITY
        } else {
            -v
        }
    };
    let mut span = 1.0 + c;
    let mut best = f64::NEG_INFINITY;
    for _ in 0..60 {
        let (a, b) = (ylo.max(0.5 * c - span), yhi.min(0.5 * c + span));
        let m = optimize::scan_then_golden(neg, a, b, COST_SCAN, false, 1e-14);
        best = best.max(-m.value);
        let near_cut = |edge: f64, bound: f64| edge != bound && (m.x - edge).abs() <= 0.02 * (b - a);
        if !(near_cut(a, ylo) || near_cut(b, yhi)) {
            break;
        }
        span *= 4.0;
    }
    ExtendedValue::new(best.max(0.0))
}

/// `H_c` using the power-like closed form when available, the primal otherwise.
pub fn h_cost(f: &EntropyDescriptor, c: f64, r1: f64, r2: f64) -> ExtendedValue {
    match f.canonical_family() {
        Some(Family::PowerLike { p }) if c.is_finite() => h_p_cone(p, c.sqrt(), r1, r2),
        _ => h_cost_primal(f, c, r1, r2),
    }
}

fn xlogx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// Closed form of `H_c` for `F = U_p` and `c = d^2`.
pub fn h_p_cone(p: f64, d: f64, r: f64, t: f64) -> ExtendedValue {
    debug_assert!(r >= 0.0 && t >= 0.0 && d >= 0.0);
    let d2 = d * d;
    let v = if p == 1.0 {
        2.0 * (power_mean(1.0, r, t) - power_mean(0.0, r, t) * (-0.5 * d2).exp())
    } else if p == 0.0 {
        xlogx(r) + xlogx(t) - (r + t) * ((r + t) / (2.0 + d2)).ln()
    } else {
        let base = (1.0 + (1.0 - p) * d2 / 2.0).max(0.0);
        // 1 - base^(p/(p-1)), kept accurate for small d.
        let one_minus = if base == 0.0 {
            1.0
        } else {
            -((p / (p - 1.0)) * (0.5 * (1.0 - p) * d2).ln_1p()).exp_m1()
        };
        let m1 = power_mean(1.0, r, t);
        let mq = power_mean(1.0 - p, r, t);
        (2.0 / p) * ((m1 - mq) + mq * one_minus)
    };
    if r + t == 0.0 {
        return ExtendedValue::ZERO;
    }
    ExtendedValue::new(v)
}

/// `M_1(r, t) - M_{1-p}(r, t) cos(d ^ pi/2)`, for `p >= 1`.
pub fn h_bar_p(p: f64, d: f64, r: f64, t: f64) -> f64 {
    power_mean(1.0, r, t) - power_mean(1.0 - p, r, t) * d.min(FRAC_PI_2).cos()
}

/// `f_p(d) = arccos[(1 - (p-1) d^2 / 2)_+^(p/(p-1))]`, and `arccos(e^{-d^2/2})` at `p = 1`.
pub fn metric_transform(p: f64, d: f64) -> f64 {
    let c = if p == 1.0 {
        (-0.5 * d * d).exp()
    } else {
        (1.0 - (p - 1.0) * d * d / 2.0).max(0.0).powf(p / (p - 1.0))
    };
    c.clamp(-1.0, 1.0).acos()
}

/// The natural cone distance `sqrt(r1^2 + r2^2 - 2 r1 r2 cos(d ^ pi))`.
pub fn cone_metric(d: f64, r1: f64, r2: f64) -> f64 {
    (r1 * r1 + r2 * r2 - 2.0 * r1 * r2 * d.min(std::f64::consts::PI).cos()).max(0.0).sqrt()
}

/// `sqrt(H_p)` between two cone points.
pub fn cone_distance(p: f64, space: &FiniteMetricSpace, a: ConePoint, b: ConePoint) -> f64 {
    h_p_cone(p, space.dist(a.point_index, b.point_index), a.radius, b.radius).to_f64().sqrt()
}

/// A three-point configuration `(x1, r), (x2, s), (x3, t)` on which
/// `sqrt(H_p(1,3)) > sqrt(H_p(1,2)) + sqrt(H_p(2,3))`.
#[derive(Debug, Clone, Serialize)]
pub struct Counterexample {
    pub p: f64,
    pub r: f64,
    pub s: f64,
    pub t: f64,
    pub d12: f64,
    pub d23: f64,
    pub d13: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
}

impl Counterexample {
    fn evaluate(p: f64, [r, s, t]: [f64; 3], [d12, d23, d13]: [f64; 3]) -> Self {
        let sq = |d: f64, a: f64, b: f64| h_p_cone(p, d, a, b).to_f64().sqrt();
        let lhs = sq(d13, r, t);
        let rhs = sq(d12, r, s) + sq(d23, s, t);
        Counterexample { p, r, s, t, d12, d23, d13, lhs, rhs, margin: lhs - rhs }
    }
}

/// Searches a violation of the cone triangle inequality for `p < 1`.
pub fn counterexample_p_below_one(p: f64) -> Result<Counterexample> {
    if !(p < 1.0) || !p.is_finite() {
        return Err(Error::Usage(format!("counterexamples exist only for p < 1, got {p}")));
    }
    const MIN_MARGIN: f64 = 1e-9;
    if p < 0.0 {
        // 0 < r < s < t with x2 = x3 and x1 far away.
        let mut d = 10.0;
        for _ in 0..60 {
            let ce = Counterexample::evaluate(p, [0.1, 0.5, 1.0], [d, 0.0, d]);
            if ce.margin > MIN_MARGIN {
                return Ok(ce);
            }
            d *= 2.0;
        }
    } else if p <= 0.5 {
        // r = s = 0 (the apex), t > 0, with x2 = x3 and x1 at positive distance.
        let mut d = 1.0;
        for _ in 0..60 {
            let ce = Counterexample::evaluate(p, [0.0, 0.0, 1.0], [d, 0.0, d]);
            if ce.margin > MIN_MARGIN {
                return Ok(ce);
            }
            d *= 2.0;
        }
    } else {
        // One base point: the costless witness of the audit on H_{U_p}.
        let opts = TriangleOptions::default();
        let rep = metric_check::check_costless_triangle(|r, t| h_p_cone(p, 0.0, r, t).to_f64(), 0.5, &opts);
        if let Some(Witness::Pair { u, v }) = rep.witness {
            let ce = Counterexample::evaluate(p, [u, v, 1.0], [0.0, 0.0, 0.0]);
            if ce.margin > MIN_MARGIN {
                return Ok(ce);
            }
        }
    }
    Err(Error::SearchFailed(format!("no violating configuration found for p = {p}")))
}

#[derive(Debug, Clone, Copy)]
pub struct ConeTriangleOptions {
    pub samples: usize,
    pub seed: u64,
    pub tol: f64,
    /// Include the deterministic corner-case sweep.
    pub stress: bool,
}

impl Default for ConeTriangleOptions {
    fn default() -> Self {
        ConeTriangleOptions { samples: 10_000, seed: metric_check::DEFAULT_SEED, tol: metric_check::TOL_TRI, stress: true }
    }
}

const STRESS_RADII: [f64; 8] = [0.0, 1e-9, 1e-3, 0.3, 0.5, 1.0, 2.0, 10.0];
const STRESS_SCALES: [f64; 5] = [0.05, 0.3, 1.0, 3.0, 10.0];

/// Worst of the three orientations of the triangle inequality for `sqrt(H_p)`
/// on a triple, with radii normalized by their maximum.
fn triple_gap(p: f64, space: &FiniteMetricSpace, idx: [usize; 3], radii: [f64; 3]) -> f64 {
    let m = radii.iter().cloned().fold(0.0, f64::max);
    if m == 0.0 {
        return f64::NEG_INFINITY;
    }
    let r = radii.map(|x| x / m);
    let dist = |a: usize, b: usize| h_p_cone(p, space.dist(idx[a], idx[b]), r[a], r[b]).to_f64().sqrt();
    let (d01, d12, d02) = (dist(0, 1), dist(1, 2), dist(0, 2));
    (d02 - d01 - d12).max(d01 - d02 - d12).max(d12 - d01 - d02)
}

/// Random and corner-case audit of the triangle inequality for `sqrt(H_p)`
/// on the cone over `space`.
pub fn check_cone_triangle(p: f64, space: &FiniteMetricSpace, opts: &ConeTriangleOptions) -> Result<TriangleReport> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::Usage(format!("the cone audit needs p >= 1, got {p}")));
    }
    let n = space.len();
    type Sample = Option<(f64, ([usize; 3], [f64; 3], f64))>;
    const CHUNK: usize = 1024;
    let chunks = opts.samples.div_ceil(CHUNK);
    let random: Vec<Sample> = (0..chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(c as u64 + 1);
            let count = CHUNK.min(opts.samples - c * CHUNK);
            let mut out = Vec::with_capacity(count);
            for _ in 0..count {
                let idx = [0; 3].map(|_| rng.random_range(0..n));
                let radii = [0.0; 3].map(|_| {
                    if rng.random::<f64>() < 0.1 {
                        0.0
                    } else {
                        10f64.powf(rng.random_range(-3.0..3.0))
                    }
                });
                out.push(Some((triple_gap(p, space, idx, radii), (idx, radii, 1.0))));
            }
            out
        })
        .collect();
    let mut stress: Vec<Sample> = Vec::new();
    if opts.stress {
        let scaled: Vec<(f64, FiniteMetricSpace)> =
            STRESS_SCALES.iter().map(|&l| Ok((l, space.scaled(l)?))).collect::<Result<_>>()?;
        let triples: Vec<[usize; 3]> = (0..n * n * n).map(|k| [k / (n * n), (k / n) % n, k % n]).collect();
        stress = scaled
            .par_iter()
            .flat_map_iter(|(l, sp)| {
                let mut out = Vec::new();
                for &idx in &triples {
                    for &a in &STRESS_RADII {
                        for &b in &STRESS_RADII {
                            for &c in &STRESS_RADII {
                                let radii = [a, b, c];
                                out.push(Some((triple_gap(p, sp, idx, radii), (idx, radii, *l))));
                            }
                        }
                    }
                }
                out
            })
            .collect();
    }
    let (mut report, w) = TriangleReport::from_samples(random.into_iter().chain(stress), opts.tol);
    report.witness = w.map(|(idx, radii, _)| Witness::Triple {
        points: [0, 1, 2].map(|k| ConePointSample { point: idx[k], radius: radii[k] }),
    });
    Ok(report)
}

/// `theta_p(r, t) = M_{1-p}(r, t) / M_0(r, t)`, with `theta(0, 0) = 1` and
/// `theta = 0` when exactly one argument vanishes (`p > 1`).
pub fn theta_p(p: f64, r: f64, t: f64) -> f64 {
    if r == t {
        return 1.0;
    }
    let g = power_mean(0.0, r, t);
    if g == 0.0 {
        return 0.0;
    }
    power_mean(1.0 - p, r, t) / g
}

fn final_lhs(p: f64, u: f64) -> f64 {
    let g = power_mean(0.0, u, 1.0);
    (1.0 + u.sqrt()).powi(2) * (g - power_mean(-1.0, u, 1.0)) / (g - power_mean(1.0 - p, u, 1.0))
}

fn final_rhs(p: f64, v: f64) -> f64 {
    v.sqrt() * (1.0 + 4.0 * v) / (power_mean(0.0, 1.0, v) - power_mean(1.0 - p, 1.0, v))
}

#[derive(Debug, Clone, Serialize)]
pub struct FinalInequalityReport {
    pub p: f64,
    pub holds: bool,
    pub sup_lhs: f64,
    pub argsup_u: f64,
    pub inf_rhs: f64,
    /// The supremum `4 / (p - 1)` expected for the left side.
    pub claimed_sup: f64,
    pub tested: usize,
}

/// Audits `LHS(u) <= RHS(v)` for every `u` in `u_grid` (in `(0,1)`) and `v` in
/// `v_grid` (in `(1, inf)`).
pub fn final_inequality_check(p: f64, u_grid: &[f64], v_grid: &[f64]) -> Result<FinalInequalityReport> {
    if !(p > 1.0) {
        return Err(Error::Usage(format!("the final inequality needs p > 1, got {p}")));
    }
    if u_grid.iter().any(|&u| !(u > 0.0 && u < 1.0)) || v_grid.iter().any(|&v| !(v > 1.0 && v.is_finite())) {
        return Err(Error::Usage("need u in (0, 1) and v in (1, inf)".into()));
    }
    let (argsup_u, sup_lhs) = u_grid
        .iter()
        .map(|&u| (u, final_lhs(p, u)))
        .fold((f64::NAN, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
    let inf_rhs = v_grid.iter().map(|&v| final_rhs(p, v)).fold(f64::INFINITY, f64::min);
    Ok(FinalInequalityReport {
        p,
        holds: sup_lhs <= inf_rhs,
        sup_lhs,
        argsup_u,
        inf_rhs,
        claimed_sup: 4.0 / (p - 1.0),
        tested: u_grid.len() * v_grid.len(),
    })
}
