//! The symmetrization maps `T_1(F)(s) = H_F(1, s)` and `T_a = 2^(1/a - 1) T_1`
//! acting on symmetric entropies (`F(s) = s F(1/s)`) sampled on `[1, s_max]`.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::entropy::EntropyDescriptor;
use crate::error::{Error, Result};
use crate::extended::ExtendedValue;
use crate::marginal_perspective::h_value;
use crate::optimize;

pub const DEFAULT_NODES: usize = 512;
pub const DEFAULT_S_MAX: f64 = 64.0;
/// Candidates scanned per node before golden-section refinement.
pub const THETA_SCAN: usize = 64;

/// A convex function on `[1, s_max]`, piecewise linear in `(ln s, F)`.
///
/// Below `s = 1` it is extended by `F(s) = s F(1/s)`; above `s_max` it is `+inf`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    s_max: f64,
    step: f64,
    nodes: Vec<f64>,
    values: Vec<f64>,
}

impl SampledFunction {
    /// Samples `f` on `n` log-spaced nodes of `[1, s_max]`; `f(1)` is forced to 0.
    pub fn from_fn(f: impl Fn(f64) -> f64 + Sync, s_max: f64, n: usize) -> Result<Self> {
        if !(s_max > 1.0 && s_max.is_finite()) || n < 2 {
            return Err(Error::Usage(format!("need s_max > 1 and n >= 2, got {s_max}, {n}")));
        }
        let step = s_max.ln() / (n - 1) as f64;
        let nodes: Vec<f64> = (0..n)
            .map(|i| if i == n - 1 { s_max } else { (step * i as f64).exp() })
            .collect();
        let values: Vec<f64> = nodes
            .par_iter()
            .enumerate()
            .map(|(i, &s)| if i == 0 { 0.0 } else { f(s) })
            .collect();
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| v.is_nan() || **v < 0.0) {
            return Err(Error::Usage(format!("sampled value {v} at s = {} is not in [0, inf]", nodes[i])));
        }
        Ok(SampledFunction { s_max, step, nodes, values })
    }

    /// Samples a symmetric entropy on the default grid.
    pub fn from_entropy(f: &EntropyDescriptor) -> Result<Self> {
        Self::from_fn(|s| f.eval_f64(s), DEFAULT_S_MAX, DEFAULT_NODES)
    }

    /// `s -> H_F(1, s)`, which is symmetric for any entropy `F`.
    pub fn symmetrized(f: &EntropyDescriptor) -> Result<Self> {
        Self::from_fn(|s| h_value(f, 1.0, s).to_f64(), DEFAULT_S_MAX, DEFAULT_NODES)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn s_max(&self) -> f64 {
        self.s_max
    }

    pub fn values(&self) -> Vec<ExtendedValue> {
        self.values.iter().map(|&v| ExtendedValue::new(v)).collect()
    }

    pub fn raw_values(&self) -> &[f64] {
        &self.values
    }

    fn with_values(&self, values: Vec<f64>) -> Self {
        SampledFunction { values, ..self.clone() }
    }

    pub fn eval(&self, s: f64) -> ExtendedValue {
        ExtendedValue::new(self.eval_f64(s))
    }

    pub fn eval_f64(&self, s: f64) -> f64 {
        self.eval_power(s, 1.0)
    }

    /// For `a = 1`, the plain scheme. For `a < 1`, interpolates `F^a` linearly in
    /// `s^a` and returns the `1/a` power, so that `c |s^a - 1|^(1/a)` is
    /// reproduced exactly between nodes.
    pub fn eval_power(&self, s: f64, a: f64) -> f64 {
        if s < 1.0 {
            if s <= 0.0 {
                return f64::INFINITY;
            }
            let v = self.eval_power(1.0 / s, a);
            return if v.is_infinite() { v } else { s * v };
        }
        if s >= self.s_max {
            return if s == self.s_max { self.values[self.values.len() - 1] } else { f64::INFINITY };
        }
        let x = s.ln() / self.step;
        let i = (x.floor() as usize).min(self.nodes.len() - 2);
        let w = (x - i as f64).clamp(0.0, 1.0);
        let (v0, v1) = (self.values[i], self.values[i + 1]);
        if w == 0.0 {
            return v0;
        }
        if w == 1.0 {
            return v1;
        }
        if v0.is_infinite() || v1.is_infinite() {
            return f64::INFINITY;
        }
        if a == 1.0 {
            return (1.0 - w) * v0 + w * v1;
        }
        let (x0, x1) = (self.nodes[i].powf(a), self.nodes[i + 1].powf(a));
        let w = ((s.powf(a) - x0) / (x1 - x0)).clamp(0.0, 1.0);
        ((1.0 - w) * v0.powf(a) + w * v1.powf(a)).powf(1.0 / a)
    }

    /// Largest drop of the slope in `s` between consecutive finite segments.
    pub fn convexity_defect(&self) -> f64 {
        let slopes: Vec<f64> = self
            .nodes
            .windows(2)
            .zip(self.values.windows(2))
            .filter(|(_, v)| v[0].is_finite() && v[1].is_finite())
            .map(|(s, v)| (v[1] - v[0]) / (s[1] - s[0]))
            .collect();
        slopes.windows(2).map(|w| (w[0] - w[1]).max(0.0)).fold(0.0, f64::max)
    }

    /// `sup |self - other|` over nodes in `[1, upto]`; `inf` if finiteness differs.
    pub fn sup_distance(&self, other: &SampledFunction, upto: f64) -> f64 {
        self.nodes
            .iter()
            .zip(self.values.iter().zip(&other.values))
            .filter(|(s, _)| **s <= upto * (1.0 + 1e-12))
            .map(|(_, (a, b))| node_gap(*a, *b))
            .fold(0.0, f64::max)
    }

    /// `sup |F(s) - g(s)|` over nodes in `[1, upto]`.
    pub fn sup_residual(&self, g: impl Fn(f64) -> f64, upto: f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.values)
            .filter(|(s, _)| **s <= upto * (1.0 + 1e-12))
            .map(|(&s, &v)| node_gap(v, g(s)))
            .fold(0.0, f64::max)
    }
}

fn node_gap(a: f64, b: f64) -> f64 {
    match (a.is_infinite(), b.is_infinite()) {
        (true, true) => 0.0,
        (false, false) => (a - b).abs(),
        _ => f64::INFINITY,
    }
}

fn check_a(a: f64) -> Result<()> {
    if a > 0.0 && a <= 1.0 {
        Ok(())
    } else {
        Err(Error::Usage(format!("the exponent a must lie in (0, 1], got {a}")))
    }
}

/// `T_a(F)(s) = 2^(1/a - 1) min_{theta in [1, s]} F(theta) + theta F(s / theta)`,
/// evaluated at every node. Between nodes `F` is read through
/// [`SampledFunction::eval_power`] with the same `a`.
pub fn apply_t(f: &SampledFunction, a: f64) -> Result<SampledFunction> {
    check_a(a)?;
    let factor = (1.0 / a - 1.0).exp2();
    let values: Vec<f64> = f
        .nodes
        .par_iter()
        .enumerate()
        .map(|(i, &s)| {
            if i == 0 {
                return 0.0;
            }
            let objective = |theta: f64| {
                let x = f.eval_power(theta, a);
                let y = f.eval_power(s / theta, a);
                if x.is_infinite() || y.is_infinite() {
                    f64::INFINITY
                } else {
                    x + theta * y
                }
            };
            let m = optimize::scan_then_golden(objective, 1.0, s, THETA_SCAN, true, 1e-12);
            if m.value.is_infinite() {
                f64::INFINITY
            } else {
                factor * m.value.max(0.0)
            }
        })
        .collect();
    Ok(f.with_values(values))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Constant,
    Decreasing,
    Increasing,
    Mixed,
}

impl Direction {
    fn merge(self, other: Direction) -> Direction {
        use Direction::*;
        match (self, other) {
            (Constant, d) | (d, Constant) => d,
            (a, b) if a == b => a,
            _ => Mixed,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct IterateOptions {
    pub max_iters: usize,
    /// Stop when `sup|F_{n+1} - F_n| / max(1, sup|F_n|) < tol`.
    pub tol: f64,
    pub keep_trace: bool,
}

impl Default for IterateOptions {
    fn default() -> Self {
        IterateOptions { max_iters: 500, tol: 1e-8, keep_trace: false }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IterationReport {
    pub iterations: usize,
    pub converged: bool,
    pub sup_changes: Vec<f64>,
    /// Nodewise direction of every step, merged over the run.
    pub direction: Direction,
    /// `c` in `c |s^a - 1|^(1/a)`, read off the limit at the node nearest `s = 2`.
    pub fitted_c: f64,
    /// Values after each iteration (iteration 0 is the input).
    #[serde(skip)]
    pub trace: Option<Vec<Vec<f64>>>,
}

fn step_direction(old: &[f64], new: &[f64]) -> Direction {
    let (mut up, mut down) = (false, false);
    for (&x, &y) in old.iter().zip(new) {
        if x.is_infinite() && y.is_infinite() {
            continue;
        }
        let slack = 1e-12 * (1.0 + x.abs().min(y.abs()));
        if y > x + slack {
            up = true;
        }
        if y < x - slack {
            down = true;
        }
    }
    match (up, down) {
        (false, false) => Direction::Constant,
        (false, true) => Direction::Decreasing,
        (true, false) => Direction::Increasing,
        (true, true) => Direction::Mixed,
    }
}

fn relative_change(old: &[f64], new: &[f64]) -> f64 {
    let scale = old.iter().filter(|v| v.is_finite()).fold(1.0f64, |m, v| m.max(v.abs()));
    old.iter().zip(new).map(|(&a, &b)| node_gap(a, b)).fold(0.0, f64::max) / scale
}

/// Repeats [`apply_t`] until the relative sup change drops below `opts.tol`.
pub fn iterate_t(f: &SampledFunction, a: f64, opts: IterateOptions) -> Result<(SampledFunction, IterationReport)> {
    check_a(a)?;
    let mut cur = f.clone();
    let mut sup_changes = Vec::new();
    let mut direction = Direction::Constant;
    let mut trace = opts.keep_trace.then(|| vec![cur.values.clone()]);
    let mut converged = false;
    for _ in 0..opts.max_iters {
        let next = apply_t(&cur, a)?;
        let change = relative_change(&cur.values, &next.values);
        direction = direction.merge(step_direction(&cur.values, &next.values));
        sup_changes.push(change);
        if let Some(t) = trace.as_mut() {
            t.push(next.values.clone());
        }
        cur = next;
        if change < opts.tol {
            converged = true;
            break;
        }
    }
    let k = cur.nodes.iter().map(|s| (s - 2.0).abs()).enumerate().min_by(|x, y| x.1.total_cmp(&y.1)).map_or(1, |m| m.0);
    let fitted_c = cur.values[k] / matusita(a, cur.nodes[k]);
    let report = IterationReport { iterations: sup_changes.len(), converged, sup_changes, direction, fitted_c, trace };
    Ok((cur, report))
}

/// Writes an `iter,s,value` CSV from a report with a trace.
pub fn write_trace_csv<W: Write>(f: &SampledFunction, report: &IterationReport, out: W) -> Result<()> {
    let trace = report
        .trace
        .as_ref()
        .ok_or_else(|| Error::Usage("iteration was run without keep_trace".into()))?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["iter", "s", "value"])?;
    for (k, vals) in trace.iter().enumerate() {
        for (s, v) in f.nodes.iter().zip(vals) {
            w.write_record([k.to_string(), s.to_string(), ExtendedValue::new(*v).to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `|s^a - 1|^(1/a)`.
pub fn matusita(a: f64, s: f64) -> f64 {
    (s.powf(a) - 1.0).abs().powf(1.0 / a)
}

fn check_sandwich(a: f64, b: f64, c: f64) -> Result<()> {
    check_a(a)?;
    if b > 1.0 && c > 0.0 && b.is_finite() && c.is_finite() {
        Ok(())
    } else {
        Err(Error::Usage(format!("need b > 1 and c > 0, got b = {b}, c = {c}")))
    }
}

/// `c |s^a - 1|^(1/a)` on `[1/b, b]`, `+inf` elsewhere.
pub fn sandwich_upper_value(a: f64, b: f64, c: f64, s: f64) -> f64 {
    if s >= 1.0 / b && s <= b {
        c * matusita(a, s)
    } else {
        f64::INFINITY
    }
}

/// `c |s^a - 1|^(1/a)` on `[1, b]`, continued linearly with the left slope at `b`.
/// Values for `s < 1` follow from the symmetric extension.
pub fn sandwich_lower_value(a: f64, b: f64, c: f64, s: f64) -> f64 {
    if s < 1.0 {
        return s * sandwich_lower_value(a, b, c, 1.0 / s);
    }
    if s <= b {
        return c * matusita(a, s);
    }
    let slope = c * (b.powf(a) - 1.0).powf(1.0 / a - 1.0) * b.powf(a - 1.0);
    c * matusita(a, b) + slope * (s - b)
}

pub fn make_sandwich_upper(a: f64, b: f64, c: f64) -> Result<SampledFunction> {
    check_sandwich(a, b, c)?;
    SampledFunction::from_fn(|s| sandwich_upper_value(a, b, c, s), DEFAULT_S_MAX, DEFAULT_NODES)
}

pub fn make_sandwich_lower(a: f64, b: f64, c: f64) -> Result<SampledFunction> {
    check_sandwich(a, b, c)?;
    SampledFunction::from_fn(|s| sandwich_lower_value(a, b, c, s), DEFAULT_S_MAX, DEFAULT_NODES)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(f: impl Fn(f64) -> f64 + Sync) -> SampledFunction {
        SampledFunction::from_fn(f, DEFAULT_S_MAX, DEFAULT_NODES).unwrap()
    }

    #[test]
    fn interpolation_and_extension() {
        let f = sample(|s| 3.0 * (s - 1.0));
        assert_eq!(f.eval_f64(1.0), 0.0);
        assert!((f.eval_f64(64.0) - 189.0).abs() < 1e-12);
        assert_eq!(f.eval_f64(65.0), f64::INFINITY);
        // Symmetric extension: s F(1/s) = 3 (1 - s).
        assert!((f.eval_f64(0.5) - 1.5).abs() < 0.01);
        assert!(f.convexity_defect() < 1e-9);
    }

    #[test]
    fn infinite_nodes_block_segments() {
        let f = sample(|s| if s <= 2.0 { s - 1.0 } else { f64::INFINITY });
        let last_finite = f.nodes().iter().rposition(|&s| s <= 2.0).unwrap();
        let s0 = f.nodes()[last_finite];
        assert!(f.eval_f64(s0).is_finite());
        assert!(f.eval_f64(0.5 * (s0 + f.nodes()[last_finite + 1])).is_infinite());
    }

    #[test]
    fn total_variation_is_fixed() {
        let f = sample(|s| 2.5 * (s - 1.0));
        let g = apply_t(&f, 1.0).unwrap();
        assert!(g.sup_distance(&f, DEFAULT_S_MAX) < 1e-10);
        assert_eq!(g.eval_f64(1.0), 0.0);
    }

    #[test]
    fn matusita_is_fixed_by_its_own_map() {
        let f = sample(|s| matusita(0.5, s));
        let g = apply_t(&f, 0.5).unwrap();
        assert!(g.sup_distance(&f, 16.0) < 1e-3, "{}", g.sup_distance(&f, 16.0));
    }

    #[test]
    fn trivial_fixed_points() {
        let zero = sample(|_| 0.0);
        assert_eq!(apply_t(&zero, 0.7).unwrap(), zero);
        let ind = sample(|s| if s == 1.0 { 0.0 } else { f64::INFINITY });
        assert_eq!(apply_t(&ind, 0.4).unwrap(), ind);
    }

    #[test]
    fn sandwich_examples() {
        assert_eq!(sandwich_upper_value(1.0, 2.0, 1.0, 3.0), f64::INFINITY);
        assert_eq!(sandwich_lower_value(1.0, 2.0, 1.0, 1.5), 0.5);
        assert_eq!(sandwich_lower_value(1.0, 2.0, 1.0, 4.0), 3.0);
        let lo = make_sandwich_lower(0.5, 3.0, 2.0).unwrap();
        assert!(lo.raw_values().iter().all(|v| v.is_finite()));
        assert!(lo.convexity_defect() < 1e-9);
        assert!(make_sandwich_upper(0.5, 1.0, 1.0).is_err());
    }

    #[test]
    fn trace_csv_shape() {
        let f = SampledFunction::from_fn(|s| s - 1.0, 4.0, 3).unwrap();
        let opts = IterateOptions { keep_trace: true, ..Default::default() };
        let (_, rep) = iterate_t(&f, 1.0, opts).unwrap();
        assert!(rep.converged);
        assert_eq!(rep.iterations, 1);
        let mut buf = Vec::new();
        write_trace_csv(&f, &rep, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 2 * 3);
        assert!(text.starts_with("iter,s,value\n0,1,0\n"));
    }
}
