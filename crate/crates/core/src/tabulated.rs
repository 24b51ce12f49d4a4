//! Piecewise-linear entropies loaded from user data.

use std::path::Path;

use crate::error::{Error, Result};

const FAMILY: &str = "tabulated";
const CONVEXITY_TOL: f64 = 1e-10;

/// Knots `(s_i, F(s_i))` with `s` strictly increasing and a knot `(1, 0)`.
///
/// Between knots `F` is linear; a segment touching an infinite knot is infinite
/// except at its finite end. Below the first knot `F = +inf` (unless the first
/// knot is `s = 0`); past the last knot the last segment is extended linearly.
#[derive(Debug, Clone, PartialEq)]
pub struct Tabulated {
    s: Vec<f64>,
    v: Vec<f64>,
    /// Indices of the first and last finite knots.
    first: usize,
    last: usize,
}

impl Tabulated {
    pub fn new(s: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        let bad = |reason: String| Error::InvalidParameter { family: FAMILY, reason };
        if s.len() != v.len() || s.len() < 2 {
            return Err(bad("need at least two knots with one value each".into()));
        }
        if s.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(bad("knot abscissae must be finite and nonnegative".into()));
        }
        if s.windows(2).any(|w| w[1] <= w[0]) {
            return Err(bad("knot abscissae must be strictly increasing".into()));
        }
        if v.iter().any(|x| x.is_nan() || *x < 0.0 || *x == f64::NEG_INFINITY) {
            return Err(bad("values must lie in [0, inf]".into()));
        }
        let one = s
            .iter()
            .position(|&x| x == 1.0)
            .ok_or_else(|| bad("a knot at s = 1 is required".into()))?;
        if v[one] != 0.0 {
            return Err(bad(format!("F(1) must be 0, got {}", v[one])));
        }
        let first = v.iter().position(|x| x.is_finite()).unwrap_or(one);
        let last = v.iter().rposition(|x| x.is_finite()).unwrap_or(one);
        if v[first..=last].iter().any(|x| x.is_infinite()) {
            return Err(bad("finite values must form one contiguous run".into()));
        }
        let slopes: Vec<f64> = (first..last).map(|i| (v[i + 1] - v[i]) / (s[i + 1] - s[i])).collect();
        for (k, w) in slopes.windows(2).enumerate() {
            let scale = 1.0 + w[0].abs().max(w[1].abs());
            if w[1] < w[0] - CONVEXITY_TOL * scale {
                return Err(bad(format!("not convex at s = {}", s[first + k + 1])));
            }
        }
        Ok(Tabulated { s, v, first, last })
    }

    /// Parses `s value` lines; `#` starts a comment, `inf` is accepted as a value.
    pub fn parse(text: &str) -> Result<Self> {
        let mut s = Vec::new();
        let mut v = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut cols = line.split(|c: char| c.is_whitespace() || c == ',').filter(|c| !c.is_empty());
            let (Some(a), Some(b), None) = (cols.next(), cols.next(), cols.next()) else {
                return Err(Error::Parse(format!("line {}: expected two columns", lineno + 1)));
            };
            let num = |x: &str| -> Result<f64> {
                match x.to_ascii_lowercase().as_str() {
                    "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
                    _ => x
                        .parse::<f64>()
                        .map_err(|e| Error::Parse(format!("line {}: {x:?}: {e}", lineno + 1))),
                }
            };
            s.push(num(a)?);
            v.push(num(b)?);
        }
        Self::new(s, v)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn knots(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.s.iter().copied().zip(self.v.iter().copied())
    }

    fn slope(&self, i: usize) -> f64 {
        (self.v[i + 1] - self.v[i]) / (self.s[i + 1] - self.s[i])
    }

    fn has_tail(&self) -> bool {
        self.last == self.s.len() - 1 && self.last > self.first
    }

    pub fn evaluate(&self, x: f64) -> f64 {
        let (lo, hi) = (self.s[self.first], self.s[self.last]);
        if x < lo {
            return f64::INFINITY;
        }
        if x > hi {
            if !self.has_tail() {
                return f64::INFINITY;
            }
            let i = self.last - 1;
            return self.v[self.last] + self.slope(i) * (x - hi);
        }
        if x == hi {
            return self.v[self.last];
        }
        // First knot strictly greater than x; the segment is [k-1, k].
        let k = self.s.partition_point(|&si| si <= x);
        let (s0, s1) = (self.s[k - 1], self.s[k]);
        let w = (x - s0) / (s1 - s0);
        (1.0 - w) * self.v[k - 1] + w * self.v[k]
    }

    /// Right derivative inside the effective domain.
    pub fn derivative(&self, x: f64) -> f64 {
        let (lo, hi) = (self.s[self.first], self.s[self.last]);
        if x < lo {
            return f64::NEG_INFINITY;
        }
        if x >= hi {
            return if self.has_tail() { self.slope(self.last - 1) } else { f64::INFINITY };
        }
        let k = self.s.partition_point(|&si| si <= x);
        self.slope(k - 1)
    }

    /// Closure of the set where the function is finite.
    pub fn domain(&self) -> (f64, f64) {
        let hi = if self.has_tail() { f64::INFINITY } else { self.s[self.last] };
        (self.s[self.first], hi)
    }

    /// `(F(0), F'_0, F'_inf, aff F_inf)`, read off the pieces.
    pub fn coefficients(&self) -> (f64, f64, f64, f64) {
        let f0 = self.evaluate(0.0);
        let fp0 = if self.s[self.first] == 0.0 && self.last > self.first {
            self.slope(self.first)
        } else {
            f64::NEG_INFINITY
        };
        let (fpinf, aff) = if self.has_tail() {
            let m = self.slope(self.last - 1);
            (m, m * self.s[self.last] - self.v[self.last])
        } else {
            (f64::INFINITY, f64::INFINITY)
        };
        (f0, fp0, fpinf, aff)
    }

    /// Strictly positive away from `s = 1`.
    pub fn has_strict_minimum(&self) -> bool {
        let one = self.s.iter().position(|&x| x == 1.0).expect("validated knot at 1");
        let left_ok = one == 0 || self.v[one - 1] > 0.0;
        let right_ok = one + 1 == self.s.len() || self.v[one + 1] > 0.0;
        left_ok && right_ok
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn relu() -> Tabulated {
        Tabulated::parse("0 0\n1 0\n2 1\n").unwrap()
    }

    #[test]
    fn interpolates_and_extrapolates() {
        let t = relu();
        assert_eq!(t.evaluate(0.5), 0.0);
        assert_eq!(t.evaluate(1.5), 0.5);
        assert_eq!(t.evaluate(10.0), 9.0);
        assert_eq!(t.coefficients(), (0.0, 0.0, 1.0, 1.0));
        assert!(!t.has_strict_minimum());
    }

    #[test]
    fn infinite_knots_bound_the_domain() {
        let t = Tabulated::parse("# bounded\n0.5 inf\n0.75 0.25\n1 0\n2 1\n3 inf\n").unwrap();
        assert_eq!(t.evaluate(0.6), f64::INFINITY);
        assert_eq!(t.evaluate(0.75), 0.25);
        assert_eq!(t.evaluate(2.5), f64::INFINITY);
        assert_eq!(t.domain(), (0.75, 2.0));
        let (f0, fp0, fpinf, aff) = t.coefficients();
        assert_eq!((f0, fp0, fpinf, aff), (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::INFINITY));
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(Tabulated::parse("0 1\n1 0\n2 3\n3 4\n").is_err()); // concave kink
        assert!(Tabulated::parse("0 1\n2 1\n").is_err()); // no knot at 1
        assert!(Tabulated::parse("1 0\n0.5 1\n").is_err()); // not increasing
        assert!(Tabulated::parse("0 1\n1 0.1\n2 1\n").is_err()); // F(1) != 0
        assert!(Tabulated::parse("0 1\n1 0\n2 inf\n3 2\n").is_err()); // hole in domain
        assert!(Tabulated::parse("0 x\n1 0\n").is_err());
    }
}
