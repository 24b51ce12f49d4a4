//! Admissible entropies `F: [0, inf) -> [0, inf]`: convex, l.s.c., `F(1) = 0`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::extended::ExtendedValue;
use crate::optimize;
use crate::tabulated::Tabulated;

const ARG_TOL: f64 = 1e-12;
const ROOT_TOL: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// Indicator of `[a, b]`, `0 <= a <= 1 <= b <= inf`.
    Indicator { a: f64, b: f64 },
    /// `|s - 1|^alpha`, `alpha >= 1`.
    ChiAlpha { alpha: f64 },
    /// `|s^a - 1|^(1/a)`, `0 < a <= 1`.
    Matusita { a: f64 },
    /// `U_p`: `(s^p - p(s-1) - 1) / (p(p-1))`, with the logarithmic cases at `p = 0, 1`.
    PowerLike { p: f64 },
    /// `V_p(s) = s^p - p ln s - 1`, `p >= 1`.
    PowerLog { p: f64 },
    /// `W_{p,q}(s) = q s^p - p s^q + p - q`.
    DoublePower { p: f64, q: f64 },
    /// `c |s - 1|`, `c > 0`.
    TotalVariationScaled { c: f64 },
    Tabulated(Arc<Tabulated>),
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Indicator { .. } => "indicator",
            Family::ChiAlpha { .. } => "chi",
            Family::Matusita { .. } => "matusita",
            Family::PowerLike { .. } => "powerlike",
            Family::PowerLog { .. } => "powerlog",
            Family::DoublePower { .. } => "doublepower",
            Family::TotalVariationScaled { .. } => "tv",
            Family::Tabulated(_) => "tab",
        }
    }

    /// Numeric parameters in grammar order (empty for tabulated entropies).
    pub fn params(&self) -> Vec<f64> {
        match *self {
            Family::Indicator { a, b } => vec![a, b],
            Family::ChiAlpha { alpha } => vec![alpha],
            Family::Matusita { a } => vec![a],
            Family::PowerLike { p } | Family::PowerLog { p } => vec![p],
            Family::DoublePower { p, q } => vec![p, q],
            Family::TotalVariationScaled { c } => vec![c],
            Family::Tabulated(_) => vec![],
        }
    }

    /// Builds a family from its grammar name and numeric parameters.
    pub fn from_parts(name: &str, params: &[f64]) -> Result<Family> {
        let arity = |n: usize| -> Result<()> {
            if params.len() == n {
                Ok(())
            } else {
                Err(Error::Parse(format!("{name} takes {n} parameter(s), got {}", params.len())))
            }
        };
        let fam = match name.to_ascii_lowercase().as_str() {
            "indicator" => {
                arity(2)?;
                Family::Indicator { a: params[0], b: params[1] }
            }
            "chi" | "chialpha" => {
                arity(1)?;
                Family::ChiAlpha { alpha: params[0] }
            }
            "matusita" => {
                arity(1)?;
                Family::Matusita { a: params[0] }
            }
            "powerlike" | "u" => {
                arity(1)?;
                Family::PowerLike { p: params[0] }
            }
            "powerlog" | "v" => {
                arity(1)?;
                Family::PowerLog { p: params[0] }
            }
            "doublepower" | "w" => {
                arity(2)?;
                Family::DoublePower { p: params[0], q: params[1] }
            }
            "tv" | "totalvariation" => {
                arity(1)?;
                Family::TotalVariationScaled { c: params[0] }
            }
            other => return Err(Error::Parse(format!("unknown entropy family {other:?}"))),
        };
        Ok(fam)
    }

    fn validate(&self) -> Result<()> {
        let bad = |reason: &str| Err(Error::InvalidParameter { family: self.name(), reason: reason.into() });
        if self.params().iter().any(|x| x.is_nan()) {
            return bad("NaN parameter");
        }
        match *self {
            Family::Indicator { a, b } if !(0.0..=1.0).contains(&a) || b < 1.0 => bad("need 0 <= a <= 1 <= b <= inf"),
            Family::ChiAlpha { alpha } if !(alpha >= 1.0 && alpha.is_finite()) => bad("need finite alpha >= 1"),
            Family::Matusita { a } if !(a > 0.0 && a <= 1.0) => bad("need 0 < a <= 1"),
            Family::PowerLike { p } if !p.is_finite() => bad("need finite p"),
            Family::PowerLog { p } if !(p >= 1.0 && p.is_finite()) => bad("need finite p >= 1"),
            Family::DoublePower { p, q } => {
                let case_a = p >= 1.0 && q > 0.0 && q <= 1.0 && p != q;
                let case_b = p < 0.0 && q >= 1.0;
                if (case_a || case_b) && p.is_finite() && q.is_finite() {
                    Ok(())
                } else {
                    bad("need (p >= 1, 0 < q <= 1, p != q) or (p < 0, q >= 1)")
                }
            }
            Family::TotalVariationScaled { c } if !(c > 0.0 && c.is_finite()) => bad("need finite c > 0"),
            _ => Ok(()),
        }
    }

    /// `(F(0), F'_0, F'_inf, aff F_inf)` as plain extended floats.
    fn coefficients(&self) -> (f64, f64, f64, f64) {
        const INF: f64 = f64::INFINITY;
        const NINF: f64 = f64::NEG_INFINITY;
        match *self {
            Family::Indicator { a, b } => {
                let (f0, fp0) = if a == 0.0 { (0.0, 0.0) } else { (INF, NINF) };
                let (fpinf, aff) = if b.is_finite() { (INF, INF) } else { (0.0, 0.0) };
                (f0, fp0, fpinf, aff)
            }
            Family::ChiAlpha { alpha } if alpha == 1.0 => (1.0, -1.0, 1.0, 1.0),
            Family::ChiAlpha { alpha } => (1.0, -alpha, INF, INF),
            Family::Matusita { a } if a == 1.0 => (1.0, -1.0, 1.0, 1.0),
            Family::Matusita { .. } => (1.0, NINF, 1.0, INF),
            Family::PowerLike { p } => {
                if p > 1.0 {
                    (1.0 / p, -1.0 / (p - 1.0), INF, INF)
                } else if p == 1.0 {
                    (1.0, NINF, INF, INF)
                } else if p > 0.0 {
                    (1.0 / p, NINF, 1.0 / (1.0 - p), INF)
                } else if p == 0.0 {
                    (INF, NINF, 1.0, INF)
                } else {
                    (INF, NINF, 1.0 / (1.0 - p), -1.0 / p)
                }
            }
            Family::PowerLog { p } => (INF, NINF, if p == 1.0 { 1.0 } else { INF }, INF),
            Family::DoublePower { p, q } if p >= 1.0 => {
                let fp0 = if q < 1.0 { NINF } else { -p };
                let fpinf = if p > 1.0 { INF } else { q };
                (p - q, fp0, fpinf, INF)
            }
            Family::DoublePower { p, q } => {
                if q > 1.0 {
                    (INF, NINF, INF, INF)
                } else {
                    (INF, NINF, -p, 1.0 - p)
                }
            }
            Family::TotalVariationScaled { c } => (c, -c, c, c),
            Family::Tabulated(ref t) => t.coefficients(),
        }
    }

    fn evaluate(&self, s: f64) -> f64 {
        debug_assert!(s >= 0.0);
        match *self {
            Family::Indicator { a, b } => {
                if s >= a && s <= b {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Family::ChiAlpha { alpha } => (s - 1.0).abs().powf(alpha),
            Family::Matusita { a } => (s.powf(a) - 1.0).abs().powf(1.0 / a),
            Family::PowerLike { p } => {
                if s == 0.0 {
                    return if p > 0.0 { 1.0 / p } else { f64::INFINITY };
                }
                if s == f64::INFINITY {
                    return f64::INFINITY;
                }
                let ls = s.ln();
                if p == 1.0 {
                    s * ls - s + 1.0
                } else if p == 0.0 {
                    s - 1.0 - ls
                } else {
                    (pow_m1(s, p) - p * (s - 1.0)) / (p * (p - 1.0))
                }
            }
            Family::PowerLog { p } => {
                if s == 0.0 || s == f64::INFINITY {
                    return f64::INFINITY;
                }
                pow_m1(s, p) - p * s.ln()
            }
            Family::DoublePower { p, q } => {
                if s == 0.0 {
                    return if p >= 1.0 { p - q } else { f64::INFINITY };
                }
                if s == f64::INFINITY {
                    return f64::INFINITY;
                }
                q * pow_m1(s, p) - p * pow_m1(s, q)
            }
            Family::TotalVariationScaled { c } => c * (s - 1.0).abs(),
            Family::Tabulated(ref t) => t.evaluate(s),
        }
    }

    /// Right derivative; `-inf`/`+inf` outside or at the edge of the domain.
    fn derivative(&self, s: f64) -> f64 {
        let sign = |x: f64| if x >= 0.0 { 1.0 } else { -1.0 };
        match *self {
            Family::Indicator { a, b } => {
                if s < a {
                    f64::NEG_INFINITY
                } else if s >= b {
                    f64::INFINITY
                } else {
                    0.0
                }
            }
            Family::ChiAlpha { alpha } if alpha == 1.0 => sign(s - 1.0),
            Family::ChiAlpha { alpha } => sign(s - 1.0) * alpha * (s - 1.0).abs().powf(alpha - 1.0),
            Family::Matusita { a } => {
                if s == 1.0 {
                    return if a == 1.0 { 1.0 } else { 0.0 };
                }
                if s == 0.0 {
                    return if a == 1.0 { -1.0 } else { f64::NEG_INFINITY };
                }
                sign(s - 1.0) * (s.powf(a) - 1.0).abs().powf(1.0 / a - 1.0) * s.powf(a - 1.0)
            }
            Family::PowerLike { p } => {
                if s == 0.0 {
                    return if p > 1.0 { -1.0 / (p - 1.0) } else { f64::NEG_INFINITY };
                }
                if p == 1.0 {
                    s.ln()
                } else {
                    pow_m1(s, p - 1.0) / (p - 1.0)
                }
            }
            Family::PowerLog { p } => {
                if s == 0.0 {
                    return f64::NEG_INFINITY;
                }
                p * pow_m1(s, p) / s
            }
            Family::DoublePower { p, q } => {
                if s == 0.0 {
                    return self.coefficients().1;
                }
                p * q * (s.powf(p - 1.0) - s.powf(q - 1.0))
            }
            Family::TotalVariationScaled { c } => c * sign(s - 1.0),
            Family::Tabulated(ref t) => t.derivative(s),
        }
    }

    fn domain(&self) -> (f64, f64) {
        match *self {
            Family::Indicator { a, b } => (a, b),
            Family::Tabulated(ref t) => t.domain(),
            _ => (0.0, f64::INFINITY),
        }
    }

    /// The family describing `s F(1/s)`, when it is again a known family.
    fn reversed_family(&self) -> Option<Family> {
        match *self {
            Family::Indicator { a, b } => Some(Family::Indicator { a: 1.0 / b, b: 1.0 / a }),
            Family::ChiAlpha { alpha } if alpha == 1.0 => Some(self.clone()),
            Family::Matusita { .. } | Family::TotalVariationScaled { .. } => Some(self.clone()),
            Family::PowerLike { p } => Some(Family::PowerLike { p: 1.0 - p }),
            _ => None,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Family::Tabulated(_) = self {
            return write!(f, "tab");
        }
        let ps: Vec<String> = self.params().iter().map(|x| x.to_string()).collect();
        write!(f, "{}:{}", self.name(), ps.join(","))
    }
}

/// `(F(0), F'_0, F'_inf, aff F_inf)`. `F'_0` may be `-inf`; `aff F_inf` may be
/// `+inf` (always so when `F'_inf = +inf`) and can be negative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    pub f0: ExtendedValue,
    pub fprime0: f64,
    pub fprime_inf: ExtendedValue,
    pub aff_inf: f64,
}

impl Coefficients {
    fn from_raw((f0, fp0, fpinf, aff): (f64, f64, f64, f64)) -> Self {
        Coefficients {
            f0: ExtendedValue::new(f0),
            fprime0: fp0,
            fprime_inf: ExtendedValue::new(fpinf),
            aff_inf: aff,
        }
    }

    /// Coefficients of the reverse entropy `R(s) = s F(1/s)`.
    pub fn reversed(&self) -> Self {
        Coefficients {
            f0: self.fprime_inf,
            fprime0: -self.aff_inf,
            fprime_inf: self.f0,
            aff_inf: -self.fprime0,
        }
    }
}

/// An admissible entropy together with its coefficient pack.
///
/// `reversed` marks the reverse entropy `R(s) = s F(1/s)` of `family`; reversing
/// twice restores the original descriptor exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyDescriptor {
    family: Family,
    reversed: bool,
    coeffs: Coefficients,
}

impl EntropyDescriptor {
    pub fn new(family: Family) -> Result<Self> {
        family.validate()?;
        let coeffs = Coefficients::from_raw(family.coefficients());
        Ok(EntropyDescriptor { family, reversed: false, coeffs })
    }

    pub fn indicator(a: f64, b: f64) -> Result<Self> {
        Self::new(Family::Indicator { a, b })
    }

    pub fn chi_alpha(alpha: f64) -> Result<Self> {
        Self::new(Family::ChiAlpha { alpha })
    }

    pub fn matusita(a: f64) -> Result<Self> {
        Self::new(Family::Matusita { a })
    }

    pub fn power_like(p: f64) -> Result<Self> {
        Self::new(Family::PowerLike { p })
    }

    pub fn power_log(p: f64) -> Result<Self> {
        Self::new(Family::PowerLog { p })
    }

    pub fn double_power(p: f64, q: f64) -> Result<Self> {
        Self::new(Family::DoublePower { p, q })
    }

    pub fn total_variation(c: f64) -> Result<Self> {
        Self::new(Family::TotalVariationScaled { c })
    }

    pub fn tabulated(table: Tabulated) -> Self {
        let family = Family::Tabulated(Arc::new(table));
        let coeffs = Coefficients::from_raw(family.coefficients());
        EntropyDescriptor { family, reversed: false, coeffs }
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn is_reversed(&self) -> bool {
        self.reversed
    }

    pub fn coefficients(&self) -> Coefficients {
        self.coeffs
    }

    /// The built-in family this entropy coincides with, if any.
    pub fn canonical_family(&self) -> Option<Family> {
        if self.reversed {
            self.family.reversed_family()
        } else {
            match self.family {
                Family::Tabulated(_) => None,
                ref f => Some(f.clone()),
            }
        }
    }

    pub fn evaluate(&self, s: f64) -> ExtendedValue {
        ExtendedValue::new(self.eval_f64(s))
    }

    /// `F(s)` as an IEEE float (`+inf` allowed).
    pub fn eval_f64(&self, s: f64) -> f64 {
        debug_assert!(s >= 0.0, "entropy evaluated at negative s = {s}");
        if s == 1.0 {
            return 0.0;
        }
        if !self.reversed {
            return self.family.evaluate(s).max(0.0);
        }
        if s == 0.0 {
            return self.coeffs.f0.to_f64();
        }
        if s == f64::INFINITY {
            return f64::INFINITY;
        }
        let inner = self.family.evaluate(1.0 / s);
        if inner == f64::INFINITY {
            f64::INFINITY
        } else {
            (s * inner).max(0.0)
        }
    }

    /// Right derivative `F'(s^+)` (`-inf` at a singular left edge).
    pub fn derivative(&self, s: f64) -> f64 {
        if !self.reversed {
            return self.family.derivative(s);
        }
        if s == 0.0 {
            return self.coeffs.fprime0;
        }
        // R'(s) = F(1/s) - F'(1/s) / s
        let x = 1.0 / s;
        let (fx, dfx) = (self.family.evaluate(x), self.family.derivative(x));
        if fx.is_infinite() {
            return if s < 1.0 { f64::NEG_INFINITY } else { f64::INFINITY };
        }
        fx - dfx * x
    }

    /// `rec(F)(r) = F'_inf r`, with `0 * inf = 0`.
    pub fn recession(&self, r: f64) -> ExtendedValue {
        self.coeffs.fprime_inf.scale(r)
    }

    /// `F(r/t) t` for `t > 0`, `rec(F)(r)` at `t = 0`.
    pub fn perspective(&self, r: f64, t: f64) -> ExtendedValue {
        ExtendedValue::new(self.perspective_f64(r, t))
    }

    pub fn perspective_f64(&self, r: f64, t: f64) -> f64 {
        if t == 0.0 {
            return self.recession(r).to_f64();
        }
        if r == t {
            return 0.0;
        }
        let v = self.eval_f64(r / t);
        if v == f64::INFINITY {
            f64::INFINITY
        } else {
            v * t
        }
    }

    /// Reverse entropy `R(s) = s F(1/s)`, `R(0) = F'_inf`.
    pub fn reverse(&self) -> EntropyDescriptor {
        EntropyDescriptor {
            family: self.family.clone(),
            reversed: !self.reversed,
            coeffs: self.coeffs.reversed(),
        }
    }

    /// Closure of the set where `F` is finite, as `(lo, hi)`.
    pub fn domain(&self) -> (f64, f64) {
        if !self.reversed {
            return self.family.domain();
        }
        let (lo, hi) = self.family.domain();
        let inv = |x: f64| if x == 0.0 { f64::INFINITY } else { 1.0 / x };
        let lo_r = if self.coeffs.f0.is_finite() { 0.0 } else { inv(hi) };
        (lo_r, inv(lo))
    }

    pub fn is_superlinear(&self) -> bool {
        self.coeffs.fprime_inf.is_infinite()
    }

    /// `F(s) > 0` for every `s != 1`.
    pub fn has_strict_minimum(&self) -> bool {
        match self.family {
            Family::Indicator { a, b } => a == 1.0 && b == 1.0,
            Family::Tabulated(ref t) => t.has_strict_minimum(),
            _ => true,
        }
    }

    /// Legendre conjugate `F*(phi) = sup_{s >= 0} (s phi - F(s))`.
    ///
    /// Returns `+inf` where the supremum diverges; finite values may be negative.
    pub fn conjugate(&self, phi: f64) -> f64 {
        if phi == 0.0 {
            return 0.0;
        }
        if let Some(v) = self.conjugate_closed(phi) {
            return v;
        }
        self.conjugate_numeric(phi)
    }

    fn conjugate_closed(&self, phi: f64) -> Option<f64> {
        let v = match self.canonical_family()? {
            Family::PowerLike { p } => {
                if p == 1.0 {
                    phi.exp_m1()
                } else if p == 0.0 {
                    if phi < 1.0 {
                        -(-phi).ln_1p()
                    } else {
                        f64::INFINITY
                    }
                } else {
                    let base = 1.0 + (p - 1.0) * phi;
                    if base <= 0.0 {
                        if p > 1.0 {
                            -1.0 / p
                        } else if base == 0.0 && p < 0.0 {
                            -1.0 / p
                        } else {
                            f64::INFINITY
                        }
                    } else {
                        ((p / (p - 1.0)) * ((p - 1.0) * phi).ln_1p()).exp_m1() / p
                    }
                }
            }
            Family::ChiAlpha { alpha } if alpha > 1.0 => {
                if phi <= -alpha {
                    -1.0
                } else {
                    phi + (alpha - 1.0) * (phi.abs() / alpha).powf(alpha / (alpha - 1.0))
                }
            }
            Family::ChiAlpha { .. } => tv_conjugate(1.0, phi),
            Family::TotalVariationScaled { c } => tv_conjugate(c, phi),
            Family::Indicator { a, b } => {
                if phi > 0.0 {
                    if b.is_finite() {
                        b * phi
                    } else {
                        f64::INFINITY
                    }
                } else {
                    a * phi
                }
            }
            _ => return None,
        };
        Some(v)
    }

    fn conjugate_numeric(&self, phi: f64) -> f64 {
        let c = self.coeffs;
        let fpinf = c.fprime_inf.to_f64();
        if phi > fpinf {
            return f64::INFINITY;
        }
        if phi == fpinf {
            return c.aff_inf;
        }
        if phi <= c.fprime0 {
            return -c.f0.to_f64();
        }
        let (dlo, dhi) = self.domain();
        let neg = |s: f64| {
            let f = self.eval_f64(s);
            if f == f64::INFINITY {
                f64::INFINITY
            } else {
                f - s * phi
            }
        };
        // Bracket the maximizer of s phi - F(s) around s = 1 (always in the domain).
        let mut hi = 1.0f64;
        while hi < dhi {
            let next = (2.0 * hi).min(dhi);
            if neg(next) >= neg(hi) || next == hi {
                hi = next;
                break;
            }
            hi = next;
            if hi > 1e300 {
                break;
            }
        }
        let mut lo = 1.0f64;
        while lo > dlo {
            let next = (0.5 * lo).max(dlo);
            if neg(next) >= neg(lo) || next < 1e-300 {
                lo = next;
                break;
            }
            lo = next;
        }
        if lo < 1e-300 {
            lo = dlo;
        }
        let m = if lo > 0.0 {
            optimize::golden_section_log(neg, lo, hi, ARG_TOL)
        } else {
            optimize::golden_section(neg, lo, hi, ARG_TOL)
        };
        -m.value
    }

    /// The unique `phi` with `F*(phi) = y`, for `y` in `(-F(0), aff F_inf)`.
    pub fn conjugate_inverse(&self, y: f64) -> Result<f64> {
        let lo_y = -self.coeffs.f0.to_f64();
        let hi_y = self.coeffs.aff_inf;
        if !(y > lo_y && y < hi_y) {
            return Err(Error::Domain { value: y, lo: lo_y, hi: hi_y });
        }
        if y == 0.0 {
            return Ok(0.0);
        }
        let g = |phi: f64| self.conjugate(phi) - y;
        let fp0 = self.coeffs.fprime0;
        let fpinf = self.coeffs.fprime_inf.to_f64();
        let (mut lo, mut hi);
        if y > 0.0 {
            lo = 0.0;
            hi = 1.0f64.min(fpinf);
            while g(hi) < 0.0 && hi < fpinf {
                lo = hi;
                hi = (2.0 * hi).min(fpinf);
                if hi > 1e300 {
                    return Err(Error::SearchFailed(format!("no conjugate preimage for {y}")));
                }
            }
        } else {
            hi = 0.0;
            lo = (-1.0f64).max(fp0);
            while g(lo) > 0.0 && lo > fp0 {
                hi = lo;
                lo = (2.0 * lo).max(fp0);
                if lo < -1e300 {
                    return Err(Error::SearchFailed(format!("no conjugate preimage for {y}")));
                }
            }
        }
        Ok(optimize::bisect_increasing(g, lo, hi, ROOT_TOL))
    }
}

/// `s^p - 1`, accurate both near `s = 1` and far from it.
fn pow_m1(s: f64, p: f64) -> f64 {
    let ls = s.ln();
    if (p * ls).abs() < 0.5 {
        (p * ls).exp_m1()
    } else {
        s.powf(p) - 1.0
    }
}

fn tv_conjugate(c: f64, phi: f64) -> f64 {
    if phi <= -c {
        -c
    } else if phi <= c {
        phi
    } else {
        f64::INFINITY
    }
}

impl fmt::Display for EntropyDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.reversed {
            write!(f, "reverse({})", self.family)
        } else {
            write!(f, "{}", self.family)
        }
    }
}

/// Parses the `family:p1[,p2]` grammar, e.g. `powerlike:2`, `doublepower:1.5,0.5`,
/// `indicator:0.5,inf` or `tab:path/to/table.txt`.
impl FromStr for EntropyDescriptor {
    type Err = Error;

    fn from_str(spec: &str) -> Result<Self> {
        let (name, rest) = spec
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("entropy spec {spec:?} must look like family:params")))?;
        let name = name.trim();
        if name.eq_ignore_ascii_case("tab") {
            return Ok(Self::tabulated(Tabulated::load(rest.trim())?));
        }
        let params = parse_params(rest)?;
        Self::new(Family::from_parts(name, &params)?)
    }
}

pub(crate) fn parse_params(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|x| {
            let x = x.trim();
            match x.to_ascii_lowercase().as_str() {
                "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
                _ => x.parse::<f64>().map_err(|e| Error::Parse(format!("parameter {x:?}: {e}"))),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_families() -> Vec<EntropyDescriptor> {
        let mut v = vec![
            EntropyDescriptor::indicator(0.5, 2.0).unwrap(),
            EntropyDescriptor::indicator(0.0, f64::INFINITY).unwrap(),
            EntropyDescriptor::total_variation(2.5).unwrap(),
        ];
        for a in [1.0, 1.5, 2.0, 3.0] {
            v.push(EntropyDescriptor::chi_alpha(a).unwrap());
        }
        for a in [0.25, 0.5, 1.0] {
            v.push(EntropyDescriptor::matusita(a).unwrap());
        }
        for p in [-2.0, -0.5, 0.0, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0] {
            v.push(EntropyDescriptor::power_like(p).unwrap());
        }
        for p in [1.0, 2.0, 3.0] {
            v.push(EntropyDescriptor::power_log(p).unwrap());
        }
        for (p, q) in [(2.0, 0.5), (1.0, 0.5), (2.0, 1.0), (-1.0, 2.0), (-0.5, 1.0)] {
            v.push(EntropyDescriptor::double_power(p, q).unwrap());
        }
        v
    }

    #[test]
    fn spec_values() {
        let u2 = EntropyDescriptor::power_like(2.0).unwrap();
        assert_eq!(u2.evaluate(3.0), ExtendedValue::new(2.0));
        assert_eq!(EntropyDescriptor::power_like(0.0).unwrap().evaluate(0.0), ExtendedValue::INFINITY);
        let m = EntropyDescriptor::matusita(0.5).unwrap();
        assert!((m.eval_f64(4.0) - 1.0).abs() < 1e-15);
        assert_eq!(EntropyDescriptor::power_like(0.5).unwrap().eval_f64(0.0), 2.0);
        for f in all_families() {
            assert_eq!(f.evaluate(1.0), ExtendedValue::ZERO, "{f}");
        }
    }

    #[test]
    fn recession_and_perspective() {
        let tv = EntropyDescriptor::chi_alpha(1.0).unwrap();
        assert_eq!(tv.recession(5.0).to_f64(), 5.0);
        assert_eq!(tv.perspective_f64(4.0, 0.0), 4.0);
        let u0 = EntropyDescriptor::power_like(0.0).unwrap();
        assert_eq!(u0.recession(1.0).to_f64(), 1.0);
        let u1 = EntropyDescriptor::power_like(1.0).unwrap();
        assert_eq!(u1.recession(0.0), ExtendedValue::ZERO);
        assert_eq!(u1.recession(2.0), ExtendedValue::INFINITY);
        let u2 = EntropyDescriptor::power_like(2.0).unwrap();
        assert_eq!(u2.perspective_f64(3.0, 1.0), 2.0);
        assert_eq!(u2.perspective_f64(2.0, 2.0), 0.0);
    }

    #[test]
    fn reverse_of_kl_is_reverse_kl() {
        let r = EntropyDescriptor::power_like(1.0).unwrap().reverse();
        let u0 = EntropyDescriptor::power_like(0.0).unwrap();
        for s in [0.01, 0.3, 2.0, 17.0] {
            assert!((r.eval_f64(s) - u0.eval_f64(s)).abs() < 1e-12);
        }
        assert_eq!(r.coefficients(), u0.coefficients());
    }

    #[test]
    fn reverse_is_involution_and_transfers_coefficients() {
        for f in all_families() {
            let r = f.reverse();
            assert_eq!(r.reverse(), f);
            let c = f.coefficients();
            let rc = r.coefficients();
            assert_eq!(rc.f0, c.fprime_inf, "{f}");
            assert_eq!(rc.fprime_inf, c.f0, "{f}");
            assert_eq!(rc.fprime0, -c.aff_inf, "{f}");
            assert_eq!(rc.aff_inf, -c.fprime0, "{f}");
            assert_eq!(r.eval_f64(0.0), c.fprime_inf.to_f64(), "{f}");
        }
    }

    #[test]
    fn reversed_families_match_their_closed_counterparts() {
        for f in all_families() {
            let r = f.reverse();
            let Some(fam) = r.canonical_family() else { continue };
            let g = EntropyDescriptor::new(fam).unwrap();
            for s in [0.0, 0.25, 0.5, 0.9, 1.1, 2.0, 7.0] {
                let (x, y) = (r.eval_f64(s), g.eval_f64(s));
                assert!(x == y || (x - y).abs() < 1e-12 * (1.0 + y.abs()), "{f} at {s}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn conjugate_examples() {
        let u2 = EntropyDescriptor::power_like(2.0).unwrap();
        assert!((u2.conjugate(1.0) - 1.5).abs() < 1e-15);
        let tv = EntropyDescriptor::chi_alpha(1.0).unwrap();
        assert_eq!(tv.conjugate(2.0), f64::INFINITY);
        for f in all_families() {
            assert_eq!(f.conjugate(0.0), 0.0);
        }
        assert!((u2.conjugate_inverse(1.5).unwrap() - 1.0).abs() < 1e-12);
        let u1 = EntropyDescriptor::power_like(1.0).unwrap();
        let e1 = std::f64::consts::E - 1.0;
        assert!((u1.conjugate_inverse(e1).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(u1.conjugate_inverse(0.0).unwrap(), 0.0);
        assert!(matches!(u2.conjugate_inverse(-0.5), Err(Error::Domain { .. })));
    }

    #[test]
    fn numeric_conjugate_agrees_with_closed_forms() {
        for f in all_families() {
            if f.conjugate_closed(0.5).is_none() {
                continue;
            }
            for phi in [-3.0, -1.0, -0.4, 0.3, 0.7, 1.2, 2.5] {
                let a = f.conjugate(phi);
                let b = f.conjugate_numeric(phi);
                if a.is_infinite() {
                    assert!(b.is_infinite() || b > 1e6, "{f} phi={phi}: {b}");
                } else {
                    assert!((a - b).abs() < 1e-8 * (1.0 + a.abs()), "{f} phi={phi}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn parses_grammar() {
        let f: EntropyDescriptor = "doublepower:1.5,0.5".parse().unwrap();
        assert_eq!(f.family(), &Family::DoublePower { p: 1.5, q: 0.5 });
        let f: EntropyDescriptor = "indicator:0.5,inf".parse().unwrap();
        assert_eq!(f.family(), &Family::Indicator { a: 0.5, b: f64::INFINITY });
        assert!("chi:0.5".parse::<EntropyDescriptor>().is_err());
        assert!("powerlike".parse::<EntropyDescriptor>().is_err());
        assert!("powerlike:1,2".parse::<EntropyDescriptor>().is_err());
        assert!("doublepower:0.5,0.5".parse::<EntropyDescriptor>().is_err());
        assert!("bogus:1".parse::<EntropyDescriptor>().is_err());
    }
}
