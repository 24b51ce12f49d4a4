//! Discrete optimal entropy-transport between two finite measures.
//!
//! `E(gamma) = sum_i r_i F(row_i / r_i) + sum_j t_j F(col_j / t_j) + sum_ij c_ij gamma_ij`
//! is minimized over nonnegative plans; `H`-form evaluation rewrites the same
//! value through the marginal perspective cost.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cone_cost::h_cost;
use crate::entropy::{EntropyDescriptor, Family};
use crate::error::{Error, Result};
use crate::extended::ExtendedValue;
use crate::measure::DiscreteMeasure;
use crate::optimize;

pub const TOL_SOLVE: f64 = 1e-8;
pub const MAX_ITERS: usize = 100_000;
/// Box `[0, B]` for every plan entry, `B = COERCIVITY * (total masses)`.
pub const COERCIVITY: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportPlan {
    gamma: Vec<Vec<f64>>,
}

impl TransportPlan {
    pub fn new(gamma: Vec<Vec<f64>>) -> Result<Self> {
        let n = gamma.first().map_or(0, Vec::len);
        if gamma.is_empty() || n == 0 || gamma.iter().any(|r| r.len() != n) {
            return Err(Error::Usage("plan must be a nonempty rectangular matrix".into()));
        }
        if gamma.iter().flatten().any(|&g| !(g.is_finite() && g >= 0.0)) {
            return Err(Error::Usage("plan entries must be finite and nonnegative".into()));
        }
        Ok(TransportPlan { gamma })
    }

    pub fn zeros(m: usize, n: usize) -> Self {
        TransportPlan { gamma: vec![vec![0.0; n]; m] }
    }

    pub fn entries(&self) -> &[Vec<f64>] {
        &self.gamma
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.gamma.len(), self.gamma[0].len())
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.gamma.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let n = self.gamma[0].len();
        (0..n).map(|j| self.gamma.iter().map(|r| r[j]).sum()).collect()
    }

    pub fn scaled(&self, lambda: f64) -> Self {
        TransportPlan { gamma: self.gamma.iter().map(|r| r.iter().map(|g| lambda * g).collect()).collect() }
    }
}

#[derive(Debug, Clone)]
pub struct EtProblem {
    entropy: EntropyDescriptor,
    cost: Vec<Vec<f64>>,
    r: Vec<f64>,
    t: Vec<f64>,
}

impl EtProblem {
    /// Validates the data and requires a superlinear entropy (`F'_inf = inf`).
    pub fn new(entropy: EntropyDescriptor, cost: Vec<Vec<f64>>, r: Vec<f64>, t: Vec<f64>) -> Result<Self> {
        if !entropy.is_superlinear() {
            return Err(Error::NotSuperlinear(entropy.coefficients().fprime_inf.to_f64()));
        }
        Self::homogeneous(entropy, cost, r, t)
    }

    /// Like [`EtProblem::new`] without the superlinearity requirement; such
    /// problems support [`h_functional`] but not [`solve`].
    pub fn homogeneous(entropy: EntropyDescriptor, cost: Vec<Vec<f64>>, r: Vec<f64>, t: Vec<f64>) -> Result<Self> {
        let (m, n) = (r.len(), t.len());
        if m == 0 || n == 0 {
            return Err(Error::Usage("both measures need at least one atom".into()));
        }
        if r.iter().chain(&t).any(|&x| !(x.is_finite() && x > 0.0)) {
            return Err(Error::Usage("masses must be finite and strictly positive".into()));
        }
        if cost.len() != m || cost.iter().any(|row| row.len() != n) {
            return Err(Error::Usage(format!("cost must be a {m}x{n} matrix")));
        }
        if cost.iter().flatten().any(|&c| c.is_nan() || c < 0.0) {
            return Err(Error::Usage("cost entries must lie in [0, inf]".into()));
        }
        if cost.iter().flatten().all(|c| c.is_infinite()) {
            return Err(Error::Usage("cost is identically +inf".into()));
        }
        Ok(EtProblem { entropy, cost, r, t })
    }

    pub fn from_measures(
        entropy: EntropyDescriptor,
        cost: Vec<Vec<f64>>,
        mu1: &DiscreteMeasure,
        mu2: &DiscreteMeasure,
    ) -> Result<Self> {
        let masses = |mu: &DiscreteMeasure| mu.atoms().iter().map(|a| a.1).collect::<Vec<_>>();
        Self::new(entropy, cost, masses(mu1), masses(mu2))
    }

    pub fn entropy(&self) -> &EntropyDescriptor {
        &self.entropy
    }

    pub fn cost(&self) -> &[Vec<f64>] {
        &self.cost
    }

    pub fn mu1(&self) -> &[f64] {
        &self.r
    }

    pub fn mu2(&self) -> &[f64] {
        &self.t
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.r.len(), self.t.len())
    }

    /// Both measures multiplied by `lambda`.
    pub fn scaled(&self, lambda: f64) -> Self {
        EtProblem {
            entropy: self.entropy.clone(),
            cost: self.cost.clone(),
            r: self.r.iter().map(|x| lambda * x).collect(),
            t: self.t.iter().map(|x| lambda * x).collect(),
        }
    }

    fn bound(&self) -> f64 {
        COERCIVITY * (self.r.iter().sum::<f64>() + self.t.iter().sum::<f64>())
    }

    /// Indices of the finite-cost entries, the only ones a finite-energy plan can use.
    fn free_entries(&self) -> Vec<(usize, usize)> {
        let (m, n) = self.shape();
        (0..m).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|&(i, j)| self.cost[i][j].is_finite()).collect()
    }

    fn check_plan(&self, plan: &TransportPlan) -> Result<()> {
        if plan.shape() != self.shape() {
            return Err(Error::Usage(format!("plan shape {:?} does not match problem {:?}", plan.shape(), self.shape())));
        }
        Ok(())
    }

    fn energy_raw(&self, gamma: &[Vec<f64>]) -> f64 {
        let (m, n) = self.shape();
        let mut total = 0.0;
        for i in 0..m {
            total += self.entropy.perspective_f64(gamma[i].iter().sum(), self.r[i]);
        }
        for j in 0..n {
            total += self.entropy.perspective_f64(gamma.iter().map(|row| row[j]).sum(), self.t[j]);
        }
        for (crow, grow) in self.cost.iter().zip(gamma) {
            for (&c, &g) in crow.iter().zip(grow) {
                if g > 0.0 {
                    total += c * g;
                }
            }
        }
        total
    }

    fn h_raw(&self, gamma: &[Vec<f64>]) -> Option<f64> {
        let (m, n) = self.shape();
        let rows: Vec<f64> = gamma.iter().map(|r| r.iter().sum()).collect();
        let cols: Vec<f64> = (0..n).map(|j| gamma.iter().map(|r| r[j]).sum()).collect();
        if rows.iter().chain(&cols).any(|&s| s <= 0.0) {
            return None;
        }
        let mut total = 0.0;
        for i in 0..m {
            for j in 0..n {
                let g = gamma[i][j];
                if g > 0.0 {
                    total += h_cost(&self.entropy, self.cost[i][j], self.r[i] / rows[i], self.t[j] / cols[j]).to_f64() * g;
                }
            }
        }
        Some(total)
    }
}

/// The entropy-transport energy of a plan; `+inf` propagates.
pub fn energy(problem: &EtProblem, plan: &TransportPlan) -> Result<ExtendedValue> {
    problem.check_plan(plan)?;
    Ok(ExtendedValue::new(problem.energy_raw(&plan.gamma)))
}

/// `sum_ij H_{c_ij}(r_i / row_i, t_j / col_j) gamma_ij`; every row and column
/// of the plan must have positive mass.
pub fn h_functional(problem: &EtProblem, plan: &TransportPlan) -> Result<ExtendedValue> {
    problem.check_plan(plan)?;
    problem
        .h_raw(&plan.gamma)
        .map(ExtendedValue::new)
        .ok_or_else(|| Error::Precondition("every row and column of the plan needs positive mass".into()))
}

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { tol: TOL_SOLVE, max_iters: MAX_ITERS }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    ProjectedGradient,
    CoordinateSearch,
}

impl std::fmt::Display for SolveMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolveMethod::ProjectedGradient => "projected_gradient",
            SolveMethod::CoordinateSearch => "coordinate_search",
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub method: SolveMethod,
    pub iterations: usize,
    pub converged: bool,
    /// Projected-gradient norm (or last sweep's relative decrease) at the end.
    pub residual: f64,
    /// Index of the winning start: diagonal, product, near-zero.
    pub start: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct EtSolution {
    pub value: f64,
    pub plan: TransportPlan,
    pub report: SolveReport,
}

fn is_smooth(f: &EntropyDescriptor) -> bool {
    matches!(f.family(), Family::PowerLike { .. } | Family::PowerLog { .. } | Family::DoublePower { .. })
}

/// Minimizes the energy over nonnegative plans.
///
/// Smooth families use projected gradient with Armijo backtracking; kinked
/// ones cycle golden-section searches over single entries. Entries with
/// infinite cost stay at zero. The best of three starting plans is returned.
pub fn solve(problem: &EtProblem, opts: &SolveOptions) -> Result<EtSolution> {
    if !problem.entropy.is_superlinear() {
        return Err(Error::NotSuperlinear(problem.entropy.coefficients().fprime_inf.to_f64()));
    }
    let (m, n) = problem.shape();
    let free = problem.free_entries();
    let rsum: f64 = problem.r.iter().sum();
    let tsum: f64 = problem.t.iter().sum();
    let eps = 1e-3 * problem.r.iter().chain(&problem.t).cloned().fold(f64::INFINITY, f64::min);
    let starts: [Vec<f64>; 3] = [
        free.iter().map(|&(i, j)| if i == j { problem.r[i].min(problem.t[j]) } else { eps }).collect(),
        free.iter().map(|&(i, j)| problem.r[i] * problem.t[j] / (rsum * tsum).sqrt()).collect(),
        vec![eps; free.len()],
    ];
    let smooth = is_smooth(&problem.entropy);
    let mut best: Option<EtSolution> = None;
    for (k, x0) in starts.into_iter().enumerate() {
        let (x, value, iterations, converged, residual) = if smooth {
            projected_gradient(problem, &free, x0, opts)
        } else {
            coordinate_search(problem, &free, x0, opts)
        };
        if best.as_ref().is_none_or(|b| value < b.value) {
            let mut gamma = vec![vec![0.0; n]; m];
            for (&(i, j), &g) in free.iter().zip(&x) {
                gamma[i][j] = g;
            }
            let method = if smooth { SolveMethod::ProjectedGradient } else { SolveMethod::CoordinateSearch };
            best = Some(EtSolution {
                value,
                plan: TransportPlan { gamma },
                report: SolveReport { method, iterations, converged, residual, start: k },
            });
        }
    }
    match best {
        Some(s) if s.value.is_finite() => Ok(s),
        _ => Err(Error::Infeasible),
    }
}

fn assemble(problem: &EtProblem, free: &[(usize, usize)], x: &[f64]) -> Vec<Vec<f64>> {
    let (m, n) = problem.shape();
    let mut gamma = vec![vec![0.0; n]; m];
    for (&(i, j), &g) in free.iter().zip(x) {
        gamma[i][j] = g;
    }
    gamma
}

fn gradient(problem: &EtProblem, free: &[(usize, usize)], x: &[f64]) -> Vec<f64> {
    const CAP: f64 = 1e12;
    let gamma = assemble(problem, free, x);
    let f = &problem.entropy;
    let rows: Vec<f64> = gamma.iter().zip(&problem.r).map(|(row, r)| f.derivative(row.iter().sum::<f64>() / r)).collect();
    let cols: Vec<f64> = (0..problem.t.len())
        .map(|j| f.derivative(gamma.iter().map(|row| row[j]).sum::<f64>() / problem.t[j]))
        .collect();
    free.iter()
        .map(|&(i, j)| (rows[i] + cols[j] + problem.cost[i][j]).clamp(-CAP, CAP))
        .collect()
}

fn projected_gradient(
    problem: &EtProblem,
    free: &[(usize, usize)],
    mut x: Vec<f64>,
    opts: &SolveOptions,
) -> (Vec<f64>, f64, usize, bool, f64) {
    let value = |x: &[f64]| problem.energy_raw(&assemble(problem, free, x));
    let mut fx = value(&x);
    let mut step = 1.0;
    let mut residual = f64::INFINITY;
    for it in 0..opts.max_iters {
        let g = gradient(problem, free, &x);
        residual = x.iter().zip(&g).map(|(xi, gi)| (xi - (xi - gi).max(0.0)).powi(2)).sum::<f64>().sqrt();
        if residual < opts.tol {
            return (x, fx, it, true, residual);
        }
        step *= 2.0;
        loop {
            let y: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| (xi - step * gi).max(0.0)).collect();
            let decrease: f64 = x.iter().zip(&g).zip(&y).map(|((xi, gi), yi)| gi * (xi - yi)).sum();
            let fy = value(&y);
            if fy <= fx - 1e-4 * decrease {
                let stalled = fx - fy <= 1e-16 * fx.abs() && y == x;
                x = y;
                fx = fy;
                if stalled {
                    return (x, fx, it, false, residual);
                }
                break;
            }
            step *= 0.5;
            if step < 1e-300 {
                return (x, fx, it, false, residual);
            }
        }
    }
    (x, fx, opts.max_iters, false, residual)
}

fn coordinate_search(
    problem: &EtProblem,
    free: &[(usize, usize)],
    mut x: Vec<f64>,
    opts: &SolveOptions,
) -> (Vec<f64>, f64, usize, bool, f64) {
    let b = problem.bound();
    let mut fx = problem.energy_raw(&assemble(problem, free, &x));
    let mut change = f64::INFINITY;
    let sweeps = opts.max_iters / free.len().max(1);
    for sweep in 0..sweeps {
        let before = fx;
        for k in 0..x.len() {
            let m = optimize::scan_then_golden(
                |g| {
                    let mut y = x.clone();
                    y[k] = g;
                    problem.energy_raw(&assemble(problem, free, &y))
                },
                0.0,
                b,
                64,
                false,
                1e-15,
            );
            if m.value <= fx {
                x[k] = m.x;
                fx = m.value;
            }
        }
        change = if before.is_finite() { (before - fx) / (1.0 + fx.abs()) } else { f64::INFINITY };
        if change <= 1e-15 {
            return (x, fx, sweep + 1, true, change);
        }
    }
    (x, fx, sweeps, false, change)
}

#[derive(Debug, Clone, Serialize)]
pub struct BruteForceResult {
    pub min_energy: f64,
    pub argmin_energy: TransportPlan,
    /// `None` when no grid plan has positive rows and columns.
    pub min_h: Option<f64>,
    pub argmin_h: Option<TransportPlan>,
    /// Largest change of either functional between the best coarse grid point
    /// and its grid neighbours.
    pub coarse_resolution: f64,
    pub coarse_energy: f64,
    pub coarse_h: Option<f64>,
}

const ZOOM_POINTS: usize = 9;
const ZOOM_LEVELS: usize = 400;

/// Grid minimum of the energy alone, refined like [`brute_force_et`].
pub fn brute_force_energy(problem: &EtProblem, grid_per_entry: usize) -> Result<(f64, TransportPlan)> {
    let (m, n) = problem.shape();
    if m * n > 4 || grid_per_entry < 2 {
        return Err(Error::Usage(format!("need m*n <= 4 and at least 2 grid points, got {} and {grid_per_entry}", m * n)));
    }
    let free = problem.free_entries();
    let b = problem.bound();
    let h = b / (grid_per_entry - 1) as f64;
    let e_fn = |x: &[f64]| problem.energy_raw(&assemble(problem, &free, x));
    let (v, x) = grid_min(&e_fn, &vec![0.0; free.len()], h, grid_per_entry, b);
    let (v, x) = zoom(&e_fn, x, v, h, b);
    Ok((v, TransportPlan { gamma: assemble(problem, &free, &x) }))
}

/// Exhaustive grid over the finite-cost entries in `[0, B]`, followed by
/// local pattern-search refinement around the best point of each functional.
///
/// The homogeneous functional is not convex, so its refined minimum is only
/// an upper bound on the true one.
pub fn brute_force_et(problem: &EtProblem, grid_per_entry: usize) -> Result<BruteForceResult> {
    let (m, n) = problem.shape();
    if m * n > 4 {
        return Err(Error::Usage(format!("brute force is limited to m*n <= 4, got {}", m * n)));
    }
    if grid_per_entry < 2 {
        return Err(Error::Usage("need at least 2 grid points per entry".into()));
    }
    let free = problem.free_entries();
    let b = problem.bound();
    let h = b / (grid_per_entry - 1) as f64;
    let e_fn = |x: &[f64]| problem.energy_raw(&assemble(problem, &free, x));
    let h_fn = |x: &[f64]| problem.h_raw(&assemble(problem, &free, x)).unwrap_or(f64::INFINITY);
    let lower = vec![0.0; free.len()];
    let (e_coarse, e_x) = grid_min(&e_fn, &lower, h, grid_per_entry, b);
    let (h_coarse, h_x) = grid_min(&h_fn, &lower, h, grid_per_entry, b);
    let resolution = neighbour_spread(&e_fn, &e_x, h, b).max(if h_coarse.is_finite() {
        neighbour_spread(&h_fn, &h_x, h, b)
    } else {
        0.0
    });
    let (e_min, e_arg) = zoom(&e_fn, e_x, e_coarse, h, b);
    let (h_min, h_arg) = if h_coarse.is_finite() { zoom(&h_fn, h_x, h_coarse, h, b) } else { (h_coarse, h_x) };
    let plan = |x: &[f64]| TransportPlan { gamma: assemble(problem, &free, x) };
    Ok(BruteForceResult {
        min_energy: e_min,
        argmin_energy: plan(&e_arg),
        min_h: h_min.is_finite().then_some(h_min),
        argmin_h: h_min.is_finite().then(|| plan(&h_arg)),
        coarse_resolution: resolution,
        coarse_energy: e_coarse,
        coarse_h: h_coarse.is_finite().then_some(h_coarse),
    })
}

/// Minimum over the grid `lower + h * k` (`k` in `0..points` per coordinate,
/// clipped to `[0, b]`).
fn grid_min(f: &(impl Fn(&[f64]) -> f64 + Sync), lower: &[f64], h: f64, points: usize, b: f64) -> (f64, Vec<f64>) {
    let dim = lower.len();
    let total = points.pow(dim as u32);
    let point = |mut k: usize| -> Vec<f64> {
        let mut x = vec![0.0; dim];
        for (c, xc) in x.iter_mut().enumerate() {
            *xc = (lower[c] + h * (k % points) as f64).clamp(0.0, b);
            k /= points;
        }
        x
    };
    (0..total)
        .into_par_iter()
        .map(|k| {
            let x = point(k);
            let v = f(&x);
            (if v.is_nan() { f64::INFINITY } else { v }, k)
        })
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map(|(v, k)| (v, point(k)))
        .unwrap_or((f64::INFINITY, lower.to_vec()))
}

fn neighbour_spread(f: &impl Fn(&[f64]) -> f64, x: &[f64], h: f64, b: f64) -> f64 {
    let fx = f(x);
    let mut spread: f64 = 0.0;
    for c in 0..x.len() {
        for dir in [-1.0, 1.0] {
            let mut y = x.to_vec();
            y[c] = (y[c] + dir * h).clamp(0.0, b);
            let v = f(&y);
            if v.is_finite() {
                spread = spread.max((v - fx).abs());
            }
        }
    }
    spread
}

fn zoom(f: &(impl Fn(&[f64]) -> f64 + Sync), mut x: Vec<f64>, mut fx: f64, mut h: f64, b: f64) -> (f64, Vec<f64>) {
    // Pattern search: recentre while the best point moves, shrink otherwise.
    let half = (ZOOM_POINTS / 2) as f64;
    for _ in 0..ZOOM_LEVELS {
        if h <= 1e-10 * b {
            break;
        }
        let step = h / half;
        let lower: Vec<f64> = x.iter().map(|&xc| xc - half * step).collect();
        let (v, y) = grid_min(f, &lower, step, ZOOM_POINTS, b);
        if v < fx {
            x = y;
            fx = v;
        } else {
            h *= 0.5;
        }
    }
    (fx, x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn up(p: f64) -> EntropyDescriptor {
        EntropyDescriptor::power_like(p).unwrap()
    }

    #[test]
    fn energy_examples() {
        let pb = EtProblem::new(up(1.0), vec![vec![0.0, 1.0], vec![1.0, 0.0]], vec![1.0, 2.0], vec![1.0, 2.0]).unwrap();
        let diag = TransportPlan::new(vec![vec![1.0, 0.0], vec![0.0, 2.0]]).unwrap();
        assert_eq!(energy(&pb, &diag).unwrap().to_f64(), 0.0);
        let u2 = EtProblem::new(up(2.0), vec![vec![0.5]], vec![2.0], vec![3.0]).unwrap();
        assert_eq!(energy(&u2, &TransportPlan::zeros(1, 1)).unwrap().to_f64(), 2.5);
    }

    #[test]
    fn rejects_bad_problems() {
        let tv = EntropyDescriptor::total_variation(1.0).unwrap();
        assert!(matches!(EtProblem::new(tv.clone(), vec![vec![0.0]], vec![1.0], vec![1.0]), Err(Error::NotSuperlinear(_))));
        assert!(EtProblem::homogeneous(tv, vec![vec![0.0]], vec![1.0], vec![1.0]).is_ok());
        assert!(EtProblem::new(up(1.0), vec![vec![f64::INFINITY]], vec![1.0], vec![1.0]).is_err());
        assert!(EtProblem::new(up(1.0), vec![vec![0.0]], vec![0.0], vec![1.0]).is_err());
        assert!(EtProblem::new(up(1.0), vec![vec![0.0, 1.0]], vec![1.0], vec![1.0]).is_err());
    }

    #[test]
    fn h_functional_needs_positive_marginals() {
        let pb = EtProblem::new(up(1.0), vec![vec![0.0, 1.0], vec![1.0, 0.0]], vec![1.0, 2.0], vec![1.0, 2.0]).unwrap();
        let plan = TransportPlan::new(vec![vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap();
        assert!(matches!(h_functional(&pb, &plan), Err(Error::Precondition(_))));
        let prod = TransportPlan::new(vec![vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(h_functional(&pb, &prod).unwrap().to_f64() > 0.0);
    }

    #[test]
    fn scalar_instance_matches_cost() {
        let pb = EtProblem::new(up(1.0), vec![vec![1.0]], vec![1.0], vec![1.0]).unwrap();
        let sol = solve(&pb, &SolveOptions::default()).unwrap();
        let h = crate::cone_cost::h_cost_primal(&up(1.0), 1.0, 1.0, 1.0).to_f64();
        assert!((sol.value - h).abs() < 1e-9, "{} vs {h}", sol.value);
        assert!(sol.report.converged);
    }

    #[test]
    fn brute_force_rejects_large_problems() {
        let pb = EtProblem::new(up(2.0), vec![vec![0.0; 3]; 2], vec![1.0; 2], vec![1.0; 3]).unwrap();
        assert!(matches!(brute_force_et(&pb, 10), Err(Error::Usage(_))));
    }
}
