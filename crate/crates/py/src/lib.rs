//! Python module `etdiv`.
//!
//! Reports are returned as plain dicts; infinite values inside them appear as
//! the string `"inf"`, scalar results as `float('inf')`.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use serde::Serialize;

use etdiv_core::cone_cost::{self, ConeTriangleOptions, FiniteMetricSpace};
use etdiv_core::divergence_dynamics::{self as dynamics, IterateOptions, SampledFunction};
use etdiv_core::entropy_transport::{self as et, EtProblem, SolveOptions};
use etdiv_core::marginal_perspective::{h_value, MarginalPerspective};
use etdiv_core::metric_check::{self, TriangleOptions};
use etdiv_core::{DiscreteMeasure, EntropyDescriptor, Error};

fn check_exponent(a: f64) -> PyResult<()> {
    if a > 0.0 && a <= 1.0 {
        Ok(())
    } else {
        Err(PyValueError::new_err(format!("exponent a must lie in (0, 1], got {a}")))
    }
}

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Infeasible | Error::SearchFailed(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// An entropy function built from a spec such as `"powerlike:2"` or `"tab:file.txt"`.
#[pyclass(frozen)]
struct Entropy {
    inner: EntropyDescriptor,
}

#[pymethods]
impl Entropy {
    #[new]
    fn new(spec: &str) -> PyResult<Self> {
        Ok(Entropy { inner: spec.parse().map_err(py_err)? })
    }

    fn __call__(&self, s: f64) -> PyResult<f64> {
        if !(s >= 0.0) {
            return Err(PyValueError::new_err(format!("entropy argument must be >= 0, got {s}")));
        }
        Ok(self.inner.eval_f64(s))
    }

    fn derivative(&self, s: f64) -> f64 {
        self.inner.derivative(s)
    }

    fn perspective(&self, r: f64, t: f64) -> f64 {
        self.inner.perspective_f64(r, t)
    }

    fn conjugate(&self, phi: f64) -> f64 {
        self.inner.conjugate(phi)
    }

    fn conjugate_inverse(&self, y: f64) -> PyResult<f64> {
        self.inner.conjugate_inverse(y).map_err(py_err)
    }

    fn reverse(&self) -> Entropy {
        Entropy { inner: self.inner.reverse() }
    }

    /// `{"f0", "fprime0", "fprime_inf", "aff_inf"}` as floats, possibly infinite.
    fn coefficients<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let c = self.inner.coefficients();
        let d = PyDict::new(py);
        d.set_item("f0", c.f0.to_f64())?;
        d.set_item("fprime0", c.fprime0)?;
        d.set_item("fprime_inf", c.fprime_inf.to_f64())?;
        d.set_item("aff_inf", c.aff_inf)?;
        Ok(d)
    }

    fn is_superlinear(&self) -> bool {
        self.inner.is_superlinear()
    }

    fn has_strict_minimum(&self) -> bool {
        self.inner.has_strict_minimum()
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Entropy('{}')", self.inner)
    }
}

/// An `Entropy` object or its spec string.
#[derive(FromPyObject)]
enum EntropyArg {
    Object(Py<Entropy>),
    Spec(String),
}

impl EntropyArg {
    fn get(&self, py: Python<'_>) -> PyResult<EntropyDescriptor> {
        match self {
            EntropyArg::Object(e) => Ok(e.bind(py).get().inner.clone()),
            EntropyArg::Spec(s) => s.parse().map_err(py_err),
        }
    }
}

#[pyfunction]
fn power_mean(p: f64, r: f64, t: f64) -> f64 {
    etdiv_core::power_mean(p, r, t)
}

/// `D_F(mu1 || mu2)` for two mass vectors on the same points.
#[pyfunction]
fn f_divergence(py: Python<'_>, entropy: EntropyArg, mu1: Vec<f64>, mu2: Vec<f64>) -> PyResult<f64> {
    let f = entropy.get(py)?;
    let a = DiscreteMeasure::from_masses("X", &mu1).map_err(py_err)?;
    let b = DiscreteMeasure::from_masses("X", &mu2).map_err(py_err)?;
    Ok(etdiv_core::f_divergence(&f, &a, &b).map_err(py_err)?.to_f64())
}

/// The marginal perspective `H_F(r, t)`.
#[pyfunction]
fn marginal_perspective(py: Python<'_>, entropy: EntropyArg, r: f64, t: f64) -> PyResult<f64> {
    Ok(h_value(&entropy.get(py)?, r, t).to_f64())
}

/// `H_c(r, t)` from the primal formula, or the dual one with `dual=True`.
#[pyfunction]
#[pyo3(signature = (entropy, c, r, t, dual = false))]
fn h_cost(py: Python<'_>, entropy: EntropyArg, c: f64, r: f64, t: f64, dual: bool) -> PyResult<f64> {
    if !(c >= 0.0 && r >= 0.0 && t >= 0.0) {
        return Err(PyValueError::new_err("cost and masses must be nonnegative"));
    }
    let f = entropy.get(py)?;
    Ok(if dual { cone_cost::h_cost_dual(&f, c, r, t) } else { cone_cost::h_cost_primal(&f, c, r, t) }.to_f64())
}

#[pyfunction]
fn h_p_cone(p: f64, d: f64, r: f64, t: f64) -> f64 {
    cone_cost::h_p_cone(p, d, r, t).to_f64()
}

#[pyfunction]
fn h_bar_p(p: f64, d: f64, r: f64, t: f64) -> f64 {
    cone_cost::h_bar_p(p, d, r, t)
}

#[pyfunction]
fn metric_transform(p: f64, d: f64) -> f64 {
    cone_cost::metric_transform(p, d)
}

#[pyfunction]
fn cone_metric(d: f64, r1: f64, r2: f64) -> f64 {
    cone_cost::cone_metric(d, r1, r2)
}

#[pyfunction]
fn theta_p(p: f64, r: f64, t: f64) -> f64 {
    cone_cost::theta_p(p, r, t)
}

#[pyfunction]
#[pyo3(signature = (entropy, a = 0.5, grid = 200, pairs = 1000, seed = metric_check::DEFAULT_SEED))]
fn check_costless_triangle<'py>(
    py: Python<'py>,
    entropy: EntropyArg,
    a: f64,
    grid: usize,
    pairs: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    check_exponent(a)?;
    let mp = MarginalPerspective::new(entropy.get(py)?);
    let opts = TriangleOptions { grid, random_pairs: pairs, seed, ..Default::default() };
    let rep = metric_check::check_costless_triangle(|r, t| mp.eval_f64(r, t), a, &opts);
    to_py(py, &rep)
}

#[pyfunction]
#[pyo3(signature = (entropy, a = 0.5, samples = 200))]
fn monotonicity_certificate<'py>(py: Python<'py>, entropy: EntropyArg, a: f64, samples: usize) -> PyResult<Bound<'py, PyAny>> {
    check_exponent(a)?;
    let mp = MarginalPerspective::new(entropy.get(py)?);
    let rep = metric_check::monotonicity_certificate(|r, t| mp.eval_f64(r, t), a, samples);
    to_py(py, &rep)
}

#[pyfunction]
#[pyo3(signature = (entropy, a_lo = 0.05, a_hi = 1.0))]
fn max_metric_power(py: Python<'_>, entropy: EntropyArg, a_lo: f64, a_hi: f64) -> PyResult<Option<f64>> {
    check_exponent(a_lo)?;
    check_exponent(a_hi)?;
    let mp = MarginalPerspective::new(entropy.get(py)?);
    Ok(metric_check::max_metric_power(|r, t| mp.eval_f64(r, t), a_lo, a_hi, &TriangleOptions::default()))
}

/// Triangle audit of `sqrt(H_p)` on the cone over the given distance matrix.
#[pyfunction]
#[pyo3(signature = (p, distances, samples = 10_000, seed = metric_check::DEFAULT_SEED, stress = true))]
fn check_cone_triangle<'py>(
    py: Python<'py>,
    p: f64,
    distances: Vec<Vec<f64>>,
    samples: usize,
    seed: u64,
    stress: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let x = FiniteMetricSpace::new(distances).map_err(py_err)?;
    let opts = ConeTriangleOptions { samples, seed, stress, ..Default::default() };
    to_py(py, &cone_cost::check_cone_triangle(p, &x, &opts).map_err(py_err)?)
}

#[pyfunction]
fn counterexample_p_below_one<'py>(py: Python<'py>, p: f64) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &cone_cost::counterexample_p_below_one(p).map_err(py_err)?)
}

/// Audits the final inequality on `grid x grid` log grids (`u = e^-x`, `v = e^x`).
#[pyfunction]
#[pyo3(signature = (p, grid = 100))]
fn final_inequality_check<'py>(py: Python<'py>, p: f64, grid: usize) -> PyResult<Bound<'py, PyAny>> {
    let n = grid.max(2);
    let (lo, hi) = (1e-3f64.ln(), 10f64.ln());
    let xs: Vec<f64> = (0..n).map(|i| (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp()).collect();
    let us: Vec<f64> = xs.iter().map(|x| (-x).exp()).collect();
    let vs: Vec<f64> = xs.iter().map(|x| x.exp()).collect();
    to_py(py, &cone_cost::final_inequality_check(p, &us, &vs).map_err(py_err)?)
}

/// Iterates `T_a` and returns the limit samples with the run report.
#[pyfunction]
#[pyo3(signature = (entropy, a = 1.0, symmetrize = false, nodes = dynamics::DEFAULT_NODES, s_max = dynamics::DEFAULT_S_MAX, max_iters = 500, tol = 1e-8))]
#[allow(clippy::too_many_arguments)]
fn iterate_t<'py>(
    py: Python<'py>,
    entropy: EntropyArg,
    a: f64,
    symmetrize: bool,
    nodes: usize,
    s_max: f64,
    max_iters: usize,
    tol: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let f = entropy.get(py)?;
    let sampled = if symmetrize {
        SampledFunction::from_fn(|s| h_value(&f, 1.0, s).to_f64(), s_max, nodes)
    } else {
        SampledFunction::from_fn(|s| f.eval_f64(s), s_max, nodes)
    }
    .map_err(py_err)?;
    let (lim, rep) = dynamics::iterate_t(&sampled, a, IterateOptions { max_iters, tol, keep_trace: false }).map_err(py_err)?;
    #[derive(Serialize)]
    struct Out<'a> {
        nodes: &'a [f64],
        values: Vec<etdiv_core::ExtendedValue>,
        #[serde(flatten)]
        report: &'a dynamics::IterationReport,
    }
    to_py(py, &Out { nodes: lim.nodes(), values: lim.values(), report: &rep })
}

fn problem(py: Python<'_>, entropy: EntropyArg, cost: Vec<Vec<f64>>, mu1: Vec<f64>, mu2: Vec<f64>) -> PyResult<EtProblem> {
    EtProblem::new(entropy.get(py)?, cost, mu1, mu2).map_err(py_err)
}

/// Solves the discrete entropy-transport problem; use `float('inf')` for forbidden pairs.
#[pyfunction]
#[pyo3(signature = (entropy, cost, mu1, mu2, tol = et::TOL_SOLVE, max_iters = et::MAX_ITERS))]
fn solve_et<'py>(
    py: Python<'py>,
    entropy: EntropyArg,
    cost: Vec<Vec<f64>>,
    mu1: Vec<f64>,
    mu2: Vec<f64>,
    tol: f64,
    max_iters: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let pb = problem(py, entropy, cost, mu1, mu2)?;
    let sol = et::solve(&pb, &SolveOptions { tol, max_iters }).map_err(py_err)?;
    to_py(py, &etdiv_core::io::SolutionFile::from_solution(&sol))
}

#[pyfunction]
#[pyo3(signature = (entropy, cost, mu1, mu2, grid = 30))]
fn brute_force_et<'py>(
    py: Python<'py>,
    entropy: EntropyArg,
    cost: Vec<Vec<f64>>,
    mu1: Vec<f64>,
    mu2: Vec<f64>,
    grid: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let pb = problem(py, entropy, cost, mu1, mu2)?;
    to_py(py, &et::brute_force_et(&pb, grid).map_err(py_err)?)
}

#[pymodule]
fn etdiv(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Entropy>()?;
    m.add_function(wrap_pyfunction!(power_mean, m)?)?;
    m.add_function(wrap_pyfunction!(f_divergence, m)?)?;
    m.add_function(wrap_pyfunction!(marginal_perspective, m)?)?;
    m.add_function(wrap_pyfunction!(h_cost, m)?)?;
    m.add_function(wrap_pyfunction!(h_p_cone, m)?)?;
    m.add_function(wrap_pyfunction!(h_bar_p, m)?)?;
    m.add_function(wrap_pyfunction!(metric_transform, m)?)?;
    m.add_function(wrap_pyfunction!(cone_metric, m)?)?;
    m.add_function(wrap_pyfunction!(theta_p, m)?)?;
    m.add_function(wrap_pyfunction!(check_costless_triangle, m)?)?;
    m.add_function(wrap_pyfunction!(monotonicity_certificate, m)?)?;
    m.add_function(wrap_pyfunction!(max_metric_power, m)?)?;
    m.add_function(wrap_pyfunction!(check_cone_triangle, m)?)?;
    m.add_function(wrap_pyfunction!(counterexample_p_below_one, m)?)?;
    m.add_function(wrap_pyfunction!(final_inequality_check, m)?)?;
    m.add_function(wrap_pyfunction!(iterate_t, m)?)?;
    m.add_function(wrap_pyfunction!(solve_et, m)?)?;
    m.add_function(wrap_pyfunction!(brute_force_et, m)?)?;
    Ok(())
}
