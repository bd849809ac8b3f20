//! Python bindings for the minimal-polynomial Laplacian optimizer. The
//! surface is deliberately small: `optimize` runs the full reduction on an
//! edge list, the result exposes the audit trail, and `plan()` hands back a
//! finite-time averaging plan whose `average` runs the per-node protocol.

use nalgebra::DVector;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use minpoly_core::consensus::{self, ConsensusPlan};
use minpoly_core::graph::Graph;
use minpoly_core::laplacian;
use minpoly_core::minpoly::{self, AlgorithmState};
use minpoly_core::solver::SolverParams;
use minpoly_core::spectral;
use minpoly_core::SymMatrix;

fn graph_from_edges(n: usize, edges: Vec<(usize, usize)>) -> PyResult<Graph> {
    Graph::new(n, edges).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn matrix_rows(m: &SymMatrix) -> Vec<Vec<f64>> {
    let n = m.dim();
    (0..n).map(|i| (0..n).map(|j| m.get(i, j)).collect()).collect()
}

/// A finished optimization run: the final weighted Laplacian plus the
/// pass-by-pass record of how it was reached.
#[pyclass(frozen)]
struct OptimizeResult {
    state: AlgorithmState,
}

#[pymethods]
impl OptimizeResult {
    /// Minimal-polynomial order of the final Laplacian.
    #[getter]
    fn order(&self) -> usize {
        self.state.final_order()
    }

    /// Order of the unweighted starting Laplacian.
    #[getter]
    fn standard_order(&self) -> usize {
        self.state.history().first().map_or(0, |r| r.order)
    }

    /// Number of distinct eigenvalues the run confirmed.
    #[getter]
    fn confirmed(&self) -> usize {
        self.state.xi()
    }

    /// Final Laplacian as a dense list of rows.
    fn laplacian(&self) -> Vec<Vec<f64>> {
        matrix_rows(self.state.laplacian())
    }

    /// Sorted eigenvalues of the final Laplacian.
    fn spectrum(&self) -> Vec<f64> {
        spectral::eigenvalues(self.state.laplacian()).as_slice().to_vec()
    }

    /// Audit rows as `(pass, step, order)` tuples.
    fn history(&self) -> Vec<(usize, String, usize)> {
        self.state
            .history()
            .iter()
            .map(|r| (r.k, r.step.to_string(), r.order))
            .collect()
    }

    /// Builds the finite-time averaging plan for the final Laplacian.
    fn plan(&self) -> PyResult<Plan> {
        let plan = consensus::build_plan(
            self.state.graph(),
            self.state.laplacian(),
            spectral::SPECTRAL_RESOLUTION,
            laplacian::DEFAULT_PROPERTY_TOL,
        )
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
        Ok(Plan { graph: self.state.graph().clone(), plan })
    }

    fn __repr__(&self) -> String {
        format!(
            "OptimizeResult(order={}, standard_order={}, confirmed={})",
            self.state.final_order(),
            self.state.history().first().map_or(0, |r| r.order),
            self.state.xi()
        )
    }
}

/// Finite-time averaging plan: run `rounds` synchronous exchanges, then
/// each node combines its own state history with the `pi` weights.
#[pyclass(frozen)]
struct Plan {
    graph: Graph,
    plan: ConsensusPlan,
}

#[pymethods]
impl Plan {
    /// Number of distinct Perron eigenvalues.
    #[getter]
    fn s(&self) -> usize {
        self.plan.s
    }

    /// Rounds of message passing needed: `s - 1`.
    #[getter]
    fn rounds(&self) -> usize {
        self.plan.s.saturating_sub(1)
    }

    /// Laplacian-to-Perron conversion scale.
    #[getter]
    fn epsilon(&self) -> f64 {
        self.plan.epsilon
    }

    /// Weights applied to each node's state history.
    #[getter]
    fn pi(&self) -> Vec<f64> {
        self.plan.pi.clone()
    }

    /// Perron matrix as a dense list of rows.
    fn perron(&self) -> Vec<Vec<f64>> {
        matrix_rows(&self.plan.p)
    }

    /// Runs the per-node protocol on `z0` and returns every node's output;
    /// for a valid plan all entries equal `mean(z0)` after `rounds` rounds.
    fn average(&self, z0: Vec<f64>) -> PyResult<Vec<f64>> {
        let z0 = DVector::from_vec(z0);
        let (out, _log) = consensus::simulate_distributed(&self.graph, &self.plan, &z0)
            .map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(out.as_slice().to_vec())
    }

    fn __repr__(&self) -> String {
        format!("Plan(s={}, rounds={}, epsilon={:.6})", self.plan.s, self.rounds(), self.plan.epsilon)
    }
}

/// Runs the order-reduction loop on the graph `(n, edges)` and returns the
/// full result. Tolerances default to the benchmark settings.
#[pyfunction]
#[pyo3(signature = (n, edges, *, eps_m=0.01, eps_g=0.01, eps_f=0.01, eps_c=1e-7, eps_mu=0.01))]
fn optimize(
    n: usize,
    edges: Vec<(usize, usize)>,
    eps_m: f64,
    eps_g: f64,
    eps_f: f64,
    eps_c: f64,
    eps_mu: f64,
) -> PyResult<OptimizeResult> {
    let g = graph_from_edges(n, edges)?;
    let cfg = minpoly::Config {
        solver: SolverParams { eps_m, eps_g, eps_f, ..SolverParams::default() },
        eps_c,
        eps_mu,
        ..minpoly::Config::default()
    };
    let state = minpoly::minimize_minimal_polynomial(&g, &cfg)
        .map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(OptimizeResult { state })
}

/// Minimal-polynomial order of the unweighted Laplacian of `(n, edges)`.
#[pyfunction]
fn standard_order(n: usize, edges: Vec<(usize, usize)>) -> PyResult<usize> {
    let g = graph_from_edges(n, edges)?;
    let l = laplacian::standard_laplacian(&g);
    Ok(spectral::minimal_poly_order(&l, spectral::SPECTRAL_RESOLUTION))
}

#[pymodule]
fn minpoly_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<OptimizeResult>()?;
    m.add_class::<Plan>()?;
    m.add_function(wrap_pyfunction!(optimize, m)?)?;
    m.add_function(wrap_pyfunction!(standard_order, m)?)?;
    Ok(())
}
