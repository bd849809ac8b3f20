//! First-order solvers for the three subproblem classes: nuclear-norm
//! minimization with free or prescribed shift (a consensus splitting over
//! the prox/projection oracles), and the Frobenius correction objective
//! (block-coordinate descent with ball-constrained factor updates).

mod affine;
mod correction;
mod nuclear;
mod prox;

pub use affine::{project_affine, AffineProjector};
pub use correction::{solve_opc, solve_opc_warm};
pub use nuclear::{solve_opa, solve_opa_warm, solve_opb, solve_opb_warm};
pub use prox::{project_psd, prox_nuclear};

use nalgebra::DMatrix;
use thiserror::Error;

use crate::matrix::SymMatrix;
use crate::spectral::{self, StructureSystem};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("affine system is inconsistent: pruned rows violate b by {residual}")]
    InfeasibleSystem { residual: f64 },
}

/// Shared knobs for every subproblem solver.
#[derive(Debug, Clone)]
pub struct SolverParams {
    /// PSD margin on M.
    pub eps_m: f64,
    /// Frobenius ball radius for the G factor update.
    pub eps_g: f64,
    /// Frobenius ball radius for the F factor update.
    pub eps_f: f64,
    pub max_iters: usize,
    pub primal_tol: f64,
    pub dual_tol: f64,
    /// Splitting penalty; self-scaled by the warm start's magnitude.
    pub step: f64,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            eps_m: 0.01,
            eps_g: 0.01,
            eps_f: 0.01,
            max_iters: 20_000,
            primal_tol: 1e-7,
            dual_tol: 1e-7,
            step: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    IterationCap,
    InfeasibleDetected,
}

/// Result of any subproblem solve. `lambda` is `None` when the shift was
/// prescribed by the caller; the factor updates are present only for the
/// correction objective.
#[derive(Debug, Clone)]
pub struct SolverOutcome {
    pub lambda: Option<f64>,
    pub m: SymMatrix,
    pub delta_f: Option<DMatrix<f64>>,
    pub delta_g: Option<DMatrix<f64>>,
    pub objective: f64,
    /// Max of the PSD-margin violation and the affine residual at `m`.
    pub feasibility: f64,
    pub iterations: usize,
    /// Objective value after each block sweep (correction solver only).
    pub objective_trace: Vec<f64>,
    pub status: SolveStatus,
}

/// Σ_i |λ − μ_i(M)|, which equals the nuclear norm of λI − M.
pub fn nuclear_objective(lambda: f64, m: &SymMatrix) -> f64 {
    spectral::eigenvalues(m).iter().map(|mu| (lambda - mu).abs()).sum()
}

/// λI − M.
pub(crate) fn shifted_identity(lambda: f64, m: &SymMatrix) -> SymMatrix {
    let n = m.dim();
    SymMatrix::from_matrix(&(DMatrix::identity(n, n) * lambda - m.matrix()))
}

/// Median with the even-count midpoint convention.
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of empty slice");
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Worst violation of the two constraint families at `m`.
pub fn feasibility_residual(m: &SymMatrix, sys: &StructureSystem, eps_m: f64) -> f64 {
    if m.dim() == 0 {
        return 0.0;
    }
    let min_eig = spectral::eigenvalues(m)[0];
    let psd = (eps_m - min_eig).max(0.0);
    psd.max(sys.residual(m))
}
