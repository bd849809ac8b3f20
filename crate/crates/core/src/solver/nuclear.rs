use nalgebra::DVector;

use super::affine::AffineProjector;
use super::prox::{project_psd_with_spectrum, prox_nuclear_sym};
use super::{
    feasibility_residual, median, nuclear_objective, shifted_identity, SolveStatus, SolverOutcome,
    SolverParams,
};
use crate::matrix::SymMatrix;
use crate::spectral::StructureSystem;

#[derive(Clone, Copy)]
enum Shift {
    Free,
    Fixed(f64),
}

/// Minimizes ‖λI − M‖_* over M ⪰ eps_m·I and Φ svec(M) = b with λ free.
pub fn solve_opa(sys: &StructureSystem, qbar: usize, params: &SolverParams) -> SolverOutcome {
    solve_opa_warm(sys, qbar, None, params)
}

/// As [`solve_opa`] with an explicit diagonal warm start (the current free
/// eigenvalues).
pub fn solve_opa_warm(
    sys: &StructureSystem,
    qbar: usize,
    warm: Option<&DVector<f64>>,
    params: &SolverParams,
) -> SolverOutcome {
    solve_nuclear(sys, qbar, warm, Shift::Free, params)
}

/// Same problem with λ prescribed; the outcome's `lambda` is `None`.
pub fn solve_opb(
    lambda: f64,
    sys: &StructureSystem,
    qbar: usize,
    params: &SolverParams,
) -> SolverOutcome {
    solve_opb_warm(lambda, sys, qbar, None, params)
}

pub fn solve_opb_warm(
    lambda: f64,
    sys: &StructureSystem,
    qbar: usize,
    warm: Option<&DVector<f64>>,
    params: &SolverParams,
) -> SolverOutcome {
    solve_nuclear(sys, qbar, warm, Shift::Fixed(lambda), params)
}

// Consensus splitting over three copies: the nuclear prox (through the
// shift), the PSD-margin cone, and the affine subspace. The shift, when
// free, is refreshed every pass with its exact minimizer, the median of the
// current spectrum.
fn solve_nuclear(
    sys: &StructureSystem,
    qbar: usize,
    warm: Option<&DVector<f64>>,
    shift: Shift,
    params: &SolverParams,
) -> SolverOutcome {
    let report_lambda = |l: f64| match shift {
        Shift::Free => Some(l),
        Shift::Fixed(_) => None,
    };
    if qbar == 0 {
        return SolverOutcome {
            lambda: report_lambda(0.0),
            m: SymMatrix::zeros(0),
            delta_f: None,
            delta_g: None,
            objective: 0.0,
            feasibility: 0.0,
            iterations: 0,
            objective_trace: Vec::new(),
            status: SolveStatus::Converged,
        };
    }

    let warm_diag = match warm {
        Some(d) => d.clone(),
        None => DVector::from_element(qbar, params.eps_m.max(1.0)),
    };
    let m0 = SymMatrix::from_diagonal(&warm_diag);
    let mut lambda = match shift {
        Shift::Fixed(l) => l,
        Shift::Free => median(warm_diag.as_slice()),
    };

    let projector = match AffineProjector::new(sys) {
        Ok(p) => p,
        Err(_) => {
            let feasibility = feasibility_residual(&m0, sys, params.eps_m);
            return SolverOutcome {
                lambda: report_lambda(lambda),
                m: m0,
                delta_f: None,
                delta_g: None,
                objective: f64::INFINITY,
                feasibility,
                iterations: 0,
                objective_trace: Vec::new(),
                status: SolveStatus::InfeasibleDetected,
            };
        }
    };

    let dim = m0.svec().len();
    let mut z = m0.svec();
    let mut u1 = DVector::zeros(dim);
    let mut u2 = DVector::zeros(dim);
    let mut u3 = DVector::zeros(dim);
    let mut rho = params.step / warm_diag.amax().max(1.0);

    let mut m_out = m0;
    let mut status = SolveStatus::IterationCap;
    let mut iterations = params.max_iters;
    let mut best_residual = f64::INFINITY;
    let mut stalled = 0_usize;

    for it in 1..=params.max_iters {
        let v1 = SymMatrix::from_svec(&(&z - &u1));
        let x1 = shifted_identity(lambda, &prox_nuclear_sym(&shifted_identity(lambda, &v1), 1.0 / rho))
            .svec();

        let v2 = SymMatrix::from_svec(&(&z - &u2));
        let (p2, spec2) = project_psd_with_spectrum(&v2, params.eps_m);
        let x2 = p2.svec();

        let x3 = projector.project(&(&z - &u3));

        let z_new = (&x1 + &u1 + &x2 + &u2 + &x3 + &u3) / 3.0;
        u1 += &x1 - &z_new;
        u2 += &x2 - &z_new;
        u3 += &x3 - &z_new;

        let primal = (&x1 - &z_new)
            .amax()
            .max((&x2 - &z_new).amax())
            .max((&x3 - &z_new).amax());
        let dual = rho * (&z_new - &z).amax();
        z = z_new;

        if let Shift::Free = shift {
            lambda = median(&spec2);
        }

        if primal <= params.primal_tol && dual <= params.dual_tol {
            let candidate = SymMatrix::from_svec(&x3);
            if feasibility_residual(&candidate, sys, params.eps_m) <= 10.0 * params.primal_tol {
                m_out = candidate;
                status = SolveStatus::Converged;
                iterations = it;
                break;
            }
        }

        if it % 20 == 0 {
            if primal > 10.0 * dual && rho < 1e8 {
                rho *= 2.0;
                u1 /= 2.0;
                u2 /= 2.0;
                u3 /= 2.0;
            } else if dual > 10.0 * primal && rho > 1e-8 {
                rho /= 2.0;
                u1 *= 2.0;
                u2 *= 2.0;
                u3 *= 2.0;
            }
        }

        // Residual plateaus mean the iterates are drifting along a flat
        // direction of the objective; cut the run short and report the
        // current structurally exact iterate instead of chasing the tail.
        let score = primal.max(dual);
        if score < best_residual * (1.0 - 1e-3) {
            best_residual = score;
            stalled = 0;
        } else {
            stalled += 1;
        }
        if (stalled >= 500 && it >= 500) || it == params.max_iters {
            m_out = SymMatrix::from_svec(&x3);
            iterations = it;
            break;
        }
    }

    if let Shift::Free = shift {
        lambda = median(crate::spectral::eigenvalues(&m_out).as_slice());
    }
    let objective = nuclear_objective(lambda, &m_out);
    let feasibility = feasibility_residual(&m_out, sys, params.eps_m);
    SolverOutcome {
        lambda: report_lambda(lambda),
        m: m_out,
        delta_f: None,
        delta_g: None,
        objective,
        feasibility,
        iterations,
        objective_trace: Vec::new(),
        status,
    }
}
