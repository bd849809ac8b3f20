//! Iterative reduction of the minimal-polynomial order of a graph
//! Laplacian. Each pass pins down one more repeated eigenvalue: a free-shift
//! nuclear solve proposes a brand-new eigenvalue with multiplicity, a
//! fixed-shift solve tries to grow the multiplicity of an already-confirmed
//! one, and a factor-correction refinement makes the winning bunch exact.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::graph::Graph;
use crate::laplacian;
use crate::matrix::SymMatrix;
use crate::solver::{self, SolveStatus, SolverParams};
use crate::spectral::{self, Ledger, SpectralPartition, StructureSystem};

/// Residual threshold scale for accepting a correction: the factorization
/// residual must drop below `eps_c * q̄`.
pub const DEFAULT_EPS_C: f64 = 1e-7;
/// Radius used to decide that eigenvalues bunch around a shift.
pub const DEFAULT_EPS_MU: f64 = 0.01;
/// Maximum number of correction rounds per branch.
pub const DEFAULT_ETA_MAX: usize = 50;

#[derive(Debug, Clone)]
pub struct Config {
    pub solver: SolverParams,
    pub eps_c: f64,
    pub eps_mu: f64,
    pub eta_max: usize,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            solver: SolverParams::default(),
            eps_c: DEFAULT_EPS_C,
            eps_mu: DEFAULT_EPS_MU,
            eta_max: DEFAULT_ETA_MAX,
        }
    }
}

#[derive(Debug, Error)]
pub enum MinpolyError {
    #[error("graph is disconnected; the second-smallest eigenvalue must be positive")]
    Disconnected,
}

/// Which routine produced the Laplacian recorded in a history row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepLabel {
    StandardLaplacian,
    Opa,
    CosOpa,
    Opb,
    CosOpb,
    Terminated,
}

impl fmt::Display for StepLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            StepLabel::StandardLaplacian => "Standard Laplacian",
            StepLabel::Opa => "OPA",
            StepLabel::CosOpa => "COS of OPA",
            StepLabel::Opb => "OPB",
            StepLabel::CosOpb => "COS of OPB",
            StepLabel::Terminated => "Terminated",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone)]
pub struct HistoryRow {
    pub k: usize,
    pub step: StepLabel,
    pub spectrum: Vec<f64>,
    pub order: usize,
}

/// Full record of a run: the final Laplacian plus everything needed to
/// audit how it was reached.
#[derive(Debug, Clone)]
pub struct AlgorithmState {
    graph: Graph,
    laplacian: SymMatrix,
    ledger: Ledger,
    history: Vec<HistoryRow>,
    iterates: Vec<SymMatrix>,
}

impl AlgorithmState {
    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn laplacian(&self) -> &SymMatrix {
        &self.laplacian
    }

    pub fn ledger(&self) -> &Ledger {
        &self.ledger
    }

    /// Number of distinct confirmed eigenvalues.
    pub fn xi(&self) -> usize {
        self.ledger.entries().len()
    }

    pub fn history(&self) -> &[HistoryRow] {
        &self.history
    }

    /// Every accepted Laplacian, starting with the standard one.
    pub fn iterates(&self) -> &[SymMatrix] {
        &self.iterates
    }

    pub fn final_order(&self) -> usize {
        self.history.last().map(|r| r.order).unwrap_or(0)
    }
}

/// Counts eigenvalues of `m` strictly within `eps_mu` of `lambda`.
pub fn detect_bunch(lambda: f64, m: &SymMatrix, eps_mu: f64) -> usize {
    spectral::eigenvalues(m)
        .iter()
        .filter(|mu| (*mu - lambda).abs() < eps_mu)
        .count()
}

/// Frobenius distance from `lambda·I − m` to the nearest matrix of rank
/// `m.dim() − ell`: the norm of its `ell` smallest-magnitude eigenvalues.
fn rank_gap_residual(lambda: f64, m: &SymMatrix, ell: usize) -> f64 {
    let mut mags: Vec<f64> = spectral::eigenvalues(m)
        .iter()
        .map(|mu| (lambda - mu).abs())
        .collect();
    mags.sort_by(f64::total_cmp);
    mags.iter().take(ell).map(|v| v * v).sum::<f64>().sqrt()
}

#[derive(Debug, Clone)]
pub struct CosResult {
    pub lambda: f64,
    pub m: SymMatrix,
    pub residual: f64,
    pub eta: usize,
    pub success: bool,
}

/// Correction rounds: factor `lambda·I − m` as a low-rank product `F·G'`,
/// then alternate the constrained solve with small factor updates until the
/// factorization residual certifies the rank drop (multiplicity `ell` of
/// `lambda` in the returned matrix). `freeze_lambda` pins the shift, as
/// required when reinforcing an already-confirmed eigenvalue.
pub fn cos_correction(
    lambda0: f64,
    m0: &SymMatrix,
    ell: usize,
    freeze_lambda: bool,
    sys: &StructureSystem,
    cfg: &Config,
) -> CosResult {
    let qbar = m0.dim();
    let rank = qbar.saturating_sub(ell);
    let shifted = solver::shifted_identity(lambda0, m0);
    let eig = spectral::sym_eig(&shifted);

    // Signed square-root factors of the dominant rank-(q̄−ℓ) part: for a
    // symmetric, possibly indefinite matrix the singular directions are the
    // eigenvectors with signs folded into one factor.
    let mut order: Vec<usize> = (0..qbar).collect();
    order.sort_by(|&a, &b| eig.values()[b].abs().total_cmp(&eig.values()[a].abs()));
    let mut f = DMatrix::<f64>::zeros(qbar, rank);
    let mut g = DMatrix::<f64>::zeros(qbar, rank);
    for (c, &i) in order.iter().take(rank).enumerate() {
        let mu = eig.values()[i];
        let w = mu.abs().sqrt();
        let col = eig.vectors().column(i);
        f.set_column(c, &(&col * w));
        g.set_column(c, &(&col * (w * mu.signum())));
    }

    let threshold = cfg.eps_c * qbar.max(1) as f64;
    let mut lambda = lambda0;
    let mut m = m0.clone();
    let mut residual = f64::INFINITY;
    let mut stalled = 0_usize;
    let mut rounds = 0_usize;
    // Track the best state seen rather than the last: rounds after the
    // threshold is crossed keep shaving the residual (and with it the
    // eigenvalue spread the rest of the pipeline inherits), but individual
    // factor updates are allowed to overshoot.
    let mut best: Option<CosResult> = None;

    for eta in 1..=cfg.eta_max {
        rounds = eta;
        let out = solver::solve_opc_warm(lambda, !freeze_lambda, &f, &g, sys, Some(&m), &cfg.solver);
        if out.status == SolveStatus::InfeasibleDetected {
            break;
        }
        lambda = out.lambda.unwrap_or(lambda);
        m = out.m;
        f += out.delta_f.expect("correction deltas present");
        g += out.delta_g.expect("correction deltas present");
        residual = (solver::shifted_identity(lambda, &m).matrix() - &f * g.transpose()).norm();
        let improved = best.as_ref().map_or(true, |b| residual < b.residual * (1.0 - 1e-4));
        if improved {
            best = Some(CosResult {
                lambda,
                m: m.clone(),
                residual,
                eta,
                success: residual < threshold,
            });
            stalled = 0;
        } else {
            stalled += 1;
        }
        let certified = best.as_ref().is_some_and(|b| b.success);
        // Once certified, keep going only while the polish pays for itself;
        // two more decades of residual is the usual yield.
        if (certified && (stalled >= 2 || residual < threshold * 1e-3)) || stalled >= 10 {
            break;
        }
    }

    best.unwrap_or(CosResult { lambda, m, residual, eta: rounds, success: false })
}

/// Largest within-cluster eigenvalue range at `resolution`, ignoring the
/// cluster that holds the zero eigenvalue (its spread is not reducible on
/// the Laplacian manifold: zero is pinned by the row sums).
fn bunch_spread(l: &SymMatrix, resolution: f64) -> f64 {
    let values = spectral::eigenvalues(l);
    let clusters = spectral::cluster_eigenvalues(values.as_slice(), resolution);
    let mut spread = 0.0_f64;
    let mut idx = 0;
    for c in &clusters {
        if c.count >= 2 && c.value.abs() > resolution {
            spread = spread.max(values[idx + c.count - 1] - values[idx]);
        }
        idx += c.count;
    }
    spread
}

/// Sharpens certified bunches by Newton steps over the edge weights: the
/// correction rounds stop at the certification threshold, and the leftover
/// within-bunch spread (around `eps_c` on the Laplacian scale) is what the
/// finite-time consensus stage would otherwise inherit as output error.
///
/// Per-eigenvalue derivatives are useless here: inside a near-degenerate
/// cluster the eigenvectors mix at exactly the scale being corrected. The
/// sound linearization is the block one. With `V` an orthonormal basis of a
/// cluster and `t` its mean, asking the perturbed block `V'(L + δL)V` to
/// equal `t·I` constrains the off-diagonal mixing as well; for a weight
/// step on edge `(a, b)` the block perturbation is `u u'` with
/// `u = V'(e_a − e_b)`. Solving all block equations for the minimum-norm
/// `δw` keeps symmetry, row sums, and non-edge zeros exact by construction,
/// and steps are accepted only while the measured spread shrinks.
fn coalesce_bunches(g: &Graph, l: &SymMatrix, resolution: f64) -> SymMatrix {
    let mut best = l.clone();
    let mut best_spread = bunch_spread(&best, resolution);
    if best_spread <= 1e-13 {
        return best;
    }
    let edges: Vec<(usize, usize)> = g.edges().collect();
    let mut current = best.clone();
    for _ in 0..4 {
        let eig = spectral::sym_eig(&current);
        let clusters = spectral::cluster_eigenvalues(eig.values().as_slice(), resolution);

        let mut rows: Vec<DVector<f64>> = Vec::new();
        let mut rhs: Vec<f64> = Vec::new();
        let mut idx = 0;
        for c in &clusters {
            if c.count >= 2 && c.value.abs() > resolution {
                let v = eig.vectors().columns(idx, c.count);
                let block = v.transpose() * current.matrix() * v;
                // u_e per edge: the cluster-basis image of the weight bump.
                let us: Vec<DVector<f64>> = edges
                    .iter()
                    .map(|&(a, b)| (v.row(a) - v.row(b)).transpose())
                    .collect();
                for p in 0..c.count {
                    for q in p..c.count {
                        let want = if p == q { c.value } else { 0.0 };
                        rhs.push(want - (block[(p, q)] + block[(q, p)]) / 2.0);
                        rows.push(DVector::from_fn(edges.len(), |e, _| us[e][p] * us[e][q]));
                    }
                }
            }
            idx += c.count;
        }
        if rows.is_empty() {
            break;
        }
        let j = DMatrix::from_fn(rows.len(), edges.len(), |r, e| rows[r][e]);
        let r = DVector::from_vec(rhs);
        let Ok(delta) = j.svd(true, true).solve(&r, 1e-10) else { break };
        let mut next = current.matrix().clone();
        for (e, &(a, b)) in edges.iter().enumerate() {
            let dw = delta[e];
            next[(a, a)] += dw;
            next[(b, b)] += dw;
            next[(a, b)] -= dw;
            next[(b, a)] -= dw;
        }
        current = SymMatrix::from_matrix(&next);
        let spread = bunch_spread(&current, resolution);
        if spread < best_spread {
            best = current.clone();
            best_spread = spread;
        }
        if spread <= 1e-13 {
            break;
        }
    }
    best
}

#[derive(Debug, Clone)]
enum BranchKind {
    NewEigenvalue,
    Reinforce(usize),
}

#[derive(Debug, Clone)]
struct BranchOutcome {
    kind: BranchKind,
    label: StepLabel,
    lambda: f64,
    m: SymMatrix,
    r: usize,
    ell: usize,
}

/// Free-shift branch: propose a brand-new eigenvalue. Succeeds only when
/// the solve bunches at least two free eigenvalues at a shift that is well
/// clear of every confirmed value.
fn run_opa_branch(
    partition: &SpectralPartition,
    sys: &StructureSystem,
    ledger: &Ledger,
    cfg: &Config,
) -> Option<BranchOutcome> {
    let qbar = partition.q_bar();
    let out = solver::solve_opa_warm(sys, qbar, Some(partition.free_values()), &cfg.solver);
    if out.status == SolveStatus::InfeasibleDetected {
        return None;
    }
    let mut lambda0 = out.lambda?;
    let mut m0 = out.m;

    // When only the zero eigenvalue is pinned the constraint system is
    // homogeneous, so feasible iterates form a cone and the solver settles
    // at an arbitrary small multiple of its start. The bunch pattern is all
    // that matters; normalize the scale back to the free spectrum's median
    // before measuring anything, so the eps_mu window and the consensus
    // conversion keep the meaning they have on a standard Laplacian.
    if sys.rows() > 0 && sys.b().amax() == 0.0 && lambda0 > 0.0 {
        let anchor = solver::median(partition.free_values().as_slice());
        let c = anchor / lambda0;
        if c.is_finite() && c > 0.0 && (c - 1.0).abs() > 1e-3 {
            lambda0 *= c;
            m0 = SymMatrix::from_matrix(&(m0.matrix() * c));
        }
    }
    let ell0 = detect_bunch(lambda0, &m0, cfg.eps_mu);
    if ell0 < 2 {
        return None;
    }
    if ledger.find_near(lambda0, 2.0 * cfg.eps_mu).is_some() {
        return None;
    }

    let threshold = cfg.eps_c * qbar as f64;
    let (label, lambda, m) = if rank_gap_residual(lambda0, &m0, ell0) < threshold {
        (StepLabel::Opa, lambda0, m0)
    } else {
        let cos = cos_correction(lambda0, &m0, ell0, false, sys, cfg);
        if !cos.success {
            return None;
        }
        (StepLabel::CosOpa, cos.lambda, cos.m)
    };

    let ell = detect_bunch(lambda, &m, cfg.eps_mu);
    if ell < 2 || ledger.find_near(lambda, 2.0 * cfg.eps_mu).is_some() {
        return None;
    }
    Some(BranchOutcome {
        kind: BranchKind::NewEigenvalue,
        label,
        lambda,
        m,
        r: qbar - ell + 1,
        ell,
    })
}

/// Fixed-shift branch: try each confirmed nonzero eigenvalue as the shift
/// and keep the candidate that absorbs the most free eigenvalues.
fn run_opb_branch(
    partition: &SpectralPartition,
    sys: &StructureSystem,
    ledger: &Ledger,
    cfg: &Config,
) -> Option<BranchOutcome> {
    let qbar = partition.q_bar();
    let threshold = cfg.eps_c * qbar as f64;
    let mut best: Option<BranchOutcome> = None;

    for (idx, entry) in ledger.entries().iter().enumerate() {
        if entry.value == 0.0 {
            continue;
        }
        let lambda = entry.value;
        let out =
            solver::solve_opb_warm(lambda, sys, qbar, Some(partition.free_values()), &cfg.solver);
        if out.status == SolveStatus::InfeasibleDetected {
            continue;
        }
        let ell0 = detect_bunch(lambda, &out.m, cfg.eps_mu);
        if ell0 < 1 {
            continue;
        }

        let (label, m) = if rank_gap_residual(lambda, &out.m, ell0) < threshold {
            (StepLabel::Opb, out.m)
        } else {
            let cos = cos_correction(lambda, &out.m, ell0, true, sys, cfg);
            if !cos.success {
                continue;
            }
            (StepLabel::CosOpb, cos.m)
        };

        let ell = detect_bunch(lambda, &m, cfg.eps_mu);
        if ell < 1 {
            continue;
        }
        let r = qbar - ell;
        if best.as_ref().map_or(true, |b| r < b.r) {
            best = Some(BranchOutcome {
                kind: BranchKind::Reinforce(idx),
                label,
                lambda,
                m,
                r,
                ell,
            });
        }
    }
    best
}

fn sorted_spectrum(l: &SymMatrix) -> Vec<f64> {
    spectral::eigenvalues(l).as_slice().to_vec()
}

/// Runs the full reduction loop and returns the audit trail. The returned
/// order never exceeds the standard Laplacian's, and every accepted iterate
/// is a valid Laplacian for `g`.
pub fn minimize_minimal_polynomial(
    g: &Graph,
    cfg: &Config,
) -> Result<AlgorithmState, MinpolyError> {
    if !g.is_connected() {
        return Err(MinpolyError::Disconnected);
    }
    let n = g.n();
    let mut laplacian_k = laplacian::standard_laplacian(g);
    let mut ledger = Ledger::seed_zero();
    let mut history = Vec::new();
    let mut iterates = vec![laplacian_k.clone()];
    // Orders are counted at the solver-noise resolution, not at eps_mu: a
    // bunch only counts as merged once a correction has actually pinned it,
    // which is what downstream consensus scheduling relies on.
    let mut order = spectral::minimal_poly_order(&laplacian_k, spectral::SPECTRAL_RESOLUTION);
    history.push(HistoryRow {
        k: 0,
        step: StepLabel::StandardLaplacian,
        spectrum: sorted_spectrum(&laplacian_k),
        order,
    });

    for k in 1..=2 * n {
        let eig = spectral::sym_eig(&laplacian_k);
        let Ok(partition) = spectral::partition_spectrum(&eig, &ledger) else {
            break;
        };
        let qbar = partition.q_bar();
        if qbar == 0 {
            history.push(HistoryRow {
                k,
                step: StepLabel::Terminated,
                spectrum: sorted_spectrum(&laplacian_k),
                order,
            });
            break;
        }
        let sys = spectral::assemble_structure_system(g, &partition);

        let opa = run_opa_branch(&partition, &sys, &ledger, cfg);
        let opb = run_opb_branch(&partition, &sys, &ledger, cfg);

        // Rank candidates by the resulting free-block order contribution;
        // ties go to reinforcement, which keeps the distinct count lower.
        let mut candidates: Vec<BranchOutcome> = Vec::new();
        match (opa, opb) {
            (Some(a), Some(b)) => {
                if a.r < b.r {
                    candidates.push(a);
                    candidates.push(b);
                } else {
                    candidates.push(b);
                    candidates.push(a);
                }
            }
            (Some(a), None) => candidates.push(a),
            (None, Some(b)) => candidates.push(b),
            (None, None) => {}
        }

        let mut accepted = false;
        for branch in candidates {
            if branch.r >= qbar {
                continue;
            }
            let candidate = spectral::reconstruct_h(&partition, &branch.m);
            let report = laplacian::verify_properties(g, &candidate, 1e-6);
            let cand_order =
                spectral::minimal_poly_order(&candidate, spectral::SPECTRAL_RESOLUTION);
            if !report.all_ok() || cand_order >= order {
                continue;
            }
            // Sharpen the accepted iterate's bunches, but never at the cost
            // of the order or the Laplacian properties.
            let candidate = {
                let polished = coalesce_bunches(g, &candidate, spectral::SPECTRAL_RESOLUTION);
                let same_order = spectral::minimal_poly_order(
                    &polished,
                    spectral::SPECTRAL_RESOLUTION,
                ) == cand_order;
                if same_order && laplacian::verify_properties(g, &polished, 1e-6).all_ok() {
                    polished
                } else {
                    candidate
                }
            };
            match branch.kind {
                BranchKind::NewEigenvalue => ledger.add_new(branch.lambda, branch.ell),
                BranchKind::Reinforce(idx) => ledger.increment(idx, branch.ell),
            }
            laplacian_k = candidate;
            order = cand_order;
            iterates.push(laplacian_k.clone());
            history.push(HistoryRow {
                k,
                step: branch.label,
                spectrum: sorted_spectrum(&laplacian_k),
                order,
            });
            accepted = true;
            break;
        }

        if !accepted {
            history.push(HistoryRow {
                k,
                step: StepLabel::Terminated,
                spectrum: sorted_spectrum(&laplacian_k),
                order,
            });
            break;
        }
    }

    if history.last().map(|r| r.step) != Some(StepLabel::Terminated) {
        let k = history.last().map(|r| r.k).unwrap_or(0) + 1;
        history.push(HistoryRow {
            k,
            step: StepLabel::Terminated,
            spectrum: sorted_spectrum(&laplacian_k),
            order,
        });
    }

    Ok(AlgorithmState {
        graph: g.clone(),
        laplacian: laplacian_k,
        ledger,
        history,
        iterates,
    })
}
