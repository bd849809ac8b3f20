//! Finite-time averaging on top of an optimized Laplacian: convert to a
//! Perron matrix, derive the weighted-sum coefficients from its distinct
//! eigenvalues, and check the result both centrally and through a
//! synchronous per-node message simulation.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::dd::Dd;
use crate::graph::Graph;
use crate::matrix::SymMatrix;
use crate::spectral;

#[derive(Debug, Error)]
pub enum ConsensusError {
    #[error("spectral radius {lambda_max:.3e} is not above {tol:.3e}")]
    DegenerateLaplacian { lambda_max: f64, tol: f64 },
    #[error("eigenvalues {a} and {b} are closer than the separation floor")]
    DuplicateEigenvalues { a: f64, b: f64 },
    #[error("eigenvalue {value} lies outside (-1, 1]")]
    SpectrumOutOfRange { value: f64 },
    #[error("expected exactly one unit eigenvalue, found {count}")]
    UnitEigenvalueCount { count: usize },
    #[error("entry ({i}, {j}) = {value:.3e} is nonzero across a non-edge")]
    TopologyMismatch { i: usize, j: usize, value: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("coefficient solve stalled at residual {residual:.3e}")]
    IllConditioned { residual: f64 },
}

/// Everything a network needs to average in finitely many rounds: the
/// Perron matrix, the number `s` of its distinct eigenvalues, and the
/// weights applied to the first `s` states of each node.
#[derive(Debug, Clone)]
pub struct ConsensusPlan {
    pub p: SymMatrix,
    pub s: usize,
    pub pi: Vec<f64>,
    pub epsilon: f64,
}

/// One value sent over one directed edge in one synchronous round.
#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    pub round: usize,
    pub from: usize,
    pub to: usize,
    pub value: f64,
}

/// Maps a Laplacian to `P = I − εL` with `ε = 1/λ_max`, which places the
/// spectrum of `P` in [0, 1] with the unit eigenvalue simple. Choosing ε
/// from the spectrum rather than from degrees keeps this valid for
/// negative edge weights.
pub fn perron_from_laplacian(
    l: &SymMatrix,
    tol: f64,
) -> Result<(SymMatrix, f64), ConsensusError> {
    let lambda_max = spectral::sym_eig(l).max_value();
    if !(lambda_max > tol) {
        return Err(ConsensusError::DegenerateLaplacian { lambda_max, tol });
    }
    let epsilon = 1.0 / lambda_max;
    let n = l.dim();
    let p = SymMatrix::from_matrix(&(DMatrix::identity(n, n) - l.matrix() * epsilon));
    Ok((p, epsilon))
}

const SEPARATION_FLOOR: f64 = 1e-6;
const UNIT_TOL: f64 = 1e-9;

/// Solves the power-sum system over the distinct eigenvalues: find π with
/// Σ_ℓ π_ℓ λ^ℓ equal to 1 at λ = 1 and 0 at every other eigenvalue. The
/// coefficients come from Newton interpolation over Leja-ordered nodes
/// (much better conditioned than a raw dense solve once a dozen or more
/// eigenvalues crowd into [0, 1]), polished by residual-checked refinement.
pub fn consensus_coefficients(distinct: &[f64]) -> Result<Vec<f64>, ConsensusError> {
    let s = distinct.len();
    let mut units = 0;
    for (a, &va) in distinct.iter().enumerate() {
        if (va - 1.0).abs() <= UNIT_TOL {
            units += 1;
        } else if va >= 1.0 || va <= -1.0 {
            return Err(ConsensusError::SpectrumOutOfRange { value: va });
        }
        for &vb in distinct.iter().skip(a + 1) {
            if (va - vb).abs() <= SEPARATION_FLOOR {
                return Err(ConsensusError::DuplicateEigenvalues { a: va, b: vb });
            }
        }
    }
    if units != 1 {
        return Err(ConsensusError::UnitEigenvalueCount { count: units });
    }
    let target = |v: f64| if (v - 1.0).abs() <= UNIT_TOL { 1.0 } else { 0.0 };

    // Leja ordering: start from the largest-magnitude node, then greedily
    // pick the node with the largest distance product to those already
    // placed. This keeps the divided differences tame when nodes cluster.
    let mut order: Vec<usize> = Vec::with_capacity(s);
    let mut remaining: Vec<usize> = (0..s).collect();
    let first = (0..s)
        .max_by(|&a, &b| distinct[a].abs().total_cmp(&distinct[b].abs()))
        .expect("nonempty spectrum");
    order.push(first);
    remaining.retain(|&i| i != first);
    while !remaining.is_empty() {
        let log_product = |i: usize| -> f64 {
            order.iter().map(|&k| (distinct[i] - distinct[k]).abs().ln()).sum()
        };
        let best = remaining
            .iter()
            .copied()
            .max_by(|&a, &b| log_product(a).total_cmp(&log_product(b)))
            .expect("nonempty remainder");
        order.push(best);
        remaining.retain(|&i| i != best);
    }
    let x: Vec<f64> = order.iter().map(|&i| distinct[i]).collect();

    // Divided differences of the indicator data over the ordered nodes,
    // then Horner expansion of the Newton form into monomial coefficients.
    // Both run in compensated two-float arithmetic: past a dozen nodes the
    // expansion cancels catastrophically in plain doubles, and the residual
    // gate below needs an evaluation it can trust.
    let mut c: Vec<Dd> = x.iter().map(|&v| Dd::new(target(v))).collect();
    for j in 1..s {
        for i in (j..s).rev() {
            c[i] = c[i].sub(c[i - 1]).div(Dd::diff(x[i], x[i - j]));
        }
    }
    let mut acc: Vec<Dd> = vec![Dd::ZERO; s];
    acc[0] = c[s - 1];
    for (k, &xk) in x.iter().enumerate().take(s - 1).rev() {
        for m in (1..=(s - 1 - k)).rev() {
            acc[m] = acc[m - 1].sub(acc[m].mul_f64(xk));
        }
        acc[0] = c[k].sub(acc[0].mul_f64(xk));
    }
    let mut pi = DVector::<f64>::from_iterator(s, acc.iter().map(|d| d.value()));

    // Residuals are measured against the raw power basis because that is
    // exactly how the weighted sum is accumulated at run time; evaluating
    // them in the same compensated arithmetic means the gate reflects the
    // delivered coefficients rather than evaluation noise.
    let targets: Vec<f64> = distinct.iter().map(|&v| target(v)).collect();
    let residual_vec =
        |pi: &DVector<f64>| -> DVector<f64> { -power_defects(pi.as_slice(), distinct, &targets) };
    let lu = DMatrix::from_fn(s, s, |i, j| distinct[i].powi(j as i32)).lu();
    let mut r = residual_vec(&pi);
    let mut residual = r.amax();
    for _ in 0..4 {
        if residual <= 1e-12 {
            break;
        }
        let Some(corr) = lu.solve(&r) else { break };
        let candidate = &pi + corr;
        let cand_r = residual_vec(&candidate);
        let cand_residual = cand_r.amax();
        if cand_residual < residual {
            pi = candidate;
            r = cand_r;
            residual = cand_residual;
        } else {
            break;
        }
    }
    if residual > 1e-8 {
        return Err(ConsensusError::IllConditioned { residual });
    }
    Ok(pi.as_slice().to_vec())
}

/// `Σ_ℓ pi_ℓ x_i^ℓ − target_i` per point, with the Horner recurrence run in
/// compensated arithmetic so the result reflects the coefficients and not
/// the evaluation.
fn power_defects(pi: &[f64], xs: &[f64], targets: &[f64]) -> DVector<f64> {
    DVector::from_fn(xs.len(), |i, _| {
        let mut p = Dd::ZERO;
        for &coeff in pi.iter().rev() {
            p = p.mul_f64(xs[i]).add(Dd::new(coeff));
        }
        p.sub(Dd::new(targets[i])).value()
    })
}

/// Builds the full plan for `l` on `g`: Perron conversion, exact zeroing of
/// non-edge entries (so the per-node and centralized computations agree
/// bitwise), eigenvalue clustering at `resolution` (a Laplacian-scale gap,
/// converted to the Perron scale through ε), and the coefficient solve. The
/// top cluster representative is snapped to 1. Exactness requires merging
/// only gaps the optimizer has certified as coincident, so `resolution`
/// should stay near [`spectral::SPECTRAL_RESOLUTION`].
///
/// Unlike [`perron_from_laplacian`], the plan uses the two-sided scale
/// ε = 2/(λ_max + λ₂), placing the nonzero spectrum symmetrically about
/// zero rather than in [0, 1]. Any ε in (0, 2/λ_max) preserves distinct
/// counts; the symmetric band is what keeps the power-basis coefficients
/// representable in doubles once fifteen or more distinct eigenvalues
/// survive, where the one-sided layout's coefficients outgrow the residual
/// gate by orders of magnitude.
pub fn build_plan(
    g: &Graph,
    l: &SymMatrix,
    resolution: f64,
    tol: f64,
) -> Result<ConsensusPlan, ConsensusError> {
    let spectrum = spectral::eigenvalues(l);
    let lambda_max = spectrum[spectrum.len() - 1];
    if !(lambda_max > tol) {
        return Err(ConsensusError::DegenerateLaplacian { lambda_max, tol });
    }
    let lambda_2 = spectrum[1].max(0.0);
    let epsilon = 2.0 / (lambda_max + lambda_2);
    let n = l.dim();
    let mut p = SymMatrix::from_matrix(&(DMatrix::identity(n, n) - l.matrix() * epsilon));
    for (i, j) in g.non_edges() {
        p.set(i, j, 0.0);
    }
    let values = spectral::eigenvalues(&p);
    let clusters = spectral::cluster_eigenvalues(values.as_slice(), resolution * epsilon);
    let mut reps: Vec<f64> = clusters.iter().map(|c| c.value).collect();
    if let Some(last) = reps.last_mut() {
        *last = 1.0;
    }
    let pi = consensus_coefficients(&reps)?;
    Ok(ConsensusPlan { p, s: reps.len(), pi, epsilon })
}

/// Row-by-row product accumulated in ascending column order, matching the
/// per-node simulator's arithmetic exactly.
fn row_major_matvec(p: &SymMatrix, z: &DVector<f64>) -> DVector<f64> {
    let n = p.dim();
    DVector::from_fn(n, |i, _| {
        let mut acc = 0.0;
        for j in 0..n {
            acc += p.get(i, j) * z[j];
        }
        acc
    })
}

/// Centralized reference: computes `z(ℓ) = P^ℓ z0` and the weighted sum
/// Σ_ℓ π_ℓ z(ℓ), whose entries all equal mean(z0) for a valid plan.
pub fn finite_time_consensus(p: &SymMatrix, pi: &[f64], z0: &DVector<f64>) -> DVector<f64> {
    let mut z = z0.clone();
    let mut out = DVector::from_fn(z0.len(), |i, _| pi.first().map_or(0.0, |c| c * z[i]));
    for &coeff in pi.iter().skip(1) {
        z = row_major_matvec(p, &z);
        for i in 0..out.len() {
            out[i] += coeff * z[i];
        }
    }
    out
}

/// Runs the synchronous protocol for exactly `plan.s − 1` rounds.
pub fn simulate_distributed(
    g: &Graph,
    plan: &ConsensusPlan,
    z0: &DVector<f64>,
) -> Result<(DVector<f64>, Vec<Message>), ConsensusError> {
    simulate_rounds(g, plan, z0, plan.s.saturating_sub(1))
}

/// Per-node simulation for an arbitrary round count. Each node sees only
/// its own Perron row over N_i ∪ {i} and its state history; every received
/// value is logged. When `rounds` is below `s − 1` the weighted sum is
/// truncated to the available history, which is exactly the failure mode
/// the step-count check exercises.
pub fn simulate_rounds(
    g: &Graph,
    plan: &ConsensusPlan,
    z0: &DVector<f64>,
    rounds: usize,
) -> Result<(DVector<f64>, Vec<Message>), ConsensusError> {
    let n = g.n();
    if plan.p.dim() != n {
        return Err(ConsensusError::DimensionMismatch { expected: n, got: plan.p.dim() });
    }
    if z0.len() != n {
        return Err(ConsensusError::DimensionMismatch { expected: n, got: z0.len() });
    }
    for (i, j) in g.non_edges() {
        let value = plan.p.get(i, j);
        if value != 0.0 {
            return Err(ConsensusError::TopologyMismatch { i, j, value });
        }
    }

    let neighborhoods: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            let mut local = g.neighbors(i);
            local.push(i);
            local.sort_unstable();
            local
        })
        .collect();

    let mut histories: Vec<Vec<f64>> = (0..n).map(|i| vec![z0[i]]).collect();
    let mut log = Vec::with_capacity(rounds * 2 * g.edge_count());

    for round in 1..=rounds {
        let mut next = vec![0.0_f64; n];
        for i in 0..n {
            let mut acc = 0.0;
            for &j in &neighborhoods[i] {
                let value = histories[j][round - 1];
                if j != i {
                    log.push(Message { round, from: j, to: i, value });
                }
                acc += plan.p.get(i, j) * value;
            }
            next[i] = acc;
        }
        for (i, v) in next.into_iter().enumerate() {
            histories[i].push(v);
        }
    }

    let terms = plan.pi.len().min(rounds + 1);
    let outputs = DVector::from_fn(n, |i, _| {
        let mut acc = 0.0;
        for ell in 0..terms {
            acc += plan.pi[ell] * histories[i][ell];
        }
        acc
    });
    Ok((outputs, log))
}
