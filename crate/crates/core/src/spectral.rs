//! Eigen machinery: sorted symmetric eigendecompositions, the fixed/free
//! spectral split driven by the eigenvalue ledger, the structural constraint
//! system in svec coordinates, and eigenvalue clustering.

use std::f64::consts::SQRT_2;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::graph::Graph;
use crate::matrix::{self, SymMatrix};

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("ledger multiplicities total {total}, exceeding dimension {n}")]
    LedgerOverflow { total: usize, n: usize },
}

/// Symmetric eigendecomposition with eigenvalues sorted ascending and the
/// eigenvector columns permuted to match.
#[derive(Debug, Clone)]
pub struct EigDecomp {
    values: DVector<f64>,
    vectors: DMatrix<f64>,
}

impl EigDecomp {
    /// Eigenvalues, ascending.
    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    /// Orthonormal eigenvectors, one column per eigenvalue.
    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn max_value(&self) -> f64 {
        self.values[self.values.len() - 1]
    }
}

/// Full eigendecomposition of a symmetric matrix, sorted ascending.
pub fn sym_eig(m: &SymMatrix) -> EigDecomp {
    let n = m.dim();
    let eig = m.matrix().clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_fn(n, |i, _| eig.eigenvalues[order[i]]);
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    EigDecomp { values, vectors }
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn eigenvalues(m: &SymMatrix) -> DVector<f64> {
    sym_eig(m).values
}

/// One fixed eigenvalue with the multiplicity already secured for it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LedgerEntry {
    pub value: f64,
    pub multiplicity: usize,
}

/// The ordered record of eigenvalues whose positions are locked in: the
/// value zero from the start, and every value a correction step has since
/// pinned down. Entries stay sorted by value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Ledger {
    entries: Vec<LedgerEntry>,
}

impl Ledger {
    /// The initial ledger: only the zero eigenvalue, simple.
    pub fn seed_zero() -> Self {
        Self { entries: vec![LedgerEntry { value: 0.0, multiplicity: 1 }] }
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    pub fn total_multiplicity(&self) -> usize {
        self.entries.iter().map(|e| e.multiplicity).sum()
    }

    /// Values other than the seeded zero, candidates for re-targeting.
    pub fn nonzero_values(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.value).filter(|&v| v != 0.0).collect()
    }

    /// Index of the entry nearest to `value` if within `tol`.
    pub fn find_near(&self, value: f64, tol: f64) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, e) in self.entries.iter().enumerate() {
            let d = (e.value - value).abs();
            if d <= tol && best.map_or(true, |(_, bd)| d < bd) {
                best = Some((i, d));
            }
        }
        best.map(|(i, _)| i)
    }

    /// Records a newly pinned value with its multiplicity.
    pub fn add_new(&mut self, value: f64, multiplicity: usize) {
        self.entries.push(LedgerEntry { value, multiplicity });
        self.entries.sort_by(|a, b| a.value.total_cmp(&b.value));
    }

    /// Grows the multiplicity of an existing entry.
    pub fn increment(&mut self, index: usize, by: usize) {
        self.entries[index].multiplicity += by;
    }
}

/// Eigenvectors and eigenvalues split into the part pinned by the ledger
/// and the part still free to move.
#[derive(Debug, Clone)]
pub struct SpectralPartition {
    fixed_vectors: DMatrix<f64>,
    fixed_values: DVector<f64>,
    free_vectors: DMatrix<f64>,
    free_values: DVector<f64>,
}

impl SpectralPartition {
    pub fn dim(&self) -> usize {
        self.fixed_vectors.nrows()
    }

    /// Number of free eigenvalues.
    pub fn q_bar(&self) -> usize {
        self.free_values.len()
    }

    pub fn fixed_vectors(&self) -> &DMatrix<f64> {
        &self.fixed_vectors
    }

    pub fn fixed_values(&self) -> &DVector<f64> {
        &self.fixed_values
    }

    pub fn free_vectors(&self) -> &DMatrix<f64> {
        &self.free_vectors
    }

    /// Free eigenvalues, ascending.
    pub fn free_values(&self) -> &DVector<f64> {
        &self.free_values
    }

    /// The free eigenvalues as a diagonal block, the natural warm start for
    /// the subproblems.
    pub fn free_diag(&self) -> SymMatrix {
        SymMatrix::from_diagonal(&self.free_values)
    }
}

/// Splits an eigendecomposition into ledger-pinned and free parts. Each
/// ledger entry claims its nearest eigenvalues, one per unit of
/// multiplicity; whatever remains is free. Eigenvalues claimed for the zero
/// entry are clamped to exactly zero.
pub fn partition_spectrum(
    eig: &EigDecomp,
    ledger: &Ledger,
) -> Result<SpectralPartition, SpectralError> {
    let n = eig.dim();
    let total = ledger.total_multiplicity();
    if total > n {
        return Err(SpectralError::LedgerOverflow { total, n });
    }

    let mut claimed = vec![false; n];
    let mut fixed_idx: Vec<usize> = Vec::with_capacity(total);
    let mut fixed_vals: Vec<f64> = Vec::with_capacity(total);
    for entry in ledger.entries() {
        for _ in 0..entry.multiplicity {
            let pick = (0..n)
                .filter(|&i| !claimed[i])
                .min_by(|&a, &b| {
                    let da = (eig.values[a] - entry.value).abs();
                    let db = (eig.values[b] - entry.value).abs();
                    da.total_cmp(&db)
                })
                .expect("free eigenvalue available within multiplicity budget");
            claimed[pick] = true;
            fixed_idx.push(pick);
            fixed_vals.push(if entry.value == 0.0 { 0.0 } else { eig.values[pick] });
        }
    }
    let free_idx: Vec<usize> = (0..n).filter(|&i| !claimed[i]).collect();

    Ok(SpectralPartition {
        fixed_vectors: eig.vectors.select_columns(fixed_idx.iter()),
        fixed_values: DVector::from_vec(fixed_vals),
        free_vectors: eig.vectors.select_columns(free_idx.iter()),
        free_values: DVector::from_fn(free_idx.len(), |i, _| eig.values[free_idx[i]]),
    })
}

/// Rebuilds a full matrix from the pinned part and a free-block matrix `m`
/// expressed in the free eigenbasis.
pub fn reconstruct_h(p: &SpectralPartition, m: &SymMatrix) -> SymMatrix {
    assert_eq!(m.dim(), p.q_bar(), "free block dimension mismatch");
    let fixed = &p.fixed_vectors
        * DMatrix::from_diagonal(&p.fixed_values)
        * p.fixed_vectors.transpose();
    let free = &p.free_vectors * m.matrix() * p.free_vectors.transpose();
    SymMatrix::from_matrix(&(fixed + free))
}

/// The affine system `phi * svec(m) = b` that forces every non-edge entry
/// of the rebuilt matrix to zero.
#[derive(Debug, Clone)]
pub struct StructureSystem {
    phi: DMatrix<f64>,
    b: DVector<f64>,
}

impl StructureSystem {
    /// Builds a system from an explicit matrix and right-hand side.
    pub fn from_parts(phi: DMatrix<f64>, b: DVector<f64>) -> Self {
        assert_eq!(phi.nrows(), b.len(), "row count mismatch");
        Self { phi, b }
    }

    /// The trivial system with no constraints on an `n`-dimensional block.
    pub fn unconstrained(n: usize) -> Self {
        Self { phi: DMatrix::zeros(0, matrix::svec_len(n)), b: DVector::zeros(0) }
    }

    pub fn phi(&self) -> &DMatrix<f64> {
        &self.phi
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn rows(&self) -> usize {
        self.phi.nrows()
    }

    /// Worst-case constraint violation of `m`.
    pub fn residual(&self, m: &SymMatrix) -> f64 {
        if self.rows() == 0 {
            return 0.0;
        }
        (&self.phi * m.svec() - &self.b).amax()
    }
}

/// Assembles one constraint row per non-edge of `g`: the free block must
/// cancel whatever the pinned part leaves on that entry.
pub fn assemble_structure_system(g: &Graph, p: &SpectralPartition) -> StructureSystem {
    let q = p.q_bar();
    let cols = matrix::svec_len(q);
    let non_edges = g.non_edges();
    let fixed_part = &p.fixed_vectors
        * DMatrix::from_diagonal(&p.fixed_values)
        * p.fixed_vectors.transpose();

    let mut phi = DMatrix::zeros(non_edges.len(), cols);
    let mut b = DVector::zeros(non_edges.len());
    for (row, &(i, j)) in non_edges.iter().enumerate() {
        for a in 0..q {
            for bb in a..q {
                let coeff = if a == bb {
                    p.free_vectors[(i, a)] * p.free_vectors[(j, a)]
                } else {
                    (p.free_vectors[(i, a)] * p.free_vectors[(j, bb)]
                        + p.free_vectors[(i, bb)] * p.free_vectors[(j, a)])
                        / SQRT_2
                };
                phi[(row, matrix::svec_index(q, a, bb))] = coeff;
            }
        }
        b[row] = -fixed_part[(i, j)];
    }
    StructureSystem { phi, b }
}

/// Gap below which two eigenvalues of an accepted iterate are treated as the
/// same root when counting the minimal-polynomial order or planning a
/// consensus schedule. Correction steps certify coincident eigenvalues to
/// roughly 1e-6, so this sits a decade above solver noise while staying far
/// below any gap the optimizer would leave between genuinely distinct roots.
pub const SPECTRAL_RESOLUTION: f64 = 1e-5;

/// A run of eigenvalues treated as one: their mean and how many collapsed
/// into it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigCluster {
    pub value: f64,
    pub count: usize,
}

/// Groups values by the adjacent-gap rule: after sorting, a gap wider than
/// `tol` starts a new cluster. Each cluster reports its mean.
pub fn cluster_eigenvalues(values: &[f64], tol: f64) -> Vec<EigCluster> {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let mut clusters = Vec::new();
    let mut start = 0;
    for i in 1..=sorted.len() {
        if i == sorted.len() || sorted[i] - sorted[i - 1] > tol {
            let members = &sorted[start..i];
            clusters.push(EigCluster {
                value: members.iter().sum::<f64>() / members.len() as f64,
                count: members.len(),
            });
            start = i;
        }
    }
    clusters
}

/// Order of the minimal polynomial of a symmetric matrix: the number of
/// eigenvalue clusters at tolerance `tol`.
pub fn minimal_poly_order(m: &SymMatrix, tol: f64) -> usize {
    cluster_eigenvalues(eigenvalues(m).as_slice(), tol).len()
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;

    use super::*;
    use crate::laplacian::standard_laplacian;

    fn path3() -> SymMatrix {
        standard_laplacian(&Graph::new(3, [(0, 1), (1, 2)]).unwrap())
    }

    #[test]
    fn path3_spectrum() {
        let vals = eigenvalues(&path3());
        assert_abs_diff_eq!(vals[0], 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(vals[1], 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(vals[2], 3.0, epsilon = 1e-10);
    }

    #[test]
    fn eig_reconstructs_and_is_orthonormal() {
        let g = Graph::random(7, 0.4, 5).unwrap();
        let l = standard_laplacian(&g);
        let eig = sym_eig(&l);
        let q = eig.vectors();
        let ortho = q.transpose() * q;
        assert!((ortho - DMatrix::identity(7, 7)).amax() < 1e-10);
        let rebuilt = q * DMatrix::from_diagonal(eig.values()) * q.transpose();
        assert!((rebuilt - l.matrix()).amax() < 1e-10);
    }

    #[test]
    fn complete_graph_two_clusters() {
        let l = standard_laplacian(&Graph::complete(8).unwrap());
        let clusters = cluster_eigenvalues(eigenvalues(&l).as_slice(), 0.01);
        assert_eq!(clusters.len(), 2);
        assert_eq!(clusters[0].count, 1);
        assert_eq!(clusters[1].count, 7);
        assert_abs_diff_eq!(clusters[1].value, 8.0, epsilon = 1e-9);
    }

    #[test]
    fn star_and_bipartite_orders() {
        let star = standard_laplacian(&Graph::star(8).unwrap());
        assert_eq!(minimal_poly_order(&star, 0.01), 3);
        let k44 = standard_laplacian(&Graph::complete_bipartite(4, 4).unwrap());
        assert_eq!(minimal_poly_order(&k44, 0.01), 3);
        assert_eq!(minimal_poly_order(&path3(), 0.01), 3);
    }

    #[test]
    fn cluster_gap_rule_chains() {
        let tight = cluster_eigenvalues(&[0.0, 0.009, 0.018], 0.01);
        assert_eq!(tight.len(), 1);
        assert_eq!(tight[0].count, 3);
        let split = cluster_eigenvalues(&[0.02, 0.0, 0.005], 0.01);
        assert_eq!(split.len(), 2);
        assert_eq!(split[0].count, 2);
        assert_eq!(split[1].count, 1);
    }

    #[test]
    fn partition_seed_zero() {
        let l = standard_laplacian(&Graph::complete(8).unwrap());
        let p = partition_spectrum(&sym_eig(&l), &Ledger::seed_zero()).unwrap();
        assert_eq!(p.q_bar(), 7);
        assert_eq!(p.fixed_values()[0], 0.0);
        // The zero eigenvector of any Laplacian is the normalized ones vector.
        let ones = DVector::from_element(8, 1.0 / (8.0_f64).sqrt());
        let aligned = p.fixed_vectors().column(0).dot(&ones).abs();
        assert_abs_diff_eq!(aligned, 1.0, epsilon = 1e-9);
        for v in p.free_values().iter() {
            assert_abs_diff_eq!(*v, 8.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn partition_round_trip_identity() {
        let g = Graph::random(9, 0.45, 21).unwrap();
        let l = standard_laplacian(&g);
        let p = partition_spectrum(&sym_eig(&l), &Ledger::seed_zero()).unwrap();
        let rebuilt = reconstruct_h(&p, &p.free_diag());
        assert!(rebuilt.max_abs_diff(&l) < 1e-8);
    }

    #[test]
    fn partition_full_ledger_leaves_nothing_free() {
        let l = standard_laplacian(&Graph::complete(5).unwrap());
        let mut ledger = Ledger::seed_zero();
        ledger.add_new(5.0, 4);
        let p = partition_spectrum(&sym_eig(&l), &ledger).unwrap();
        assert_eq!(p.q_bar(), 0);
        let rebuilt = reconstruct_h(&p, &SymMatrix::zeros(0));
        assert!(rebuilt.max_abs_diff(&l) < 1e-8);
    }

    #[test]
    fn ledger_overflow_rejected() {
        let l = standard_laplacian(&Graph::complete(3).unwrap());
        let mut ledger = Ledger::seed_zero();
        ledger.add_new(3.0, 3);
        assert!(matches!(
            partition_spectrum(&sym_eig(&l), &ledger),
            Err(SpectralError::LedgerOverflow { total: 4, n: 3 })
        ));
    }

    #[test]
    fn ledger_bookkeeping() {
        let mut ledger = Ledger::seed_zero();
        ledger.add_new(4.0, 2);
        ledger.add_new(1.5, 1);
        assert_eq!(ledger.total_multiplicity(), 4);
        assert_eq!(ledger.nonzero_values(), vec![1.5, 4.0]);
        assert_eq!(ledger.find_near(4.004, 0.01), Some(2));
        assert_eq!(ledger.find_near(4.2, 0.01), None);
        let idx = ledger.find_near(1.5, 1e-12).unwrap();
        ledger.increment(idx, 3);
        assert_eq!(ledger.entries()[idx].multiplicity, 4);
    }

    #[test]
    fn structure_system_satisfied_by_current_spectrum() {
        let g = Graph::new(5, [(0, 1), (1, 2), (2, 3), (3, 4), (0, 4)]).unwrap();
        let l = standard_laplacian(&g);
        let p = partition_spectrum(&sym_eig(&l), &Ledger::seed_zero()).unwrap();
        let sys = assemble_structure_system(&g, &p);
        assert_eq!(sys.rows(), g.non_edges().len());
        assert!(sys.residual(&p.free_diag()) < 1e-9);
    }

    #[test]
    fn structure_system_detects_violation() {
        let g = Graph::star(5).unwrap();
        let l = standard_laplacian(&g);
        let p = partition_spectrum(&sym_eig(&l), &Ledger::seed_zero()).unwrap();
        let sys = assemble_structure_system(&g, &p);
        // The identity in the free basis rebuilds a multiple of I plus the
        // pinned part, which puts nonzeros on star non-edges.
        let m = SymMatrix::identity(p.q_bar());
        let rebuilt = reconstruct_h(&p, &m);
        let mut worst = 0.0_f64;
        for (i, j) in g.non_edges() {
            worst = worst.max(rebuilt.get(i, j).abs());
        }
        assert_abs_diff_eq!(sys.residual(&m), worst, epsilon = 1e-9);
        assert!(worst > 1e-3);
    }

    #[test]
    fn complete_graph_order_two() {
        let l = standard_laplacian(&Graph::complete(8).unwrap());
        assert_eq!(minimal_poly_order(&l, 0.01), 2);
    }
}
