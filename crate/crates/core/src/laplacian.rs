//! Standard and weighted Laplacians plus the safety checks every iterate of
//! the weight search must keep satisfying.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::graph::Graph;
use crate::matrix::SymMatrix;
use crate::spectral;

/// Shared default tolerance for property verification. Stricter than the
/// solver's feasibility slack, far looser than machine precision.
pub const DEFAULT_PROPERTY_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum LaplacianError {
    #[error("weight given for non-edge ({i}, {j})")]
    WeightOnNonEdge { i: usize, j: usize },
    #[error("matrix dimension {got} does not match graph order {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("entry ({i}, {j}) = {value} violates the structural zero beyond tolerance {tol}")]
    StructuralViolation { i: usize, j: usize, value: f64, tol: f64 },
    #[error("row sums deviate from zero by {worst}, beyond tolerance {tol}")]
    RowSumViolation { worst: f64, tol: f64 },
}

/// Edge weights on a fixed topology. Weights may be zero or negative;
/// connectivity of the weighted Laplacian is always decided spectrally,
/// never from signs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WeightMap {
    w: BTreeMap<(usize, usize), f64>,
}

impl WeightMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = ((usize, usize), f64)>) -> Self {
        let mut m = Self::new();
        for ((i, j), v) in pairs {
            m.set(i, j, v);
        }
        m
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.w.insert((i.min(j), i.max(j)), v);
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.w.get(&(i.min(j), i.max(j))).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.w.iter().map(|(&k, &v)| (k, v))
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }
}

/// Numeric evidence for the Laplacian properties: nonnegative spectrum,
/// simple zero eigenvalue with the all-ones eigenvector, structural zeros
/// on non-edges, and spectral connectivity.
#[derive(Debug, Clone)]
pub struct PropertyReport {
    pub l1_nonneg_eigs: bool,
    pub l2_zero_simple_with_ones: bool,
    pub l3_structural_zeros: bool,
    pub a1_connected_spectrally: bool,
    pub min_eig: f64,
    pub second_eig: f64,
    pub max_structural_violation: f64,
}

impl PropertyReport {
    pub fn all_ok(&self) -> bool {
        self.l1_nonneg_eigs
            && self.l2_zero_simple_with_ones
            && self.l3_structural_zeros
            && self.a1_connected_spectrally
    }
}

/// Standard Laplacian: degree on the diagonal, `-1` on edges.
pub fn standard_laplacian(g: &Graph) -> SymMatrix {
    let n = g.n();
    let mut l = SymMatrix::zeros(n);
    for (i, j) in g.edges() {
        l.set(i, j, -1.0);
    }
    for i in 0..n {
        l.set(i, i, g.degree(i) as f64);
    }
    l
}

/// Weighted Laplacian for weights `w` on `g`. Edges missing from `w` get
/// weight zero. A weight on a non-edge is a structural error.
pub fn weighted_laplacian(g: &Graph, w: &WeightMap) -> Result<SymMatrix, LaplacianError> {
    let n = g.n();
    for ((i, j), _) in w.iter() {
        if !g.has_edge(i, j) {
            return Err(LaplacianError::WeightOnNonEdge { i, j });
        }
    }
    let mut l = SymMatrix::zeros(n);
    let mut degrees = vec![0.0; n];
    for (i, j) in g.edges() {
        let wij = w.get(i, j).unwrap_or(0.0);
        l.set(i, j, -wij);
        degrees[i] += wij;
        degrees[j] += wij;
    }
    for i in 0..n {
        l.set(i, i, degrees[i]);
    }
    Ok(l)
}

/// Recovers the weight map from a Laplacian on `g`: `w_ij = -L_ij` per edge.
/// Rejects matrices whose non-edge entries or row sums exceed `tol`.
pub fn weights_from_laplacian(
    g: &Graph,
    l: &SymMatrix,
    tol: f64,
) -> Result<WeightMap, LaplacianError> {
    if l.dim() != g.n() {
        return Err(LaplacianError::DimensionMismatch { got: l.dim(), expected: g.n() });
    }
    for (i, j) in g.non_edges() {
        let v = l.get(i, j);
        if v.abs() > tol {
            return Err(LaplacianError::StructuralViolation { i, j, value: v, tol });
        }
    }
    let worst_row = l.row_sums().amax();
    if worst_row > tol {
        return Err(LaplacianError::RowSumViolation { worst: worst_row, tol });
    }
    let mut w = WeightMap::new();
    for (i, j) in g.edges() {
        w.set(i, j, -l.get(i, j));
    }
    Ok(w)
}

/// Checks the Laplacian properties at tolerance `tol` and reports the
/// numbers behind each verdict. Never fails; callers decide what a `false`
/// means.
pub fn verify_properties(g: &Graph, l: &SymMatrix, tol: f64) -> PropertyReport {
    let eig = spectral::sym_eig(l);
    let values = eig.values();
    let min_eig = values[0];
    let second_eig = if values.len() > 1 { values[1] } else { f64::INFINITY };

    let ones_residual = l.row_sums().amax();
    let mut max_structural = 0.0_f64;
    for (i, j) in g.non_edges() {
        max_structural = max_structural.max(l.get(i, j).abs());
    }

    PropertyReport {
        l1_nonneg_eigs: min_eig >= -tol,
        l2_zero_simple_with_ones: ones_residual <= tol && second_eig > tol,
        l3_structural_zeros: max_structural <= tol,
        a1_connected_spectrally: second_eig > tol,
        min_eig,
        second_eig,
        max_structural_violation: max_structural,
    }
}
