use nalgebra::{DMatrix, DVector};

use super::SolverError;
use crate::spectral::StructureSystem;

/// Pre-factorized Euclidean projector onto {x : Φx = b}. Rank-deficient
/// rows are pruned through the SVD; pruning is only legal when the system
/// stays consistent, which is checked once at construction.
#[derive(Debug, Clone)]
pub struct AffineProjector {
    /// Orthonormal basis of the row space of Φ, as columns.
    basis: DMatrix<f64>,
    /// Minimum-norm solution of Φx = b.
    x0: DVector<f64>,
}

impl AffineProjector {
    pub fn new(sys: &StructureSystem) -> Result<Self, SolverError> {
        let rows = sys.rows();
        let cols = sys.phi().ncols();
        if rows == 0 {
            return Ok(Self { basis: DMatrix::zeros(cols, 0), x0: DVector::zeros(cols) });
        }
        let svd = sys.phi().clone().svd(true, true);
        let u = svd.u.as_ref().expect("svd u");
        let v_t = svd.v_t.as_ref().expect("svd v_t");
        let smax = svd.singular_values.amax();
        let cut = smax * rows.max(cols) as f64 * f64::EPSILON;
        let kept: Vec<usize> =
            (0..svd.singular_values.len()).filter(|&i| svd.singular_values[i] > cut).collect();

        let mut basis = DMatrix::zeros(cols, kept.len());
        let mut x0 = DVector::zeros(cols);
        for (col, &i) in kept.iter().enumerate() {
            let vi = v_t.row(i).transpose();
            let coeff = u.column(i).dot(sys.b()) / svd.singular_values[i];
            x0.axpy(coeff, &vi, 1.0);
            basis.set_column(col, &vi);
        }

        let residual = (sys.phi() * &x0 - sys.b()).amax();
        if residual > 1e-8 * sys.b().amax().max(1.0) {
            return Err(SolverError::InfeasibleSystem { residual });
        }
        Ok(Self { basis, x0 })
    }

    /// Euclidean projection of `x` onto the affine set.
    pub fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        if self.basis.ncols() == 0 {
            return x.clone();
        }
        let coords = self.basis.transpose() * x;
        x - &self.basis * coords + &self.x0
    }

    /// The minimum-norm feasible point.
    pub fn particular(&self) -> &DVector<f64> {
        &self.x0
    }
}

/// One-shot projection onto {x : Φx = b} for the given system.
pub fn project_affine(x: &DVector<f64>, sys: &StructureSystem) -> Result<DVector<f64>, SolverError> {
    Ok(AffineProjector::new(sys)?.project(x))
}
