//! Small dense helpers shared by the model, builder and simulator.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// PD threshold for boundary covariances and Σ_k.
pub const EPS_PD: f64 = 1e-10;

/// Scale-aware PSD tolerance `1e-8 (1 + ‖S‖_F)`.
pub fn eps_psd(s: &DMatrix<f64>) -> f64 {
    1e-8 * (1.0 + s.norm())
}

pub fn symmetrize(s: &DMatrix<f64>) -> DMatrix<f64> {
    (s + s.transpose()) * 0.5
}

pub fn is_symmetric(s: &DMatrix<f64>) -> bool {
    s.is_square() && (s - s.transpose()).norm() <= 1e-9 * (1.0 + s.norm())
}

/// Smallest eigenvalue of the symmetric part.
pub fn min_eigenvalue(s: &DMatrix<f64>) -> f64 {
    if s.nrows() == 0 {
        return f64::INFINITY;
    }
    SymmetricEigen::new(symmetrize(s)).eigenvalues.min()
}

pub fn max_eigenvalue(s: &DMatrix<f64>) -> f64 {
    if s.nrows() == 0 {
        return f64::NEG_INFINITY;
    }
    SymmetricEigen::new(symmetrize(s)).eigenvalues.max()
}

/// Symmetric square root of a PSD matrix; negative eigenvalues are clipped.
pub fn psd_sqrt(s: &DMatrix<f64>) -> DMatrix<f64> {
    let e = SymmetricEigen::new(symmetrize(s));
    let d = e.eigenvalues.map(|v| v.max(0.0).sqrt());
    &e.eigenvectors * DMatrix::from_diagonal(&d) * e.eigenvectors.transpose()
}

/// Projects onto the PSD cone by zeroing negative eigenvalues.
pub fn clip_psd(s: &DMatrix<f64>) -> DMatrix<f64> {
    let e = SymmetricEigen::new(symmetrize(s));
    let d = e.eigenvalues.map(|v| v.max(0.0));
    symmetrize(&(&e.eigenvectors * DMatrix::from_diagonal(&d) * e.eigenvectors.transpose()))
}

/// Solves `X S = L` for `X` with `S` symmetric PD, i.e. `X = L S⁻¹`.
pub fn right_solve_spd(l: &DMatrix<f64>, s: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let chol = symmetrize(s).cholesky()?;
    Some(chol.solve(&l.transpose()).transpose())
}

pub fn outer(v: &DVector<f64>) -> DMatrix<f64> {
    v * v.transpose()
}
