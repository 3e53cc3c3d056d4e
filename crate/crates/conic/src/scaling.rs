//! Nesterov–Todd scaling for a single PSD block.
//!
//! Given `X, Z ≻ 0` the scaling factor `G` satisfies
//! `G⁻¹ X G⁻ᵀ = Gᵀ Z G = Λ` with `Λ` diagonal, and `W = G Gᵀ` is the NT
//! scaling point (`W Z W = X`). Everything in the scaled space is diagonal,
//! so the Lyapunov-type equations of the Newton system decouple entrywise.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

#[derive(Debug, Clone)]
pub(crate) struct NtScaling {
    pub g: DMatrix<f64>,
    pub g_inv: DMatrix<f64>,
    pub w: DMatrix<f64>,
    pub lambda: DVector<f64>,
}

impl NtScaling {
    pub fn new(x: &DMatrix<f64>, z: &DMatrix<f64>) -> Option<Self> {
        let n = x.nrows();
        if n == 1 {
            let (xv, zv) = (x[(0, 0)], z[(0, 0)]);
            if !(xv > 0.0 && zv > 0.0) {
                return None;
            }
            let g = (xv / zv).sqrt().sqrt();
            return Some(Self {
                g: DMatrix::from_element(1, 1, g),
                g_inv: DMatrix::from_element(1, 1, 1.0 / g),
                w: DMatrix::from_element(1, 1, g * g),
                lambda: DVector::from_element(1, (xv * zv).sqrt()),
            });
        }
        let lx = x.clone().cholesky()?.l();
        let lz = z.clone().cholesky()?.l();
        let svd = (lz.transpose() * &lx).svd(false, true);
        let v_t = svd.v_t?;
        let lambda = svd.singular_values;
        if lambda.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
            return None;
        }
        let lx_inv = lx.solve_lower_triangular(&DMatrix::identity(n, n))?;
        let mut g = lx * v_t.transpose();
        let mut g_inv = v_t * lx_inv;
        for k in 0..n {
            let s = lambda[k].sqrt();
            g.column_mut(k).scale_mut(1.0 / s);
            g_inv.row_mut(k).scale_mut(s);
        }
        let w = &g * g.transpose();
        Some(Self {
            g,
            g_inv,
            w,
            lambda,
        })
    }

    /// `G⁻¹ D G⁻ᵀ`: a primal direction in scaled coordinates.
    pub fn scale_primal(&self, d: &DMatrix<f64>) -> DMatrix<f64> {
        &self.g_inv * d * self.g_inv.transpose()
    }

    /// `Gᵀ D G`: a dual direction in scaled coordinates.
    pub fn scale_dual(&self, d: &DMatrix<f64>) -> DMatrix<f64> {
        self.g.transpose() * d * &self.g
    }

    /// Maps a scaled-space matrix back: `G E Gᵀ`.
    pub fn unscale(&self, e: &DMatrix<f64>) -> DMatrix<f64> {
        &self.g * e * self.g.transpose()
    }

    /// `W D W`.
    pub fn sandwich(&self, d: &DMatrix<f64>) -> DMatrix<f64> {
        &self.w * d * &self.w
    }

    /// Largest step `α` with `Λ + α S ⪰ 0` for a scaled direction `S`.
    pub fn max_step(&self, scaled: &DMatrix<f64>) -> f64 {
        let n = self.lambda.len();
        let mut s = scaled.clone();
        for i in 0..n {
            for j in 0..n {
                s[(i, j)] /= (self.lambda[i] * self.lambda[j]).sqrt();
            }
        }
        let min_eig = if n == 1 {
            s[(0, 0)]
        } else {
            let sym = 0.5 * (&s + s.transpose());
            SymmetricEigen::new(sym).eigenvalues.min()
        };
        if min_eig < 0.0 {
            -1.0 / min_eig
        } else {
            f64::INFINITY
        }
    }

    /// Solves `Λ ∘ E = R` (Jordan product) for symmetric `R`.
    pub fn lyapunov_solve(&self, r: &DMatrix<f64>) -> DMatrix<f64> {
        let n = self.lambda.len();
        DMatrix::from_fn(n, n, |i, j| {
            r[(i, j)] * 2.0 / (self.lambda[i] + self.lambda[j])
        })
    }
}
