//! Problem data: dynamics, boundary moments, weights, and policies.
//!
//! The system is
//!
//! ```text
//! x_{k+1} = A_k x_k + B_k u_k + d_k + w_k
//!           + Σ_ℓ (Ā_{k,ℓ} x_k δ_{k,ℓ} + B̄_{k,ℓ} u_k γ_{k,ℓ})
//! ```
//!
//! with `Cov[w_k] = W_k` and unit-variance, zero-mean scalars `δ`, `γ`.
//! All types validate on construction and are immutable afterwards.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{eps_psd, is_symmetric, min_eigenvalue, symmetrize, EPS_PD};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("horizon must be at least 1")]
    ZeroHorizon,
    #[error("{what}: expected {expected} entries, found {found}")]
    SequenceLength {
        what: String,
        expected: usize,
        found: usize,
    },
    #[error("{what}: expected {expected_rows}x{expected_cols}, found {rows}x{cols}")]
    Shape {
        what: String,
        expected_rows: usize,
        expected_cols: usize,
        rows: usize,
        cols: usize,
    },
    #[error("{what} is not symmetric")]
    NotSymmetric { what: String },
    #[error("{what} is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { what: String, min_eigenvalue: f64 },
    #[error("{what} is not positive definite (min eigenvalue {min_eigenvalue:e})")]
    NotPd { what: String, min_eigenvalue: f64 },
    #[error("{what} contains non-finite values")]
    NonFinite { what: String },
    #[error("step {k} outside horizon {horizon}")]
    StepOutOfRange { k: usize, horizon: usize },
}

pub(crate) fn check_shape(
    what: impl Fn() -> String,
    m: &DMatrix<f64>,
    rows: usize,
    cols: usize,
) -> Result<(), ModelError> {
    if m.nrows() != rows || m.ncols() != cols {
        return Err(ModelError::Shape {
            what: what(),
            expected_rows: rows,
            expected_cols: cols,
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(ModelError::NonFinite { what: what() });
    }
    Ok(())
}

pub(crate) fn check_vector(
    what: impl Fn() -> String,
    v: &DVector<f64>,
    len: usize,
) -> Result<(), ModelError> {
    if v.len() != len {
        return Err(ModelError::Shape {
            what: what(),
            expected_rows: len,
            expected_cols: 1,
            rows: v.len(),
            cols: 1,
        });
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(ModelError::NonFinite { what: what() });
    }
    Ok(())
}

fn check_len<T>(what: &str, v: &[T], len: usize) -> Result<(), ModelError> {
    if v.len() != len {
        return Err(ModelError::SequenceLength {
            what: what.to_string(),
            expected: len,
            found: v.len(),
        });
    }
    Ok(())
}

pub(crate) fn check_psd(what: impl Fn() -> String, s: &DMatrix<f64>) -> Result<(), ModelError> {
    if !is_symmetric(s) {
        return Err(ModelError::NotSymmetric { what: what() });
    }
    let min = min_eigenvalue(s);
    if min < -eps_psd(s) {
        return Err(ModelError::NotPsd {
            what: what(),
            min_eigenvalue: min,
        });
    }
    Ok(())
}

pub(crate) fn check_pd(what: impl Fn() -> String, s: &DMatrix<f64>) -> Result<(), ModelError> {
    if !is_symmetric(s) {
        return Err(ModelError::NotSymmetric { what: what() });
    }
    let min = min_eigenvalue(s);
    if min <= EPS_PD {
        return Err(ModelError::NotPd {
            what: what(),
            min_eigenvalue: min,
        });
    }
    Ok(())
}

/// Time-varying matrices of the dynamics over a horizon of `N` steps with
/// `M` multiplicative channels.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemDynamics {
    n: usize,
    m: usize,
    a: Vec<DMatrix<f64>>,
    b: Vec<DMatrix<f64>>,
    d: Vec<DVector<f64>>,
    w: Vec<DMatrix<f64>>,
    abar: Vec<Vec<DMatrix<f64>>>,
    bbar: Vec<Vec<DMatrix<f64>>>,
}

impl SystemDynamics {
    pub fn new(
        a: Vec<DMatrix<f64>>,
        b: Vec<DMatrix<f64>>,
        d: Vec<DVector<f64>>,
        w: Vec<DMatrix<f64>>,
        abar: Vec<Vec<DMatrix<f64>>>,
        bbar: Vec<Vec<DMatrix<f64>>>,
    ) -> Result<Self, ModelError> {
        let horizon = a.len();
        if horizon == 0 {
            return Err(ModelError::ZeroHorizon);
        }
        let n = a[0].nrows();
        let m = b.first().map_or(0, |b| b.ncols());
        check_len("B", &b, horizon)?;
        check_len("d", &d, horizon)?;
        check_len("W", &w, horizon)?;
        check_len("Abar", &abar, horizon)?;
        check_len("Bbar", &bbar, horizon)?;
        let channels = abar[0].len();
        for k in 0..horizon {
            check_shape(|| format!("A[{k}]"), &a[k], n, n)?;
            check_shape(|| format!("B[{k}]"), &b[k], n, m)?;
            check_vector(|| format!("d[{k}]"), &d[k], n)?;
            check_shape(|| format!("W[{k}]"), &w[k], n, n)?;
            check_psd(|| format!("W[{k}]"), &w[k])?;
            check_len(&format!("Abar[{k}]"), &abar[k], channels)?;
            check_len(&format!("Bbar[{k}]"), &bbar[k], channels)?;
            for l in 0..channels {
                check_shape(|| format!("Abar[{k}][{l}]"), &abar[k][l], n, n)?;
                check_shape(|| format!("Bbar[{k}][{l}]"), &bbar[k][l], n, m)?;
            }
        }
        let w = w.iter().map(symmetrize).collect();
        Ok(Self {
            n,
            m,
            a,
            b,
            d,
            w,
            abar,
            bbar,
        })
    }

    /// Replicates one set of matrices over `horizon` steps.
    pub fn time_invariant(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        d: DVector<f64>,
        w: DMatrix<f64>,
        abar: Vec<DMatrix<f64>>,
        bbar: Vec<DMatrix<f64>>,
        horizon: usize,
    ) -> Result<Self, ModelError> {
        Self::new(
            vec![a; horizon],
            vec![b; horizon],
            vec![d; horizon],
            vec![w; horizon],
            vec![abar; horizon],
            vec![bbar; horizon],
        )
    }

    pub fn state_dim(&self) -> usize {
        self.n
    }
    pub fn input_dim(&self) -> usize {
        self.m
    }
    pub fn horizon(&self) -> usize {
        self.a.len()
    }
    pub fn channels(&self) -> usize {
        self.abar[0].len()
    }
    pub fn a(&self, k: usize) -> &DMatrix<f64> {
        &self.a[k]
    }
    pub fn b(&self, k: usize) -> &DMatrix<f64> {
        &self.b[k]
    }
    pub fn d(&self, k: usize) -> &DVector<f64> {
        &self.d[k]
    }
    pub fn w(&self, k: usize) -> &DMatrix<f64> {
        &self.w[k]
    }
    pub fn abar(&self, k: usize) -> &[DMatrix<f64>] {
        &self.abar[k]
    }
    pub fn bbar(&self, k: usize) -> &[DMatrix<f64>] {
        &self.bbar[k]
    }

    pub(crate) fn check_step(&self, k: usize) -> Result<(), ModelError> {
        if k >= self.horizon() {
            return Err(ModelError::StepOutOfRange {
                k,
                horizon: self.horizon(),
            });
        }
        Ok(())
    }
}

/// Initial and desired state moments.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryMoments {
    mu0: DVector<f64>,
    sigma0: DMatrix<f64>,
    mud: DVector<f64>,
    sigmad: DMatrix<f64>,
}

impl BoundaryMoments {
    pub fn new(
        mu0: DVector<f64>,
        sigma0: DMatrix<f64>,
        mud: DVector<f64>,
        sigmad: DMatrix<f64>,
    ) -> Result<Self, ModelError> {
        let n = mu0.len();
        check_vector(|| "mu0".into(), &mu0, n)?;
        check_vector(|| "mud".into(), &mud, n)?;
        check_shape(|| "Sigma0".into(), &sigma0, n, n)?;
        check_shape(|| "Sigmad".into(), &sigmad, n, n)?;
        check_pd(|| "Sigma0".into(), &sigma0)?;
        check_pd(|| "Sigmad".into(), &sigmad)?;
        Ok(Self {
            mu0,
            sigma0: symmetrize(&sigma0),
            mud,
            sigmad: symmetrize(&sigmad),
        })
    }

    pub fn mu0(&self) -> &DVector<f64> {
        &self.mu0
    }
    pub fn sigma0(&self) -> &DMatrix<f64> {
        &self.sigma0
    }
    pub fn mud(&self) -> &DVector<f64> {
        &self.mud
    }
    pub fn sigmad(&self) -> &DMatrix<f64> {
        &self.sigmad
    }
}

/// Running-cost weights: `R_k ≻ 0`, `Q_k ⪰ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostWeights {
    q: Vec<DMatrix<f64>>,
    r: Vec<DMatrix<f64>>,
}

impl CostWeights {
    pub fn new(q: Vec<DMatrix<f64>>, r: Vec<DMatrix<f64>>) -> Result<Self, ModelError> {
        check_len("R", &r, q.len())?;
        for (k, (qk, rk)) in q.iter().zip(&r).enumerate() {
            check_shape(|| format!("Q[{k}]"), qk, qk.nrows(), qk.nrows())?;
            check_shape(|| format!("R[{k}]"), rk, rk.nrows(), rk.nrows())?;
            check_psd(|| format!("Q[{k}]"), qk)?;
            check_pd(|| format!("R[{k}]"), rk)?;
        }
        Ok(Self {
            q: q.iter().map(symmetrize).collect(),
            r: r.iter().map(symmetrize).collect(),
        })
    }

    pub fn constant(q: DMatrix<f64>, r: DMatrix<f64>, horizon: usize) -> Result<Self, ModelError> {
        Self::new(vec![q; horizon], vec![r; horizon])
    }

    pub fn q(&self, k: usize) -> &DMatrix<f64> {
        &self.q[k]
    }
    pub fn r(&self, k: usize) -> &DMatrix<f64> {
        &self.r[k]
    }
    pub fn horizon(&self) -> usize {
        self.q.len()
    }

    /// The same weights with every `R_k` multiplied by `factor`.
    pub fn with_scaled_r(&self, factor: f64) -> Self {
        Self {
            q: self.q.clone(),
            r: self.r.iter().map(|r| r * factor).collect(),
        }
    }
}

/// Terminal covariance equality (`Exact`) or Löwner upper bound (`Relaxed`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SteeringMode {
    Exact,
    Relaxed,
}

impl std::fmt::Display for SteeringMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SteeringMode::Exact => "exact",
            SteeringMode::Relaxed => "relaxed",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    dynamics: SystemDynamics,
    boundary: BoundaryMoments,
    weights: CostWeights,
    mode: SteeringMode,
}

impl ProblemInstance {
    pub fn new(
        dynamics: SystemDynamics,
        boundary: BoundaryMoments,
        weights: CostWeights,
        mode: SteeringMode,
    ) -> Result<Self, ModelError> {
        let (n, m, horizon) = (
            dynamics.state_dim(),
            dynamics.input_dim(),
            dynamics.horizon(),
        );
        check_vector(|| "mu0".into(), boundary.mu0(), n)?;
        check_len("Q", &weights.q, horizon)?;
        for k in 0..horizon {
            check_shape(|| format!("Q[{k}]"), weights.q(k), n, n)?;
            check_shape(|| format!("R[{k}]"), weights.r(k), m, m)?;
        }
        Ok(Self {
            dynamics,
            boundary,
            weights,
            mode,
        })
    }

    pub fn dynamics(&self) -> &SystemDynamics {
        &self.dynamics
    }
    pub fn boundary(&self) -> &BoundaryMoments {
        &self.boundary
    }
    pub fn weights(&self) -> &CostWeights {
        &self.weights
    }
    pub fn mode(&self) -> SteeringMode {
        self.mode
    }
    pub fn horizon(&self) -> usize {
        self.dynamics.horizon()
    }

    pub fn with_mode(&self, mode: SteeringMode) -> Self {
        Self {
            mode,
            ..self.clone()
        }
    }

    pub fn with_weights(&self, weights: CostWeights) -> Result<Self, ModelError> {
        Self::new(
            self.dynamics.clone(),
            self.boundary.clone(),
            weights,
            self.mode,
        )
    }
}

/// `u_k = ū_k + K_k (x_k − μ_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinePolicy {
    ubar: Vec<DVector<f64>>,
    gains: Vec<DMatrix<f64>>,
    mu_ref: Vec<DVector<f64>>,
}

impl AffinePolicy {
    pub fn new(
        ubar: Vec<DVector<f64>>,
        gains: Vec<DMatrix<f64>>,
        mu_ref: Vec<DVector<f64>>,
    ) -> Result<Self, ModelError> {
        let horizon = ubar.len();
        if horizon == 0 {
            return Err(ModelError::ZeroHorizon);
        }
        check_len("K", &gains, horizon)?;
        check_len("mu_ref", &mu_ref, horizon)?;
        let (m, n) = gains[0].shape();
        for k in 0..horizon {
            check_vector(|| format!("ubar[{k}]"), &ubar[k], m)?;
            check_shape(|| format!("K[{k}]"), &gains[k], m, n)?;
            check_vector(|| format!("mu_ref[{k}]"), &mu_ref[k], n)?;
        }
        Ok(Self {
            ubar,
            gains,
            mu_ref,
        })
    }

    /// The policy `u_k = 0` for a system with the given dimensions.
    pub fn zero(n: usize, m: usize, horizon: usize) -> Self {
        Self {
            ubar: vec![DVector::zeros(m); horizon],
            gains: vec![DMatrix::zeros(m, n); horizon],
            mu_ref: vec![DVector::zeros(n); horizon],
        }
    }

    pub fn horizon(&self) -> usize {
        self.ubar.len()
    }
    pub fn state_dim(&self) -> usize {
        self.gains[0].ncols()
    }
    pub fn input_dim(&self) -> usize {
        self.gains[0].nrows()
    }
    pub fn ubar(&self, k: usize) -> &DVector<f64> {
        &self.ubar[k]
    }
    pub fn gain(&self, k: usize) -> &DMatrix<f64> {
        &self.gains[k]
    }
    pub fn mu_ref(&self, k: usize) -> &DVector<f64> {
        &self.mu_ref[k]
    }

    /// Same feedforward and gains, new reference means.
    pub fn with_mu_ref(&self, mu_ref: Vec<DVector<f64>>) -> Result<Self, ModelError> {
        Self::new(self.ubar.clone(), self.gains.clone(), mu_ref)
    }
}

/// `u_k = ū_k + K_k (x_k − μ_k) + v_k` with zero-mean `v_k`, `Cov[v_k] = P_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomizedAffinePolicy {
    base: AffinePolicy,
    p: Vec<DMatrix<f64>>,
}

impl RandomizedAffinePolicy {
    pub fn new(base: AffinePolicy, p: Vec<DMatrix<f64>>) -> Result<Self, ModelError> {
        check_len("P", &p, base.horizon())?;
        let m = base.input_dim();
        let mut sym = Vec::with_capacity(p.len());
        for (k, pk) in p.iter().enumerate() {
            check_shape(|| format!("P[{k}]"), pk, m, m)?;
            let s = symmetrize(pk);
            let min = min_eigenvalue(&s);
            if min < -eps_psd(&s) {
                return Err(ModelError::NotPsd {
                    what: format!("P[{k}]"),
                    min_eigenvalue: min,
                });
            }
            sym.push(s);
        }
        Ok(Self { base, p: sym })
    }

    pub fn deterministic(base: AffinePolicy) -> Self {
        let m = base.input_dim();
        let p = vec![DMatrix::zeros(m, m); base.horizon()];
        Self { base, p }
    }

    pub fn base(&self) -> &AffinePolicy {
        &self.base
    }
    pub fn p(&self, k: usize) -> &DMatrix<f64> {
        &self.p[k]
    }
    pub fn horizon(&self) -> usize {
        self.base.horizon()
    }
    pub fn is_deterministic(&self) -> bool {
        self.p.iter().all(|p| p.iter().all(|&v| v == 0.0))
    }

    pub fn with_mu_ref(&self, mu_ref: Vec<DVector<f64>>) -> Result<Self, ModelError> {
        Ok(Self {
            base: self.base.with_mu_ref(mu_ref)?,
            p: self.p.clone(),
        })
    }
}

/// Per-step state means and covariances, `k = 0..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateStatistics {
    pub mu: Vec<DVector<f64>>,
    pub sigma: Vec<DMatrix<f64>>,
}
