//! Exact first- and second-moment propagation under (randomized) affine
//! policies, and the moment form of the expected quadratic cost.
//!
//! With `u_k = ū_k + K_k (x_k − μ_k) + v_k`, `Cov[v_k] = P_k`:
//!
//! ```text
//! μ_{k+1} = A μ + B ū + d
//! Σ_{k+1} = (A+BK) Σ (A+BK)ᵀ + B P Bᵀ + W
//!         + Σ_ℓ B̄_ℓ (K Σ Kᵀ + P + ū ūᵀ) B̄_ℓᵀ + Σ_ℓ Ā_ℓ (Σ + μ μᵀ) Ā_ℓᵀ
//! ```
//!
//! The cost term `tr(R_k P_k)` follows from `E[v vᵀ] = P` with `v`
//! independent of the state.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::{eps_psd, min_eigenvalue, outer, psd_sqrt, symmetrize};
use crate::model::{
    check_shape, check_vector, ModelError, ProblemInstance, RandomizedAffinePolicy,
    StateStatistics, SystemDynamics,
};

/// `ū_k + K_k (x − μ_k) + v`. When `v` is `None` it is drawn as a Gaussian
/// with covariance `P_k` (and is exactly zero when `P_k = 0`).
pub fn evaluate_policy<R: Rng + ?Sized>(
    policy: &RandomizedAffinePolicy,
    k: usize,
    x: &DVector<f64>,
    v: Option<&DVector<f64>>,
    rng: &mut R,
) -> Result<DVector<f64>, ModelError> {
    let base = policy.base();
    if k >= policy.horizon() {
        return Err(ModelError::StepOutOfRange {
            k,
            horizon: policy.horizon(),
        });
    }
    check_vector(|| "x".into(), x, base.state_dim())?;
    let mut u = base.ubar(k) + base.gain(k) * (x - base.mu_ref(k));
    match v {
        Some(v) => {
            check_vector(|| "v".into(), v, base.input_dim())?;
            u += v;
        }
        None => {
            let p = policy.p(k);
            if p.iter().any(|&e| e != 0.0) {
                u += sample_gaussian(&psd_sqrt(p), rng);
            }
        }
    }
    Ok(u)
}

/// `root · ξ` with `ξ` standard normal.
pub(crate) fn sample_gaussian<R: Rng + ?Sized>(root: &DMatrix<f64>, rng: &mut R) -> DVector<f64> {
    let xi = DVector::from_fn(root.ncols(), |_, _| rng.sample::<f64, _>(StandardNormal));
    root * xi
}

pub fn propagate_mean(
    dynamics: &SystemDynamics,
    mu: &DVector<f64>,
    ubar: &DVector<f64>,
    k: usize,
) -> Result<DVector<f64>, ModelError> {
    dynamics.check_step(k)?;
    check_vector(|| "mu".into(), mu, dynamics.state_dim())?;
    check_vector(|| "ubar".into(), ubar, dynamics.input_dim())?;
    Ok(dynamics.a(k) * mu + dynamics.b(k) * ubar + dynamics.d(k))
}

/// One step of the covariance recursion; `p` is the randomization covariance.
pub fn propagate_covariance(
    dynamics: &SystemDynamics,
    sigma: &DMatrix<f64>,
    mu: &DVector<f64>,
    gain: &DMatrix<f64>,
    ubar: &DVector<f64>,
    p: Option<&DMatrix<f64>>,
    k: usize,
) -> Result<DMatrix<f64>, ModelError> {
    dynamics.check_step(k)?;
    let (n, m) = (dynamics.state_dim(), dynamics.input_dim());
    check_shape(|| "Sigma".into(), sigma, n, n)?;
    check_vector(|| "mu".into(), mu, n)?;
    check_shape(|| "K".into(), gain, m, n)?;
    check_vector(|| "ubar".into(), ubar, m)?;
    if let Some(p) = p {
        check_shape(|| "P".into(), p, m, m)?;
    }
    let sigma = symmetrize(sigma);
    let min = min_eigenvalue(&sigma);
    if min < -eps_psd(&sigma) {
        return Err(ModelError::NotPsd {
            what: "Sigma".into(),
            min_eigenvalue: min,
        });
    }
    let (a, b) = (dynamics.a(k), dynamics.b(k));
    let acl = a + b * gain;
    let mut next = &acl * &sigma * acl.transpose() + dynamics.w(k);

    let mut input_second = gain * &sigma * gain.transpose() + outer(ubar);
    if let Some(p) = p {
        next += b * p * b.transpose();
        input_second += p;
    }
    let state_second = &sigma + outer(mu);
    for (ab, bb) in dynamics.abar(k).iter().zip(dynamics.bbar(k)) {
        next += ab * &state_second * ab.transpose();
        next += bb * &input_second * bb.transpose();
    }
    Ok(symmetrize(&next))
}

/// Means recomputed from the mean recursion; the policy's own reference
/// means are replaced by these so feedback is centred on the true mean.
pub fn propagate_statistics(
    instance: &ProblemInstance,
    policy: &RandomizedAffinePolicy,
) -> Result<StateStatistics, ModelError> {
    let dynamics = instance.dynamics();
    let horizon = instance.horizon();
    if policy.horizon() != horizon {
        return Err(ModelError::SequenceLength {
            what: "policy".into(),
            expected: horizon,
            found: policy.horizon(),
        });
    }
    let base = policy.base();
    let mut mu = vec![instance.boundary().mu0().clone()];
    let mut sigma = vec![instance.boundary().sigma0().clone()];
    for k in 0..horizon {
        let p = policy.p(k);
        let next_sigma = propagate_covariance(
            dynamics,
            &sigma[k],
            &mu[k],
            base.gain(k),
            base.ubar(k),
            Some(p),
            k,
        )?;
        let min = min_eigenvalue(&next_sigma);
        if min < -eps_psd(&next_sigma) {
            return Err(ModelError::NotPsd {
                what: format!("Sigma[{}]", k + 1),
                min_eigenvalue: min,
            });
        }
        mu.push(propagate_mean(dynamics, &mu[k], base.ubar(k), k)?);
        sigma.push(next_sigma);
    }
    Ok(StateStatistics { mu, sigma })
}

/// `Σ_k tr(R_k(ū ūᵀ + K Σ Kᵀ + P)) + tr(Q_k(μ μᵀ + Σ))` over `k < N`.
pub fn expected_cost(
    instance: &ProblemInstance,
    statistics: &StateStatistics,
    policy: &RandomizedAffinePolicy,
) -> Result<f64, ModelError> {
    let horizon = instance.horizon();
    for (what, len) in [
        ("statistics.mu", statistics.mu.len()),
        ("statistics.sigma", statistics.sigma.len()),
    ] {
        if len != horizon + 1 {
            return Err(ModelError::SequenceLength {
                what: what.into(),
                expected: horizon + 1,
                found: len,
            });
        }
    }
    if policy.horizon() != horizon {
        return Err(ModelError::SequenceLength {
            what: "policy".into(),
            expected: horizon,
            found: policy.horizon(),
        });
    }
    let w = instance.weights();
    let base = policy.base();
    let mut total = 0.0;
    for k in 0..horizon {
        let (mu, sigma) = (&statistics.mu[k], &statistics.sigma[k]);
        let gain = base.gain(k);
        let input = outer(base.ubar(k)) + gain * sigma * gain.transpose() + policy.p(k);
        total += (w.r(k) * input).trace();
        total += (w.q(k) * (outer(mu) + sigma)).trace();
    }
    Ok(total)
}
