//! Random instance generators. Every instance is feasible by construction:
//! the boundary targets are the terminal moments of a random affine policy,
//! inflated by a PSD margin in relaxed mode and by a small randomization
//! covariance in exact mode.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::min_eigenvalue;
use crate::model::{
    AffinePolicy, BoundaryMoments, CostWeights, ProblemInstance, RandomizedAffinePolicy,
    SteeringMode, SystemDynamics,
};
use crate::moments::propagate_statistics;

/// Shape of a random instance.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomSpec {
    pub n: usize,
    pub m: usize,
    pub horizon: usize,
    pub channels: usize,
    pub mode: SteeringMode,
    /// Zero input-multiplicative channels and invertible `A_k`.
    pub no_input_noise: bool,
}

impl RandomSpec {
    /// Dimensions drawn from `n ∈ 1..=4`, `m ∈ 1..=2`, `M ∈ 0..=2` and
    /// `N ∈ ⌈n/m⌉..=10`, so every state direction can be reached.
    pub fn sample<R: Rng + ?Sized>(rng: &mut R, mode: SteeringMode, no_input_noise: bool) -> Self {
        let n = rng.random_range(1..=4);
        let m = rng.random_range(1..=2);
        Self {
            n,
            m,
            horizon: rng.random_range(n.div_ceil(m)..=10),
            channels: rng.random_range(0..=2),
            mode,
            no_input_noise,
        }
    }
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| scale * rng.sample::<f64, _>(StandardNormal))
}

fn gaussian_vec<R: Rng + ?Sized>(rng: &mut R, len: usize, scale: f64) -> DVector<f64> {
    DVector::from_fn(len, |_, _| scale * rng.sample::<f64, _>(StandardNormal))
}

/// `G Gᵀ / n + floor·I`.
fn random_spd<R: Rng + ?Sized>(rng: &mut R, n: usize, floor: f64) -> DMatrix<f64> {
    let g = gaussian(rng, n, n, 1.0);
    &g * g.transpose() / n as f64 + DMatrix::identity(n, n) * floor
}

/// Random dynamics, weights and initial moments with targets reached by a
/// random affine policy. Returns the instance and that policy (its
/// randomization, if any, is not included).
pub fn random_instance_with_policy(spec: &RandomSpec, seed: u64) -> (ProblemInstance, AffinePolicy) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        if let Some(out) = try_instance(spec, &mut rng) {
            return out;
        }
    }
}

pub fn random_instance(spec: &RandomSpec, seed: u64) -> ProblemInstance {
    random_instance_with_policy(spec, seed).0
}

fn try_instance(spec: &RandomSpec, rng: &mut ChaCha8Rng) -> Option<(ProblemInstance, AffinePolicy)> {
    let (n, m, horizon) = (spec.n, spec.m, spec.horizon);
    let mut a = Vec::with_capacity(horizon);
    let mut b = Vec::with_capacity(horizon);
    let mut d = Vec::with_capacity(horizon);
    let mut w = Vec::with_capacity(horizon);
    let mut abar = Vec::with_capacity(horizon);
    let mut bbar = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let ak = DMatrix::identity(n, n) + gaussian(rng, n, n, 0.3 / (n as f64).sqrt());
        if spec.no_input_noise && ak.determinant().abs() < 1e-2 {
            return None;
        }
        a.push(ak);
        b.push(gaussian(rng, n, m, 1.0));
        d.push(gaussian_vec(rng, n, 0.1));
        let g = gaussian(rng, n, n, 0.1);
        w.push(&g * g.transpose() + DMatrix::identity(n, n) * 1e-3);
        abar.push((0..spec.channels).map(|_| gaussian(rng, n, n, 0.1)).collect::<Vec<_>>());
        bbar.push(
            (0..spec.channels)
                .map(|_| {
                    if spec.no_input_noise {
                        DMatrix::zeros(n, m)
                    } else {
                        gaussian(rng, n, m, 0.1)
                    }
                })
                .collect::<Vec<_>>(),
        );
    }
    let dynamics = SystemDynamics::new(a, b, d, w, abar, bbar).ok()?;
    let mu0 = gaussian_vec(rng, n, 1.0);
    let sigma0 = random_spd(rng, n, 0.1);
    let q: Vec<_> = (0..horizon).map(|_| random_spd(rng, n, 0.1)).collect();
    let r: Vec<_> = (0..horizon).map(|_| random_spd(rng, m, 0.5)).collect();
    let weights = CostWeights::new(q, r).ok()?;

    let ubar: Vec<_> = (0..horizon).map(|_| gaussian_vec(rng, m, 1.0)).collect();
    let gains: Vec<_> = (0..horizon).map(|_| gaussian(rng, m, n, 0.3)).collect();
    let placeholder = vec![DVector::zeros(n); horizon];
    let policy = AffinePolicy::new(ubar, gains, placeholder).ok()?;
    let probe = ProblemInstance::new(
        dynamics.clone(),
        BoundaryMoments::new(mu0.clone(), sigma0.clone(), mu0.clone(), sigma0.clone()).ok()?,
        weights.clone(),
        spec.mode,
    )
    .ok()?;
    // Exact targets come from a randomized policy so they are strictly
    // reachable rather than on the boundary of the reachable set.
    let generating = match spec.mode {
        SteeringMode::Relaxed => RandomizedAffinePolicy::deterministic(policy.clone()),
        SteeringMode::Exact => {
            let p = (0..horizon).map(|_| random_spd(rng, m, 0.05) * 0.1).collect();
            RandomizedAffinePolicy::new(policy.clone(), p).ok()?
        }
    };
    let stats = propagate_statistics(&probe, &generating).ok()?;
    let policy = policy.with_mu_ref(stats.mu[..horizon].to_vec()).ok()?;

    let mut sigmad = stats.sigma[horizon].clone();
    if spec.mode == SteeringMode::Relaxed {
        sigmad += random_spd(rng, n, 0.05) * 0.2;
    }
    sigmad = (&sigmad + sigmad.transpose()) * 0.5;
    if min_eigenvalue(&sigmad) < 1e-4 {
        return None;
    }
    let boundary = BoundaryMoments::new(mu0, sigma0, stats.mu[horizon].clone(), sigmad).ok()?;
    let instance = ProblemInstance::new(dynamics, boundary, weights, spec.mode).ok()?;
    Some((instance, policy))
}
