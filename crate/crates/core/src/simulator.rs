//! Monte Carlo rollouts of the stochastic dynamics under (randomized) affine
//! policies.
//!
//! Trajectory `i` draws from a ChaCha8 generator seeded with the master seed
//! and switched to stream `i`, so each trajectory is a pure function of
//! `(seed, i)` and batches do not depend on thread count. Within a
//! trajectory the draw order is `x₀`, then per step `v_k`, `δ_k`, `γ_k`, `w_k`.
//! Feedback is centred on the means from the mean recursion, as in moment
//! propagation.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::linalg::{max_eigenvalue, psd_sqrt, symmetrize};
use crate::model::{BoundaryMoments, CostWeights, ProblemInstance, RandomizedAffinePolicy, SteeringMode};

/// Zero-mean, unit-variance scalar distributions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NoiseFamily {
    #[default]
    GaussianUnit,
    /// Uniform on `[−√3, √3]`.
    UniformSqrt3,
    /// Uniform on `{−√1.5, 0, √1.5}`.
    ThreePoint,
    /// Always zero. Not unit variance; for noise-free checks.
    Degenerate,
}

impl NoiseFamily {
    pub const UNIT_VARIANCE: [NoiseFamily; 3] = [
        NoiseFamily::GaussianUnit,
        NoiseFamily::UniformSqrt3,
        NoiseFamily::ThreePoint,
    ];

    pub fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            NoiseFamily::GaussianUnit => rng.sample(StandardNormal),
            NoiseFamily::UniformSqrt3 => {
                let s = 3f64.sqrt();
                rng.random_range(-s..=s)
            }
            NoiseFamily::ThreePoint => match rng.random_range(0..3u8) {
                0 => -1.5f64.sqrt(),
                1 => 0.0,
                _ => 1.5f64.sqrt(),
            },
            NoiseFamily::Degenerate => 0.0,
        }
    }

    /// A vector with identity covariance, mapped through `root`.
    fn sample_vector<R: Rng + ?Sized>(self, root: &DMatrix<f64>, rng: &mut R) -> DVector<f64> {
        let xi = DVector::from_fn(root.ncols(), |_, _| self.sample(rng));
        root * xi
    }
}

impl std::fmt::Display for NoiseFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            NoiseFamily::GaussianUnit => "gaussian_unit",
            NoiseFamily::UniformSqrt3 => "uniform_sqrt3",
            NoiseFamily::ThreePoint => "three_point",
            NoiseFamily::Degenerate => "degenerate",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub samples: usize,
    pub seed: u64,
    /// Distribution of every `δ_{k,ℓ}` and `γ_{k,ℓ}`.
    pub multiplicative: NoiseFamily,
    /// Componentwise distribution of `W_k^{-1/2} w_k`.
    #[serde(default)]
    pub additive: NoiseFamily,
    /// Componentwise distribution of `Σ₀^{-1/2} (x₀ − μ₀)`.
    #[serde(default)]
    pub initial: NoiseFamily,
    /// Componentwise distribution of `P_k^{-1/2} v_k`.
    #[serde(default)]
    pub randomization: NoiseFamily,
}

impl SimulationConfig {
    pub fn new(samples: usize, seed: u64, multiplicative: NoiseFamily) -> Self {
        Self {
            samples,
            seed,
            multiplicative,
            additive: NoiseFamily::GaussianUnit,
            initial: NoiseFamily::GaussianUnit,
            randomization: NoiseFamily::GaussianUnit,
        }
    }

    /// Every random source forced to zero.
    pub fn noise_free(samples: usize, seed: u64) -> Self {
        Self {
            samples,
            seed,
            multiplicative: NoiseFamily::Degenerate,
            additive: NoiseFamily::Degenerate,
            initial: NoiseFamily::Degenerate,
            randomization: NoiseFamily::Degenerate,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// `x_0..=x_N`.
    pub states: Vec<DVector<f64>>,
    /// `u_0..u_{N-1}`.
    pub inputs: Vec<DVector<f64>>,
    /// Randomization draws `v_0..v_{N-1}`.
    pub randomization: Vec<DVector<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryBatch {
    pub trajectories: Vec<Trajectory>,
    pub config: SimulationConfig,
}

impl TrajectoryBatch {
    pub fn len(&self) -> usize {
        self.trajectories.len()
    }
    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }
    pub fn horizon(&self) -> usize {
        self.trajectories.first().map_or(0, |t| t.inputs.len())
    }
}

fn mean_path(instance: &ProblemInstance, policy: &RandomizedAffinePolicy) -> Vec<DVector<f64>> {
    let dy = instance.dynamics();
    let mut mu = vec![instance.boundary().mu0().clone()];
    for k in 0..dy.horizon() {
        let next = dy.a(k) * &mu[k] + dy.b(k) * policy.base().ubar(k) + dy.d(k);
        mu.push(next);
    }
    mu
}

/// Matrix square roots reused by every trajectory.
struct Roots {
    sigma0: DMatrix<f64>,
    w: Vec<DMatrix<f64>>,
    p: Vec<DMatrix<f64>>,
    /// Means from the mean recursion, used as the feedback centre.
    mu: Vec<DVector<f64>>,
}

impl Roots {
    fn new(instance: &ProblemInstance, policy: &RandomizedAffinePolicy) -> Self {
        let dy = instance.dynamics();
        Self {
            sigma0: psd_sqrt(instance.boundary().sigma0()),
            w: (0..dy.horizon()).map(|k| psd_sqrt(dy.w(k))).collect(),
            p: (0..policy.horizon()).map(|k| psd_sqrt(policy.p(k))).collect(),
            mu: mean_path(instance, policy),
        }
    }
}

fn rollout(
    instance: &ProblemInstance,
    policy: &RandomizedAffinePolicy,
    config: &SimulationConfig,
    roots: &Roots,
    index: u64,
) -> Trajectory {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(index);
    let dy = instance.dynamics();
    let base = policy.base();
    let horizon = dy.horizon();
    let mut x = instance.boundary().mu0() + config.initial.sample_vector(&roots.sigma0, &mut rng);
    let mut states = Vec::with_capacity(horizon + 1);
    let mut inputs = Vec::with_capacity(horizon);
    let mut randomization = Vec::with_capacity(horizon);
    for k in 0..horizon {
        let v = config.randomization.sample_vector(&roots.p[k], &mut rng);
        let u = base.ubar(k) + base.gain(k) * (&x - &roots.mu[k]) + &v;
        let mut next = dy.a(k) * &x + dy.b(k) * &u + dy.d(k);
        let delta: Vec<f64> = (0..dy.channels()).map(|_| config.multiplicative.sample(&mut rng)).collect();
        let gamma: Vec<f64> = (0..dy.channels()).map(|_| config.multiplicative.sample(&mut rng)).collect();
        for l in 0..dy.channels() {
            next += &dy.abar(k)[l] * &x * delta[l] + &dy.bbar(k)[l] * &u * gamma[l];
        }
        next += config.additive.sample_vector(&roots.w[k], &mut rng);
        states.push(std::mem::replace(&mut x, next));
        inputs.push(u);
        randomization.push(v);
    }
    states.push(x);
    Trajectory {
        states,
        inputs,
        randomization,
    }
}

/// Trajectory `index` of the batch defined by `config`.
pub fn simulate_trajectory(
    instance: &ProblemInstance,
    policy: &RandomizedAffinePolicy,
    config: &SimulationConfig,
    index: u64,
) -> Trajectory {
    rollout(instance, policy, config, &Roots::new(instance, policy), index)
}

/// `config.samples` trajectories, generated in parallel and stored in index order.
pub fn simulate_batch(
    instance: &ProblemInstance,
    policy: &RandomizedAffinePolicy,
    config: &SimulationConfig,
) -> TrajectoryBatch {
    let roots = Roots::new(instance, policy);
    let trajectories = (0..config.samples as u64)
        .into_par_iter()
        .map(|i| rollout(instance, policy, config, &roots, i))
        .collect();
    TrajectoryBatch {
        trajectories,
        config: config.clone(),
    }
}

/// Per-step sample means and unbiased sample covariances (`k = 0..=N`).
#[derive(Debug, Clone, PartialEq)]
pub struct SampleStatistics {
    pub mean: Vec<DVector<f64>>,
    pub covariance: Vec<DMatrix<f64>>,
    pub samples: usize,
}

/// Index-ordered sequential reduction, so results are bit-identical for a
/// given batch. Needs at least two trajectories.
pub fn estimate_statistics(batch: &TrajectoryBatch) -> Option<SampleStatistics> {
    let s = batch.len();
    if s < 2 {
        return None;
    }
    let steps = batch.trajectories[0].states.len();
    let n = batch.trajectories[0].states[0].len();
    let mut mean = Vec::with_capacity(steps);
    let mut covariance = Vec::with_capacity(steps);
    for k in 0..steps {
        let mut mu = DVector::zeros(n);
        for t in &batch.trajectories {
            mu += &t.states[k];
        }
        mu /= s as f64;
        let mut cov = DMatrix::zeros(n, n);
        for t in &batch.trajectories {
            let e = &t.states[k] - &mu;
            cov.ger(1.0, &e, &e, 1.0);
        }
        cov /= (s - 1) as f64;
        mean.push(mu);
        covariance.push(cov);
    }
    Some(SampleStatistics {
        mean,
        covariance,
        samples: s,
    })
}

/// Per-trajectory cost `Σ_k x_kᵀ Q_k x_k + u_kᵀ R_k u_k` split into state and
/// control parts.
pub fn trajectory_cost(trajectory: &Trajectory, weights: &CostWeights) -> (f64, f64) {
    let mut state = 0.0;
    let mut control = 0.0;
    for (k, u) in trajectory.inputs.iter().enumerate() {
        let x = &trajectory.states[k];
        state += x.dot(&(weights.q(k) * x));
        control += u.dot(&(weights.r(k) * u));
    }
    (state, control)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostEstimate {
    pub mean: f64,
    pub standard_error: f64,
    pub state_mean: f64,
    pub control_mean: f64,
}

pub fn monte_carlo_cost(batch: &TrajectoryBatch, weights: &CostWeights) -> CostEstimate {
    let s = batch.len();
    if s == 0 {
        return CostEstimate {
            mean: 0.0,
            standard_error: 0.0,
            state_mean: 0.0,
            control_mean: 0.0,
        };
    }
    let costs: Vec<(f64, f64)> = batch.trajectories.iter().map(|t| trajectory_cost(t, weights)).collect();
    let state_mean = costs.iter().map(|c| c.0).sum::<f64>() / s as f64;
    let control_mean = costs.iter().map(|c| c.1).sum::<f64>() / s as f64;
    let mean = state_mean + control_mean;
    let standard_error = if s > 1 {
        let var = costs.iter().map(|c| (c.0 + c.1 - mean).powi(2)).sum::<f64>() / (s - 1) as f64;
        (var / s as f64).sqrt()
    } else {
        0.0
    };
    CostEstimate {
        mean,
        standard_error,
        state_mean,
        control_mean,
    }
}

/// Trajectories per reduction chunk in [`summarize`]. Fixed so that the
/// merge tree, and hence every rounding, is independent of thread count.
const CHUNK: u64 = 1024;

/// Running first and second moments (Chan et al. pairwise merge).
#[derive(Debug, Clone)]
struct Accumulator {
    count: f64,
    mean: Vec<DVector<f64>>,
    scatter: Vec<DMatrix<f64>>,
    cost_mean: f64,
    cost_scatter: f64,
    state_sum: f64,
    control_sum: f64,
}

impl Accumulator {
    fn new(n: usize, steps: usize) -> Self {
        Self {
            count: 0.0,
            mean: vec![DVector::zeros(n); steps],
            scatter: vec![DMatrix::zeros(n, n); steps],
            cost_mean: 0.0,
            cost_scatter: 0.0,
            state_sum: 0.0,
            control_sum: 0.0,
        }
    }

    fn push(&mut self, t: &Trajectory, weights: &CostWeights) {
        self.count += 1.0;
        for (k, x) in t.states.iter().enumerate() {
            let delta = x - &self.mean[k];
            self.mean[k] += &delta / self.count;
            let after = x - &self.mean[k];
            self.scatter[k].ger(1.0, &delta, &after, 1.0);
        }
        let (state, control) = trajectory_cost(t, weights);
        let j = state + control;
        let delta = j - self.cost_mean;
        self.cost_mean += delta / self.count;
        self.cost_scatter += delta * (j - self.cost_mean);
        self.state_sum += state;
        self.control_sum += control;
    }

    fn merge(mut self, other: Self) -> Self {
        if other.count == 0.0 {
            return self;
        }
        if self.count == 0.0 {
            return other;
        }
        let total = self.count + other.count;
        let w = self.count * other.count / total;
        for k in 0..self.mean.len() {
            let delta = &other.mean[k] - &self.mean[k];
            self.scatter[k] += &other.scatter[k];
            self.scatter[k].ger(w, &delta, &delta, 1.0);
            self.mean[k] += delta * (other.count / total);
        }
        let delta = other.cost_mean - self.cost_mean;
        self.cost_scatter += other.cost_scatter + w * delta * delta;
        self.cost_mean += delta * other.count / total;
        self.state_sum += other.state_sum;
        self.control_sum += other.control_sum;
        self.count = total;
        self
    }
}

/// Statistics and cost of a batch without storing it.
#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloSummary {
    pub statistics: SampleStatistics,
    pub cost: CostEstimate,
}

/// Streams `config.samples` trajectories into sample moments and the cost
/// estimate. Trajectories are identical to those of [`simulate_batch`];
/// the results agree with [`estimate_statistics`] and [`monte_carlo_cost`]
/// up to rounding. Needs at least two samples.
pub fn summarize(
    instance: &ProblemInstance,
    policy: &RandomizedAffinePolicy,
    config: &SimulationConfig,
) -> Option<MonteCarloSummary> {
    let s = config.samples as u64;
    if s < 2 {
        return None;
    }
    let roots = Roots::new(instance, policy);
    let (n, steps) = (instance.dynamics().state_dim(), instance.horizon() + 1);
    let weights = instance.weights();
    let chunks: Vec<Accumulator> = (0..s.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut acc = Accumulator::new(n, steps);
            for i in c * CHUNK..((c + 1) * CHUNK).min(s) {
                acc.push(&rollout(instance, policy, config, &roots, i), weights);
            }
            acc
        })
        .collect();
    let acc = pairwise(chunks);
    let denom = acc.count - 1.0;
    Some(MonteCarloSummary {
        statistics: SampleStatistics {
            mean: acc.mean,
            covariance: acc.scatter.into_iter().map(|m| symmetrize(&(m / denom))).collect(),
            samples: config.samples,
        },
        cost: CostEstimate {
            mean: acc.cost_mean,
            standard_error: (acc.cost_scatter / denom / acc.count).sqrt(),
            state_mean: acc.state_sum / acc.count,
            control_mean: acc.control_sum / acc.count,
        },
    })
}

/// Balanced in-order merge.
fn pairwise(mut level: Vec<Accumulator>) -> Accumulator {
    while level.len() > 1 {
        let mut next = Vec::with_capacity(level.len().div_ceil(2));
        let mut it = level.into_iter();
        while let Some(a) = it.next() {
            next.push(match it.next() {
                Some(b) => a.merge(b),
                None => a,
            });
        }
        level = next;
    }
    level.pop().expect("at least one chunk")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationSettings {
    /// Budget multiplier `c` in `c ‖Σ_d‖_F / √S`.
    pub c: f64,
}

impl Default for ValidationSettings {
    fn default() -> Self {
        Self { c: 10.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TerminalReport {
    /// `‖μ̂_N − μ_d‖`.
    pub mean_error: f64,
    /// `c √(tr Σ_d / S)`.
    pub mean_budget: f64,
    /// Exact: `‖Σ̂_N − Σ_d‖_F`. Relaxed: `λ_max(Σ̂_N − Σ_d)`.
    pub covariance_discrepancy: f64,
    /// `c ‖Σ_d‖_F / √S`.
    pub covariance_budget: f64,
    pub pass: bool,
}

/// Compares terminal sample moments with the targets against sampling-error
/// budgets.
pub fn validate_terminal(
    batch: &TrajectoryBatch,
    boundary: &BoundaryMoments,
    mode: SteeringMode,
    settings: &ValidationSettings,
) -> Option<TerminalReport> {
    let stats = estimate_statistics(batch)?;
    let s = stats.samples as f64;
    let mu = stats.mean.last()?;
    let cov = stats.covariance.last()?;
    let sd = boundary.sigmad();
    let mean_error = (mu - boundary.mud()).norm();
    let mean_budget = settings.c * (sd.trace() / s).sqrt();
    let covariance_discrepancy = match mode {
        SteeringMode::Exact => (cov - sd).norm(),
        SteeringMode::Relaxed => max_eigenvalue(&(cov - sd)),
    };
    let covariance_budget = settings.c * sd.norm() / s.sqrt();
    Some(TerminalReport {
        mean_error,
        mean_budget,
        covariance_discrepancy,
        covariance_budget,
        pass: mean_error <= mean_budget && covariance_discrepancy <= covariance_budget,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AffinePolicy, SystemDynamics};
    use crate::moments::propagate_statistics;
    use crate::scenarios::example1;

    fn scalar_instance(w: f64, abar: f64) -> ProblemInstance {
        let m1 = |v: f64| DMatrix::from_element(1, 1, v);
        let dynamics = SystemDynamics::time_invariant(
            m1(0.9),
            m1(1.0),
            DVector::from_element(1, 0.1),
            m1(w),
            vec![m1(abar)],
            vec![m1(0.2)],
            3,
        )
        .unwrap();
        let boundary = BoundaryMoments::new(
            DVector::from_element(1, 1.0),
            m1(0.5),
            DVector::zeros(1),
            m1(1.0),
        )
        .unwrap();
        let weights = CostWeights::constant(m1(1.0), m1(2.0), 3).unwrap();
        ProblemInstance::new(dynamics, boundary, weights, SteeringMode::Relaxed).unwrap()
    }

    fn policy() -> RandomizedAffinePolicy {
        let m1 = |v: f64| DMatrix::from_element(1, 1, v);
        let base = AffinePolicy::new(
            vec![DVector::from_element(1, -0.4); 3],
            vec![m1(-0.5); 3],
            vec![DVector::zeros(1); 3],
        )
        .unwrap();
        RandomizedAffinePolicy::new(base, vec![m1(0.05); 3]).unwrap()
    }

    #[test]
    fn families_have_unit_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for f in NoiseFamily::UNIT_VARIANCE {
            let s = 200_000;
            let draws: Vec<f64> = (0..s).map(|_| f.sample(&mut rng)).collect();
            let mean = draws.iter().sum::<f64>() / s as f64;
            let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (s - 1) as f64;
            assert!(mean.abs() < 0.01, "{f}: mean {mean}");
            assert!((var - 1.0).abs() < 0.02, "{f}: var {var}");
        }
        assert_eq!(NoiseFamily::Degenerate.sample(&mut rng), 0.0);
    }

    #[test]
    fn noise_free_rollout_follows_mean_path() {
        let inst = scalar_instance(0.0, 0.3);
        let pol = policy();
        let t = simulate_trajectory(&inst, &pol, &SimulationConfig::noise_free(1, 9), 0);
        let stats = propagate_statistics(&inst, &pol).unwrap();
        for (x, mu) in t.states.iter().zip(&stats.mu) {
            assert_eq!(x, mu);
        }
    }

    #[test]
    fn batch_is_reproducible_and_index_keyed() {
        let inst = scalar_instance(0.1, 0.3);
        let pol = policy();
        let cfg = SimulationConfig::new(64, 42, NoiseFamily::ThreePoint);
        let a = simulate_batch(&inst, &pol, &cfg);
        let b = simulate_batch(&inst, &pol, &cfg);
        assert_eq!(a, b);
        assert_eq!(a.trajectories[17], simulate_trajectory(&inst, &pol, &cfg, 17));
        assert_ne!(a.trajectories[0], a.trajectories[1]);
        let sa = estimate_statistics(&a).unwrap();
        let sb = estimate_statistics(&b).unwrap();
        assert_eq!(sa, sb);
    }

    #[test]
    fn identical_trajectories_have_zero_covariance() {
        let inst = scalar_instance(0.1, 0.3);
        let pol = policy();
        let t = simulate_trajectory(&inst, &pol, &SimulationConfig::new(1, 1, NoiseFamily::GaussianUnit), 0);
        let batch = TrajectoryBatch {
            trajectories: vec![t.clone(), t],
            config: SimulationConfig::new(2, 1, NoiseFamily::GaussianUnit),
        };
        let stats = estimate_statistics(&batch).unwrap();
        assert!(stats.covariance.iter().all(|c| c.iter().all(|&e| e == 0.0)));
        assert!(estimate_statistics(&TrajectoryBatch { trajectories: vec![], ..batch }).is_none());
    }

    #[test]
    fn empty_batch_has_zero_cost() {
        let inst = scalar_instance(0.1, 0.3);
        let batch = TrajectoryBatch {
            trajectories: vec![],
            config: SimulationConfig::new(0, 1, NoiseFamily::GaussianUnit),
        };
        assert_eq!(monte_carlo_cost(&batch, inst.weights()).mean, 0.0);
    }

    #[test]
    fn doubling_r_doubles_control_cost_per_trajectory() {
        let inst = scalar_instance(0.1, 0.3);
        let batch = simulate_batch(&inst, &policy(), &SimulationConfig::new(50, 5, NoiseFamily::UniformSqrt3));
        let doubled = inst.weights().with_scaled_r(2.0);
        for t in &batch.trajectories {
            let (s1, c1) = trajectory_cost(t, inst.weights());
            let (s2, c2) = trajectory_cost(t, &doubled);
            assert_eq!(s1, s2);
            assert_eq!(2.0 * c1, c2);
        }
    }

    #[test]
    fn streaming_summary_matches_stored_batch() {
        let inst = scalar_instance(0.1, 0.3);
        let pol = policy();
        let cfg = SimulationConfig::new(3000, 11, NoiseFamily::UniformSqrt3);
        let batch = simulate_batch(&inst, &pol, &cfg);
        let stats = estimate_statistics(&batch).unwrap();
        let cost = monte_carlo_cost(&batch, inst.weights());
        let sum = summarize(&inst, &pol, &cfg).unwrap();
        for k in 0..stats.mean.len() {
            assert!((&stats.mean[k] - &sum.statistics.mean[k]).norm() < 1e-12);
            assert!((&stats.covariance[k] - &sum.statistics.covariance[k]).norm() < 1e-12);
        }
        assert!((cost.mean - sum.cost.mean).abs() < 1e-12);
        assert!((cost.standard_error - sum.cost.standard_error).abs() < 1e-12);
        assert!((cost.control_mean - sum.cost.control_mean).abs() < 1e-12);
    }

    #[test]
    fn gaussian_target_batch_passes_validation() {
        // Zero dynamics plus additive noise W = Σ_d: x_1 is distributed as the target.
        let inst = example1().unwrap();
        let sd = inst.boundary().sigmad().clone();
        let z = DMatrix::zeros(2, 2);
        let dynamics = SystemDynamics::time_invariant(
            z.clone(),
            DMatrix::zeros(2, 1),
            DVector::zeros(2),
            sd.clone(),
            vec![],
            vec![],
            1,
        )
        .unwrap();
        let target = ProblemInstance::new(dynamics, inst.boundary().clone(), inst.weights().clone(), SteeringMode::Exact)
            .unwrap();
        let pol = RandomizedAffinePolicy::deterministic(AffinePolicy::zero(2, 1, 1));
        let batch = simulate_batch(&target, &pol, &SimulationConfig::new(10_000, 8, NoiseFamily::GaussianUnit));
        let report = validate_terminal(&batch, target.boundary(), SteeringMode::Exact, &ValidationSettings::default())
            .unwrap();
        assert!(report.pass, "{report:?}");
    }
}
