use covsteer::scenarios::example1;
use covsteer::{
    expected_cost, propagate_covariance, propagate_mean, propagate_statistics, AffinePolicy, BoundaryMoments,
    CostWeights, ProblemInstance, RandomizedAffinePolicy, SteeringMode, SystemDynamics,
};
use nalgebra::{DMatrix, DVector};

fn m(rows: usize, cols: usize, v: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(rows, cols, v)
}

#[test]
fn mean_of_double_integrator_step() {
    let dy = SystemDynamics::time_invariant(
        m(2, 2, &[1.0, 1.0, 0.0, 1.0]),
        m(2, 1, &[0.0, 1.0]),
        DVector::zeros(2),
        DMatrix::zeros(2, 2),
        vec![],
        vec![],
        1,
    )
    .unwrap();
    let next = propagate_mean(&dy, &DVector::from_vec(vec![1.0, 0.0]), &DVector::from_vec(vec![2.0]), 0).unwrap();
    assert_eq!(next, DVector::from_vec(vec![1.0, 2.0]));
}

#[test]
fn example1_zero_policy_covariance() {
    let inst = example1().unwrap();
    let stats = propagate_statistics(&inst, &RandomizedAffinePolicy::deterministic(AffinePolicy::zero(2, 1, 1))).unwrap();
    let dy = inst.dynamics();
    let (a, ab) = (dy.a(0), &dy.abar(0)[0]);
    let s0 = inst.boundary().sigma0();
    let expect = a * s0 * a.transpose() + ab * s0 * ab.transpose();
    assert!((&stats.sigma[1] - expect).norm() < 1e-14);
    assert_eq!(stats.mu[1], DVector::zeros(2));
}

#[test]
fn example1_reference_policy_reaches_target() {
    // Known step-2 optimizer, M₀ = 0.149 and L₀ = [−0.0181, −0.008]: K₀ = L₀ (Σ₀ = I), P₀ = 0.148.
    let inst = example1().unwrap();
    let dy = inst.dynamics();
    let next = propagate_covariance(
        dy,
        inst.boundary().sigma0(),
        &DVector::zeros(2),
        &m(1, 2, &[-0.0181, -0.008]),
        &DVector::zeros(1),
        Some(&m(1, 1, &[0.148])),
        0,
    )
    .unwrap();
    let sd = m(2, 2, &[1.26, -0.36, -0.36, 1.91]);
    for (x, y) in next.iter().zip(sd.iter()) {
        assert!((x - y).abs() < 2e-2, "{next}");
    }
}

#[test]
fn zero_dynamics_kill_covariance() {
    let dy = SystemDynamics::time_invariant(
        DMatrix::zeros(2, 2),
        DMatrix::zeros(2, 1),
        DVector::zeros(2),
        DMatrix::zeros(2, 2),
        vec![DMatrix::zeros(2, 2)],
        vec![DMatrix::zeros(2, 1)],
        3,
    )
    .unwrap();
    let bd = BoundaryMoments::new(
        DVector::from_vec(vec![1.0, -1.0]),
        DMatrix::identity(2, 2),
        DVector::zeros(2),
        DMatrix::identity(2, 2),
    )
    .unwrap();
    let w = CostWeights::constant(DMatrix::identity(2, 2), DMatrix::identity(1, 1), 3).unwrap();
    let inst = ProblemInstance::new(dy, bd, w, SteeringMode::Relaxed).unwrap();
    let base = AffinePolicy::new(
        vec![DVector::from_element(1, 1.0); 3],
        vec![m(1, 2, &[0.3, -0.2]); 3],
        vec![DVector::zeros(2); 3],
    )
    .unwrap();
    let stats = propagate_statistics(&inst, &RandomizedAffinePolicy::deterministic(base)).unwrap();
    for k in 1..=3 {
        assert_eq!(stats.sigma[k], DMatrix::zeros(2, 2));
    }
}

#[test]
fn feedforward_only_cost() {
    let dy = SystemDynamics::time_invariant(
        DMatrix::identity(1, 1),
        DMatrix::identity(1, 1),
        DVector::zeros(1),
        DMatrix::zeros(1, 1),
        vec![],
        vec![],
        3,
    )
    .unwrap();
    let bd = BoundaryMoments::new(DVector::zeros(1), DMatrix::identity(1, 1), DVector::zeros(1), DMatrix::identity(1, 1))
        .unwrap();
    let w = CostWeights::constant(DMatrix::zeros(1, 1), DMatrix::identity(1, 1), 3).unwrap();
    let inst = ProblemInstance::new(dy, bd, w, SteeringMode::Relaxed).unwrap();
    let base = AffinePolicy::new(vec![DVector::from_element(1, 1.0); 3], vec![DMatrix::zeros(1, 1); 3], vec![DVector::zeros(1); 3])
        .unwrap();
    let pol = RandomizedAffinePolicy::deterministic(base);
    let stats = propagate_statistics(&inst, &pol).unwrap();
    assert_eq!(expected_cost(&inst, &stats, &pol).unwrap(), 3.0);
}
