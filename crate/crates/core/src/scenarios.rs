//! Bundled instances: the two-state one-step example and the planar
//! double-integrator (UAV) experiment.

use nalgebra::{DMatrix, DVector};

use crate::model::{BoundaryMoments, CostWeights, ModelError, ProblemInstance, SteeringMode, SystemDynamics};

/// Terminal covariance reached with `M₀ = 0.149`, `L₀ = [−0.0181, −0.008]`.
/// Rounds to [`EXAMPLE1_SIGMAD_ROUNDED`].
pub const EXAMPLE1_SIGMAD: [f64; 4] = [1.2599864, -0.3600936, -0.3600936, 1.9129014];
pub const EXAMPLE1_SIGMAD_ROUNDED: [f64; 4] = [1.26, -0.36, -0.36, 1.91];

fn example1_with(sigmad: [f64; 4]) -> Result<ProblemInstance, ModelError> {
    let dynamics = SystemDynamics::time_invariant(
        DMatrix::from_row_slice(2, 2, &[1.04, -0.22, -0.07, 1.341]),
        DMatrix::from_column_slice(2, 1, &[-0.5, -0.38]),
        DVector::zeros(2),
        DMatrix::zeros(2, 2),
        vec![DMatrix::from_row_slice(2, 2, &[-0.16, -0.2, -0.14, 0.24])],
        vec![DMatrix::from_column_slice(2, 1, &[0.26, -0.16])],
        1,
    )?;
    let boundary = BoundaryMoments::new(
        DVector::zeros(2),
        DMatrix::identity(2, 2),
        DVector::zeros(2),
        DMatrix::from_row_slice(2, 2, &sigmad),
    )?;
    let weights = CostWeights::constant(DMatrix::identity(2, 2) * 0.1, DMatrix::from_element(1, 1, 10.0), 1)?;
    ProblemInstance::new(dynamics, boundary, weights, SteeringMode::Exact)
}

/// One-step, two-state, single-input exact steering example.
pub fn example1() -> Result<ProblemInstance, ModelError> {
    example1_with(EXAMPLE1_SIGMAD)
}

/// The same example with the two-decimal terminal covariance.
pub fn example1_rounded() -> Result<ProblemInstance, ModelError> {
    example1_with(EXAMPLE1_SIGMAD_ROUNDED)
}

/// Time step of the double integrator.
pub const UAV_DT: f64 = 0.1;
/// Scale factor on the multiplicative channel matrices.
pub const UAV_NOISE_FACTOR: f64 = 0.1;
pub const UAV_HORIZON: usize = 60;
/// `[β₁, β₂, θ₁, θ₂]`.
pub const UAV_INTENSITIES: [f64; 4] = [0.1, 0.3, 0.1, 0.6];

fn block_diag(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows() + b.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((a.nrows(), a.ncols()), b.shape()).copy_from(b);
    out
}

/// Planar point mass with double-integrator dynamics, state
/// `[p_x, p_y, v_x, v_y]`, input `[a_x, a_y]`.
pub fn uav(mode: SteeringMode) -> Result<ProblemInstance, ModelError> {
    uav_with_dt(mode, UAV_DT)
}

/// The UAV instance with another time step in `A` and `B`; noise
/// intensities, boundary moments and weights are unchanged.
pub fn uav_with_dt(mode: SteeringMode, dt: f64) -> Result<ProblemInstance, ModelError> {
    let i2 = DMatrix::<f64>::identity(2, 2);
    let z2 = DMatrix::<f64>::zeros(2, 2);
    let mut a = DMatrix::identity(4, 4);
    a.view_mut((0, 2), (2, 2)).copy_from(&(&i2 * dt));
    let mut b = DMatrix::zeros(4, 2);
    b.view_mut((0, 0), (2, 2)).copy_from(&(&i2 * (dt * dt / 2.0)));
    b.view_mut((2, 0), (2, 2)).copy_from(&(&i2 * dt));
    let w = block_diag(&z2, &(&i2 * 0.01));

    let c1 = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.5, 0.0]) * UAV_NOISE_FACTOR;
    let c2 = DMatrix::from_row_slice(2, 2, &[0.0, 0.5, 0.0, 1.0]) * UAV_NOISE_FACTOR;
    let [b1, b2, t1, t2] = UAV_INTENSITIES;
    let abar = vec![block_diag(&z2, &(&c1 * b1)), block_diag(&z2, &(&c2 * b2))];
    let lower = |c: &DMatrix<f64>| {
        let mut m = DMatrix::zeros(4, 2);
        m.view_mut((2, 0), (2, 2)).copy_from(c);
        m
    };
    let bbar = vec![lower(&(&c1 * t1)), lower(&(&c2 * t2))];

    let dynamics = SystemDynamics::time_invariant(a, b, DVector::zeros(4), w, abar, bbar, UAV_HORIZON)?;
    let boundary = BoundaryMoments::new(
        DVector::zeros(4),
        block_diag(&(&i2 * 2.0), &(&i2 * 0.01)),
        DVector::from_vec(vec![7.0, 5.0, 0.0, 0.0]),
        block_diag(&DMatrix::from_row_slice(2, 2, &[4.5, -3.0, -3.0, 4.5]), &(&i2 * 0.1)),
    )?;
    let weights = CostWeights::constant(DMatrix::identity(4, 4) * 0.01, i2, UAV_HORIZON)?;
    ProblemInstance::new(dynamics, boundary, weights, mode)
}
