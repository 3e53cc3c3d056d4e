//! Semidefinite programs for relaxed covariance steering and for the second
//! step of exact covariance steering.
//!
//! Decision variables are stored in three PSD blocks per step:
//!
//! ```text
//! Z1_k = [[M_k, L_k], [L_kᵀ, Σ_k]]   (m+n)
//! Z2_k = [[X_k, μ_k], [μ_kᵀ, 1  ]]   (n+1)   relaxed only
//! Z3_k = [[U_k, ū_k], [ū_kᵀ, 1  ]]   (m+1)   relaxed only
//! ```
//!
//! `μ_N = μ_d` is substituted into the last mean equation. In the relaxed
//! program `Σ_N = Σ_d − T` with `T ⪰ 0` its own block; in step 2
//! `Σ_N = Σ_d` moves to the right-hand side. `Σ_0` and `μ_0` are pinned by
//! equality rows. Rows are emitted step by step so the Schur complement of
//! the equality map stays banded.

use covsteer_conic::{BlockId, Cone, ConicProgram, ProgramBuilder, ProgramError, RowId};
use nalgebra::{DMatrix, DVector};

use crate::linalg::outer;
use crate::model::ProblemInstance;

/// Which of the two programs a layout describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProgramKind {
    Relaxed,
    Step2,
}

/// Block ids of every decision variable. Offsets into the variable vector
/// follow from [`ConicProgram::block_offset`].
#[derive(Debug, Clone, PartialEq)]
pub struct VariableLayout {
    pub kind: ProgramKind,
    pub n: usize,
    pub m: usize,
    pub horizon: usize,
    /// `[[M_k, L_k], [L_kᵀ, Σ_k]]`, `k < N`.
    pub z1: Vec<BlockId>,
    /// `[[X_k, μ_k], [μ_kᵀ, 1]]`, `k < N`. Empty for step 2.
    pub z2: Vec<BlockId>,
    /// `[[U_k, ū_k], [ū_kᵀ, 1]]`, `k < N`. Empty for step 2.
    pub z3: Vec<BlockId>,
    /// `Σ_d − Σ_N`, relaxed only.
    pub terminal: Option<BlockId>,
    /// Step 2 only: the fixed feedforward and means, `μ` of length `N+1`.
    pub fixed_ubar: Vec<DVector<f64>>,
    pub fixed_mu: Vec<DVector<f64>>,
}

impl VariableLayout {
    /// Variable coordinates owned by a block, as `(offset, length)`.
    pub fn span(&self, program: &ConicProgram, b: BlockId) -> (usize, usize) {
        (program.block_offset(b), program.blocks()[b.0].cone.dim())
    }

    pub fn all_blocks(&self) -> Vec<BlockId> {
        let mut v: Vec<BlockId> = self
            .z1
            .iter()
            .chain(&self.z2)
            .chain(&self.z3)
            .copied()
            .collect();
        v.extend(self.terminal);
        v
    }
}

/// Adds `scale · (F S Fᵀ)_ij` where `S` is the symmetric sub-block of `blk`
/// starting at diagonal offset `off` with order `f.ncols()`.
fn add_congruence(
    pb: &mut ProgramBuilder,
    row: RowId,
    blk: BlockId,
    off: usize,
    f: &DMatrix<f64>,
    (i, j): (usize, usize),
    scale: f64,
) {
    let s = f.ncols();
    for a in 0..s {
        pb.add_coefficient(row, blk, off + a, off + a, scale * f[(i, a)] * f[(j, a)]);
        for b in a + 1..s {
            let c = f[(i, a)] * f[(j, b)] + f[(i, b)] * f[(j, a)];
            pb.add_coefficient(row, blk, off + a, off + b, scale * c);
        }
    }
}

/// Adds `scale · (A Lᵀ Bᵀ + B L Aᵀ)_ij` with `L` at `Z1[(p, m+q)]`.
fn add_cross(
    pb: &mut ProgramBuilder,
    row: RowId,
    blk: BlockId,
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    (i, j): (usize, usize),
    scale: f64,
) {
    let (n, m) = b.shape();
    for p in 0..m {
        for q in 0..n {
            let c = b[(i, p)] * a[(j, q)] + b[(j, p)] * a[(i, q)];
            pb.add_coefficient(row, blk, p, m + q, scale * c);
        }
    }
}

/// Adds `tr(W S)` to the objective for the symmetric sub-block at `off`.
fn add_trace_cost(pb: &mut ProgramBuilder, blk: BlockId, off: usize, w: &DMatrix<f64>) {
    let s = w.nrows();
    for a in 0..s {
        pb.add_cost(blk, off + a, off + a, w[(a, a)]);
        for b in a + 1..s {
            pb.add_cost(blk, off + a, off + b, w[(a, b)] + w[(b, a)]);
        }
    }
}

/// Rows pinning the symmetric sub-block at `off` to `value`.
fn pin_symmetric(pb: &mut ProgramBuilder, blk: BlockId, off: usize, value: &DMatrix<f64>) {
    let s = value.nrows();
    for j in 0..s {
        for i in 0..=j {
            let r = pb.add_row(value[(i, j)]);
            pb.add_coefficient(r, blk, off + i, off + j, 1.0);
        }
    }
}

/// Builds the relaxed program. Used for relaxed steering and as step 1 of
/// exact steering; the instance mode is ignored.
pub fn build_relaxed_program(
    instance: &ProblemInstance,
) -> Result<(ConicProgram, VariableLayout), ProgramError> {
    let dy = instance.dynamics();
    let bd = instance.boundary();
    let w = instance.weights();
    let (n, m, horizon) = (dy.state_dim(), dy.input_dim(), dy.horizon());

    let mut pb = ProgramBuilder::new();
    let mut z1 = Vec::with_capacity(horizon);
    let mut z2 = Vec::with_capacity(horizon);
    let mut z3 = Vec::with_capacity(horizon);
    for k in 0..horizon {
        z1.push(pb.add_block(Cone::Psd(m + n), format!("ML_Sigma[{k}]")));
        z2.push(pb.add_block(Cone::Psd(n + 1), format!("X_mu[{k}]")));
        z3.push(pb.add_block(Cone::Psd(m + 1), format!("U_ubar[{k}]")));
    }
    let terminal = pb.add_block(Cone::Psd(n), "Sigmad_minus_SigmaN");

    for k in 0..horizon {
        add_trace_cost(&mut pb, z1[k], 0, w.r(k));
        add_trace_cost(&mut pb, z3[k], 0, w.r(k));
        add_trace_cost(&mut pb, z1[k], m, w.q(k));
        add_trace_cost(&mut pb, z2[k], 0, w.q(k));
    }

    for k in 0..horizon {
        let r = pb.add_row(1.0);
        pb.add_coefficient(r, z2[k], n, n, 1.0);
        let r = pb.add_row(1.0);
        pb.add_coefficient(r, z3[k], m, m, 1.0);
        if k == 0 {
            pin_symmetric(&mut pb, z1[0], m, bd.sigma0());
            for i in 0..n {
                let r = pb.add_row(bd.mu0()[i]);
                pb.add_coefficient(r, z2[0], i, n, 1.0);
            }
        }

        let (a, b, d) = (dy.a(k), dy.b(k), dy.d(k));
        let last = k + 1 == horizon;

        // μ_{k+1} − A μ_k − B ū_k = d_k
        for i in 0..n {
            let rhs = if last { d[i] - bd.mud()[i] } else { d[i] };
            let r = pb.add_row(rhs);
            if !last {
                pb.add_coefficient(r, z2[k + 1], i, n, 1.0);
            }
            for q in 0..n {
                pb.add_coefficient(r, z2[k], q, n, -a[(i, q)]);
            }
            for p in 0..m {
                pb.add_coefficient(r, z3[k], p, m, -b[(i, p)]);
            }
        }

        // Σ_{k+1} − (AΣAᵀ + ALᵀBᵀ + BLAᵀ + BMBᵀ + Σ_ℓ B̄(M+U)B̄ᵀ + Σ_ℓ Ā(Σ+X)Āᵀ) = W_k
        for j in 0..n {
            for i in 0..=j {
                let rhs = if last {
                    dy.w(k)[(i, j)] - bd.sigmad()[(i, j)]
                } else {
                    dy.w(k)[(i, j)]
                };
                let r = pb.add_row(rhs);
                if last {
                    pb.add_coefficient(r, terminal, i, j, -1.0);
                } else {
                    pb.add_coefficient(r, z1[k + 1], m + i, m + j, 1.0);
                }
                add_congruence(&mut pb, r, z1[k], m, a, (i, j), -1.0);
                add_cross(&mut pb, r, z1[k], a, b, (i, j), -1.0);
                add_congruence(&mut pb, r, z1[k], 0, b, (i, j), -1.0);
                for (ab, bb) in dy.abar(k).iter().zip(dy.bbar(k)) {
                    add_congruence(&mut pb, r, z1[k], 0, bb, (i, j), -1.0);
                    add_congruence(&mut pb, r, z3[k], 0, bb, (i, j), -1.0);
                    add_congruence(&mut pb, r, z1[k], m, ab, (i, j), -1.0);
                    add_congruence(&mut pb, r, z2[k], 0, ab, (i, j), -1.0);
                }
            }
        }
    }

    let program = pb.build()?;
    let layout = VariableLayout {
        kind: ProgramKind::Relaxed,
        n,
        m,
        horizon,
        z1,
        z2,
        z3,
        terminal: Some(terminal),
        fixed_ubar: Vec::new(),
        fixed_mu: Vec::new(),
    };
    Ok((program, layout))
}

/// `H_k = W_k + Σ_ℓ (Ā μ μᵀ Āᵀ + B̄ ū ūᵀ B̄ᵀ)` for fixed `μ_k`, `ū_k`.
pub fn step2_constant(
    instance: &ProblemInstance,
    k: usize,
    mu: &DVector<f64>,
    ubar: &DVector<f64>,
) -> DMatrix<f64> {
    let dy = instance.dynamics();
    let (xm, um) = (outer(mu), outer(ubar));
    let mut h = dy.w(k).clone();
    for (ab, bb) in dy.abar(k).iter().zip(dy.bbar(k)) {
        h += ab * &xm * ab.transpose() + bb * &um * bb.transpose();
    }
    (&h + h.transpose()) * 0.5
}

/// Builds the step-2 program in `L_k, Σ_k, M_k` for fixed feedforward `ubar`
/// (length `N`) and means `mu` (length `N+1`).
pub fn build_step2_program(
    instance: &ProblemInstance,
    ubar: &[DVector<f64>],
    mu: &[DVector<f64>],
) -> Result<(ConicProgram, VariableLayout), ProgramError> {
    let dy = instance.dynamics();
    let bd = instance.boundary();
    let w = instance.weights();
    let (n, m, horizon) = (dy.state_dim(), dy.input_dim(), dy.horizon());
    assert_eq!(ubar.len(), horizon, "feedforward length");
    assert_eq!(mu.len(), horizon + 1, "mean length");

    let mut pb = ProgramBuilder::new();
    let z1: Vec<BlockId> = (0..horizon)
        .map(|k| pb.add_block(Cone::Psd(m + n), format!("ML_Sigma[{k}]")))
        .collect();
    for k in 0..horizon {
        add_trace_cost(&mut pb, z1[k], 0, w.r(k));
        add_trace_cost(&mut pb, z1[k], m, w.q(k));
    }
    pin_symmetric(&mut pb, z1[0], m, bd.sigma0());
    for k in 0..horizon {
        let (a, b) = (dy.a(k), dy.b(k));
        let h = step2_constant(instance, k, &mu[k], &ubar[k]);
        let last = k + 1 == horizon;
        // Σ_{k+1} − (AΣAᵀ + ALᵀBᵀ + BLAᵀ + BMBᵀ + Σ_ℓ ĀΣĀᵀ + Σ_ℓ B̄MB̄ᵀ) = H_k
        for j in 0..n {
            for i in 0..=j {
                let rhs = if last {
                    h[(i, j)] - bd.sigmad()[(i, j)]
                } else {
                    h[(i, j)]
                };
                let r = pb.add_row(rhs);
                if !last {
                    pb.add_coefficient(r, z1[k + 1], m + i, m + j, 1.0);
                }
                add_congruence(&mut pb, r, z1[k], m, a, (i, j), -1.0);
                add_cross(&mut pb, r, z1[k], a, b, (i, j), -1.0);
                add_congruence(&mut pb, r, z1[k], 0, b, (i, j), -1.0);
                for (ab, bb) in dy.abar(k).iter().zip(dy.bbar(k)) {
                    add_congruence(&mut pb, r, z1[k], m, ab, (i, j), -1.0);
                    add_congruence(&mut pb, r, z1[k], 0, bb, (i, j), -1.0);
                }
            }
        }
    }
    let program = pb.build()?;
    let layout = VariableLayout {
        kind: ProgramKind::Step2,
        n,
        m,
        horizon,
        z1,
        z2: Vec::new(),
        z3: Vec::new(),
        terminal: None,
        fixed_ubar: ubar.to_vec(),
        fixed_mu: mu.to_vec(),
    };
    Ok((program, layout))
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{random_instance_with_policy, RandomSpec};
    use crate::model::{BoundaryMoments, RandomizedAffinePolicy, SteeringMode};
    use crate::moments::{expected_cost, propagate_statistics};
    use super::planted::{max_residual, put, relaxed_point, stack};

    fn spec(n: usize, m: usize, horizon: usize, channels: usize, mode: SteeringMode) -> RandomSpec {
        RandomSpec {
            n,
            m,
            horizon,
            channels,
            mode,
            no_input_noise: false,
        }
    }

    #[test]
    fn relaxed_layout_dimensions() {
        let (inst, _) = random_instance_with_policy(&spec(3, 2, 4, 2, SteeringMode::Relaxed), 1);
        let (program, layout) = build_relaxed_program(&inst).unwrap();
        assert_eq!(layout.all_blocks().len(), 3 * 4 + 1);
        // corners 2N, Σ₀ 6, μ₀ 3, means nN, covariances 6N
        assert_eq!(program.num_constraints(), 8 + 6 + 3 + 3 * 4 + 6 * 4);
        let dim = 4 * (15 + 10 + 6) + 6;
        assert_eq!(program.dim(), dim);
        assert_eq!(layout.span(&program, layout.z1[1]), (31, 15));
    }

    #[test]
    fn planted_policy_is_feasible_for_relaxed_program() {
        for seed in 0..10 {
            let (inst, policy) = random_instance_with_policy(&spec(3, 2, 4, 2, SteeringMode::Relaxed), seed);
            let rp = RandomizedAffinePolicy::deterministic(policy);
            let (program, _, x) = relaxed_point(&inst, &rp);
            assert!(max_residual(&program, &x) < 1e-10, "seed {seed}");
            let stats = propagate_statistics(&inst, &rp).unwrap();
            let cost = expected_cost(&inst, &stats, &rp).unwrap();
            assert!((program.objective(&x) - cost).abs() < 1e-10 * (1.0 + cost));
        }
    }

    #[test]
    fn planted_policy_is_feasible_for_step2_program() {
        for seed in 0..10 {
            let (inst, policy) = random_instance_with_policy(&spec(2, 1, 3, 2, SteeringMode::Relaxed), seed);
            let rp = RandomizedAffinePolicy::deterministic(policy.clone());
            let stats = propagate_statistics(&inst, &rp).unwrap();
            let horizon = inst.horizon();
            let bd = inst.boundary();
            let exact_boundary = BoundaryMoments::new(
                bd.mu0().clone(),
                bd.sigma0().clone(),
                stats.mu[horizon].clone(),
                stats.sigma[horizon].clone(),
            )
            .unwrap();
            let exact = ProblemInstance::new(
                inst.dynamics().clone(),
                exact_boundary,
                inst.weights().clone(),
                SteeringMode::Exact,
            )
            .unwrap();
            let ubar: Vec<_> = (0..horizon).map(|k| policy.ubar(k).clone()).collect();
            let (program, layout) = build_step2_program(&exact, &ubar, &stats.mu).unwrap();
            let mut x = vec![0.0; program.dim()];
            let mut feedback_cost = 0.0;
            for k in 0..horizon {
                let l = policy.gain(k) * &stats.sigma[k];
                let mm = &l * policy.gain(k).transpose();
                feedback_cost += (exact.weights().r(k) * &mm).trace() + (exact.weights().q(k) * &stats.sigma[k]).trace();
                put(&program, &mut x, layout.z1[k], &stack([&mm, &l, &l.transpose(), &stats.sigma[k]]));
            }
            assert!(max_residual(&program, &x) < 1e-10, "seed {seed}");
            assert!((program.objective(&x) - feedback_cost).abs() < 1e-10 * (1.0 + feedback_cost));
        }
    }

    #[test]
    fn step2_constant_without_channels_is_w() {
        let (inst, _) = random_instance_with_policy(&spec(2, 1, 2, 0, SteeringMode::Relaxed), 4);
        let h = step2_constant(&inst, 0, &DVector::from_element(2, 3.0), &DVector::from_element(1, -1.0));
        assert_eq!(h, *inst.dynamics().w(0));
    }
}
