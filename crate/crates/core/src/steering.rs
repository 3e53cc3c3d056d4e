//! Solving the steering programs, reading solutions back, and recovering
//! (randomized) affine policies.

use std::fmt;

use covsteer_conic::{solve, ConicProgram, ProgramError, Residuals, SolveError, SolveStatus, SolverSettings};
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::builder::{build_relaxed_program, build_step2_program, step2_constant, ProgramKind, VariableLayout};
use crate::linalg::{clip_psd, eps_psd, min_eigenvalue, outer, right_solve_spd, symmetrize};
use crate::model::{AffinePolicy, ModelError, ProblemInstance, RandomizedAffinePolicy, SteeringMode};

/// Which program of the pipeline failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    /// The relaxed program (relaxed steering, or step 1 of exact steering).
    Relaxed,
    Step2,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Relaxed => "step 1 (relaxed program)",
            Stage::Step2 => "step 2",
        })
    }
}

/// The three relaxation residuals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapKind {
    /// `M − L Σ⁻¹ Lᵀ`
    Feedback,
    /// `X − μ μᵀ`
    Mean,
    /// `U − ū ūᵀ`
    Feedforward,
}

impl fmt::Display for GapKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GapKind::Feedback => "M",
            GapKind::Mean => "X",
            GapKind::Feedforward => "U",
        })
    }
}

#[derive(Debug, Error)]
pub enum SteeringError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("program assembly failed: {0}")]
    Program(#[from] ProgramError),
    #[error(transparent)]
    Solver(#[from] SolveError),
    #[error("{0} is infeasible")]
    Infeasible(Stage),
    #[error("{0} is unbounded")]
    Unbounded(Stage),
    #[error("{stage} stopped with status {status}")]
    Numerical { stage: Stage, status: SolveStatus },
    #[error("recomputed objective {recomputed} differs from solver objective {reported}")]
    ObjectiveMismatch { recomputed: f64, reported: f64 },
    #[error("Sigma[{k}] is not positive definite")]
    SingularCovariance { k: usize },
    #[error("{kind} gap {gap:e} at step {k} exceeds tolerance")]
    GapTooLarge { k: usize, kind: GapKind, gap: f64 },
    #[error("randomization covariance P[{k}] has eigenvalue {min_eigenvalue:e}")]
    NegativeRandomization { k: usize, min_eigenvalue: f64 },
    #[error("terminal mean misses target by {error:e}")]
    TerminalMean { error: f64 },
    #[error("instance mode is {0}, expected exact")]
    WrongMode(SteeringMode),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteeringSettings {
    pub solver: SolverSettings,
    /// Relative gap tolerance: a gap passes when `gap ≤ gap_tol (1 + ‖block‖_F)`.
    pub gap_tol: f64,
}

impl Default for SteeringSettings {
    fn default() -> Self {
        Self {
            solver: SolverSettings::default(),
            gap_tol: 1e-5,
        }
    }
}

/// Frobenius norms of the three relaxation residuals at one step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepGaps {
    pub m: f64,
    pub x: f64,
    pub u: f64,
    /// `‖M_k‖_F`, `‖X_k‖_F`, `‖U_k‖_F`.
    pub m_scale: f64,
    pub x_scale: f64,
    pub u_scale: f64,
}

impl StepGaps {
    pub fn worst_relative(&self) -> (GapKind, f64, f64) {
        [
            (GapKind::Feedback, self.m, self.m / (1.0 + self.m_scale)),
            (GapKind::Mean, self.x, self.x / (1.0 + self.x_scale)),
            (GapKind::Feedforward, self.u, self.u / (1.0 + self.u_scale)),
        ]
        .into_iter()
        .fold((GapKind::Feedback, 0.0, -1.0), |best, c| if c.2 > best.2 { c } else { best })
    }
}

/// Solution of either steering program. For step 2, `x_blocks` and
/// `u_blocks` are the rank-one products of the fixed means and feedforward.
#[derive(Debug, Clone, PartialEq)]
pub struct RelaxedSolution {
    pub kind: ProgramKind,
    pub ubar: Vec<DVector<f64>>,
    /// `k = 0..=N`; `mu[N]` comes from the mean recursion.
    pub mu: Vec<DVector<f64>>,
    pub l: Vec<DMatrix<f64>>,
    /// `k = 0..=N`; `sigma[N]` comes from the covariance recursion.
    pub sigma: Vec<DMatrix<f64>>,
    pub m_blocks: Vec<DMatrix<f64>>,
    pub x_blocks: Vec<DMatrix<f64>>,
    pub u_blocks: Vec<DMatrix<f64>>,
    pub objective: f64,
    pub gaps: Vec<StepGaps>,
    pub status: SolveStatus,
    pub iterations: usize,
    pub residuals: Residuals,
}

impl RelaxedSolution {
    pub fn horizon(&self) -> usize {
        self.ubar.len()
    }

    /// `Σ_k tr(R_k M_k)`.
    pub fn control_covariance_cost(&self, instance: &ProblemInstance) -> f64 {
        self.m_blocks
            .iter()
            .enumerate()
            .map(|(k, m)| (instance.weights().r(k) * m).trace())
            .sum()
    }
}

fn stage_of(kind: ProgramKind) -> Stage {
    match kind {
        ProgramKind::Relaxed => Stage::Relaxed,
        ProgramKind::Step2 => Stage::Step2,
    }
}

fn sub(s: &DMatrix<f64>, r0: usize, c0: usize, nr: usize, nc: usize) -> DMatrix<f64> {
    s.view((r0, c0), (nr, nc)).into_owned()
}

/// Right-hand side of the covariance equation at step `k`, evaluated on
/// solution blocks (the implied `Σ_{k+1}`).
fn implied_next_sigma(
    instance: &ProblemInstance,
    k: usize,
    sigma: &DMatrix<f64>,
    l: &DMatrix<f64>,
    mk: &DMatrix<f64>,
    xk: &DMatrix<f64>,
    uk: &DMatrix<f64>,
) -> DMatrix<f64> {
    let dy = instance.dynamics();
    let (a, b) = (dy.a(k), dy.b(k));
    let cross = a * l.transpose() * b.transpose();
    let mut s = a * sigma * a.transpose() + &cross + cross.transpose() + b * mk * b.transpose() + dy.w(k);
    let (ms, xs) = (mk + uk, sigma + xk);
    for (ab, bb) in dy.abar(k).iter().zip(dy.bbar(k)) {
        s += bb * &ms * bb.transpose() + ab * &xs * ab.transpose();
    }
    symmetrize(&s)
}

/// Reads all blocks back, computes gaps (via SPD solves against `Σ_k`) and
/// checks the recomputed objective against the solver's.
pub fn extract_solution(
    instance: &ProblemInstance,
    program: &ConicProgram,
    layout: &VariableLayout,
    raw: &covsteer_conic::Solution,
) -> Result<RelaxedSolution, SteeringError> {
    let stage = stage_of(layout.kind);
    match raw.status {
        SolveStatus::Optimal => {}
        SolveStatus::Infeasible => return Err(SteeringError::Infeasible(stage)),
        SolveStatus::Unbounded => return Err(SteeringError::Unbounded(stage)),
        status => return Err(SteeringError::Numerical { stage, status }),
    }
    let (n, m, horizon) = (layout.n, layout.m, layout.horizon);
    let dy = instance.dynamics();
    let w = instance.weights();

    let mut sol = RelaxedSolution {
        kind: layout.kind,
        ubar: Vec::with_capacity(horizon),
        mu: Vec::with_capacity(horizon + 1),
        l: Vec::with_capacity(horizon),
        sigma: Vec::with_capacity(horizon + 1),
        m_blocks: Vec::with_capacity(horizon),
        x_blocks: Vec::with_capacity(horizon),
        u_blocks: Vec::with_capacity(horizon),
        objective: raw.primal_objective,
        gaps: Vec::with_capacity(horizon),
        status: raw.status,
        iterations: raw.iterations,
        residuals: raw.residuals,
    };
    for k in 0..horizon {
        let z1 = program.block_matrix(&raw.x, layout.z1[k]);
        sol.m_blocks.push(sub(&z1, 0, 0, m, m));
        sol.l.push(sub(&z1, 0, m, m, n));
        sol.sigma.push(sub(&z1, m, m, n, n));
        match layout.kind {
            ProgramKind::Relaxed => {
                let z2 = program.block_matrix(&raw.x, layout.z2[k]);
                let z3 = program.block_matrix(&raw.x, layout.z3[k]);
                sol.x_blocks.push(sub(&z2, 0, 0, n, n));
                sol.mu.push(z2.view((0, n), (n, 1)).column(0).into_owned());
                sol.u_blocks.push(sub(&z3, 0, 0, m, m));
                sol.ubar.push(z3.view((0, m), (m, 1)).column(0).into_owned());
            }
            ProgramKind::Step2 => {
                let (mu, ub) = (&layout.fixed_mu[k], &layout.fixed_ubar[k]);
                sol.x_blocks.push(outer(mu));
                sol.u_blocks.push(outer(ub));
                sol.mu.push(mu.clone());
                sol.ubar.push(ub.clone());
            }
        }
    }
    let last = horizon - 1;
    sol.mu.push(dy.a(last) * &sol.mu[last] + dy.b(last) * &sol.ubar[last] + dy.d(last));
    sol.sigma.push(implied_next_sigma(
        instance,
        last,
        &sol.sigma[last],
        &sol.l[last],
        &sol.m_blocks[last],
        &sol.x_blocks[last],
        &sol.u_blocks[last],
    ));

    let mut recomputed = 0.0;
    for k in 0..horizon {
        let gain = right_solve_spd(&sol.l[k], &sol.sigma[k]).ok_or(SteeringError::SingularCovariance { k })?;
        let (mk, xk, uk) = (&sol.m_blocks[k], &sol.x_blocks[k], &sol.u_blocks[k]);
        sol.gaps.push(StepGaps {
            m: (mk - &gain * sol.l[k].transpose()).norm(),
            x: (xk - outer(&sol.mu[k])).norm(),
            u: (uk - outer(&sol.ubar[k])).norm(),
            m_scale: mk.norm(),
            x_scale: xk.norm(),
            u_scale: uk.norm(),
        });
        recomputed += (w.r(k) * mk).trace() + (w.q(k) * &sol.sigma[k]).trace();
        if layout.kind == ProgramKind::Relaxed {
            recomputed += (w.r(k) * uk).trace() + (w.q(k) * xk).trace();
        }
    }
    if (recomputed - raw.primal_objective).abs() > 1e-6 * (1.0 + raw.primal_objective.abs()) {
        return Err(SteeringError::ObjectiveMismatch {
            recomputed,
            reported: raw.primal_objective,
        });
    }
    Ok(sol)
}

/// Builds, solves and extracts the relaxed program.
pub fn solve_relaxed_program(
    instance: &ProblemInstance,
    settings: &SteeringSettings,
) -> Result<RelaxedSolution, SteeringError> {
    let (program, layout) = build_relaxed_program(instance)?;
    let raw = solve(&program, &settings.solver)?;
    extract_solution(instance, &program, &layout, &raw)
}

fn gains(sol: &RelaxedSolution) -> Result<Vec<DMatrix<f64>>, SteeringError> {
    (0..sol.horizon())
        .map(|k| right_solve_spd(&sol.l[k], &sol.sigma[k]).ok_or(SteeringError::SingularCovariance { k }))
        .collect()
}

fn affine_from(sol: &RelaxedSolution) -> Result<AffinePolicy, SteeringError> {
    let mu_ref = sol.mu[..sol.horizon()].to_vec();
    Ok(AffinePolicy::new(sol.ubar.clone(), gains(sol)?, mu_ref)?)
}

/// Deterministic policy `K_k = L_k Σ_k⁻¹`. Fails when any gap exceeds
/// `gap_tol (1 + ‖block‖_F)`.
pub fn recover_policy(sol: &RelaxedSolution, gap_tol: f64) -> Result<AffinePolicy, SteeringError> {
    for (k, g) in sol.gaps.iter().enumerate() {
        let (kind, gap, rel) = g.worst_relative();
        if rel > gap_tol {
            return Err(SteeringError::GapTooLarge { k, kind, gap });
        }
    }
    affine_from(sol)
}

/// `K_k = L_k Σ_k⁻¹`, `P_k = M_k − L_k Σ_k⁻¹ L_kᵀ` (symmetrized, negative
/// eigenvalues clipped). Eigenvalues below `−10 ε_psd` are an error.
pub fn recover_randomized_policy(sol: &RelaxedSolution) -> Result<RandomizedAffinePolicy, SteeringError> {
    let base = affine_from(sol)?;
    let mut p = Vec::with_capacity(sol.horizon());
    for k in 0..sol.horizon() {
        let raw = symmetrize(&(&sol.m_blocks[k] - base.gain(k) * sol.l[k].transpose()));
        let min = min_eigenvalue(&raw);
        if min < -10.0 * eps_psd(&raw) {
            return Err(SteeringError::NegativeRandomization { k, min_eigenvalue: min });
        }
        p.push(if min >= 0.0 { raw } else { clip_psd(&raw) });
    }
    Ok(RandomizedAffinePolicy::new(base, p)?)
}

/// Relaxed steering result. The deterministic policy `K = L Σ⁻¹` is feasible
/// for the relaxed terminal constraint even when a gap is nonzero, since each
/// gap only removes a PSD term from the covariance recursion.
#[derive(Debug, Clone, PartialEq)]
pub struct RelaxedOutcome {
    pub solution: RelaxedSolution,
    pub policy: RandomizedAffinePolicy,
}

pub fn solve_relaxed_cs(
    instance: &ProblemInstance,
    settings: &SteeringSettings,
) -> Result<RelaxedOutcome, SteeringError> {
    let solution = solve_relaxed_program(instance, settings)?;
    let policy = RandomizedAffinePolicy::deterministic(affine_from(&solution)?);
    Ok(RelaxedOutcome { solution, policy })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactSolution {
    pub relaxed: RelaxedSolution,
    pub step2: RelaxedSolution,
    pub policy: RandomizedAffinePolicy,
    pub hk: Vec<DMatrix<f64>>,
}

/// Builds step 2 from a step-1 solution. The means are recomputed from the
/// step-1 feedforward so they match the mean recursion exactly.
pub fn build_exact_step2_program(
    instance: &ProblemInstance,
    step1: &RelaxedSolution,
) -> Result<(ConicProgram, VariableLayout), SteeringError> {
    if step1.status != SolveStatus::Optimal {
        return Err(SteeringError::Numerical {
            stage: Stage::Relaxed,
            status: step1.status,
        });
    }
    let dy = instance.dynamics();
    let mut mu = vec![instance.boundary().mu0().clone()];
    for k in 0..instance.horizon() {
        mu.push(dy.a(k) * &mu[k] + dy.b(k) * &step1.ubar[k] + dy.d(k));
    }
    let mud = instance.boundary().mud();
    let error = (&mu[instance.horizon()] - mud).norm();
    if error > 1e-6 * (1.0 + mud.norm()) {
        return Err(SteeringError::TerminalMean { error });
    }
    Ok(build_step2_program(instance, &step1.ubar, &mu)?)
}

/// Two-step exact steering: relaxed program, step-2 program, then policy
/// recovery. The policy is deterministic when every step-2 gap is within
/// tolerance. No optimality claim is made for the result.
pub fn solve_exact_cs(instance: &ProblemInstance, settings: &SteeringSettings) -> Result<ExactSolution, SteeringError> {
    if instance.mode() != SteeringMode::Exact {
        return Err(SteeringError::WrongMode(instance.mode()));
    }
    let relaxed = solve_relaxed_program(instance, settings)?;
    let (program, layout) = build_exact_step2_program(instance, &relaxed)?;
    let raw = solve(&program, &settings.solver)?;
    let step2 = extract_solution(instance, &program, &layout, &raw)?;
    let hk = (0..instance.horizon())
        .map(|k| step2_constant(instance, k, &layout.fixed_mu[k], &layout.fixed_ubar[k]))
        .collect();
    let policy = match recover_policy(&step2, settings.gap_tol) {
        Ok(p) => RandomizedAffinePolicy::deterministic(p),
        Err(SteeringError::GapTooLarge { .. }) => recover_randomized_policy(&step2)?,
        Err(e) => return Err(e),
    };
    Ok(ExactSolution {
        relaxed,
        step2,
        policy,
        hk,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TightnessRow {
    pub k: usize,
    pub gaps: StepGaps,
}

/// Per-step gap table. `tight` holds when every gap satisfies
/// `gap ≤ tol (1 + ‖block‖_F)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TightnessReport {
    pub rows: Vec<TightnessRow>,
    pub max_relative_gap: f64,
    pub tight: bool,
}

pub fn tightness_report(sol: &RelaxedSolution, tol: f64) -> TightnessReport {
    let rows: Vec<TightnessRow> = sol
        .gaps
        .iter()
        .enumerate()
        .map(|(k, g)| TightnessRow { k, gaps: *g })
        .collect();
    let max_relative_gap = sol.gaps.iter().map(|g| g.worst_relative().2).fold(0.0, f64::max);
    TightnessReport {
        rows,
        max_relative_gap,
        tight: max_relative_gap <= tol,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builder::planted::relaxed_point;
    use crate::instances::{random_instance_with_policy, RandomSpec};
    use crate::scenarios::{example1, uav};
    use covsteer_conic::Solution;

    fn raw(program: &ConicProgram, x: Vec<f64>, status: SolveStatus) -> Solution {
        Solution {
            status,
            primal_objective: program.objective(&x),
            dual_objective: program.objective(&x),
            x,
            y: vec![0.0; program.num_constraints()],
            z: vec![0.0; program.dim()],
            iterations: 0,
            residuals: Residuals {
                primal: 0.0,
                dual: 0.0,
                gap: 0.0,
                relative_gap: 0.0,
            },
            history: Vec::new(),
        }
    }

    fn planted(seed: u64, with_p: bool) -> (ProblemInstance, RandomizedAffinePolicy, RelaxedSolution) {
        let spec = RandomSpec {
            n: 3,
            m: 2,
            horizon: 4,
            channels: 2,
            mode: SteeringMode::Relaxed,
            no_input_noise: false,
        };
        let (inst, base) = random_instance_with_policy(&spec, seed);
        let p = (0..4)
            .map(|k| if with_p { DMatrix::from_row_slice(2, 2, &[0.2, 0.05, 0.05, 0.1]) * (k + 1) as f64 } else { DMatrix::zeros(2, 2) })
            .collect();
        let policy = RandomizedAffinePolicy::new(base, p).unwrap();
        let (program, layout, x) = relaxed_point(&inst, &policy);
        let sol = extract_solution(&inst, &program, &layout, &raw(&program, x, SolveStatus::Optimal)).unwrap();
        (inst, policy, sol)
    }

    #[test]
    fn rank_one_point_is_tight_and_recovers_gains() {
        for seed in 0..5 {
            let (_, policy, sol) = planted(seed, false);
            let report = tightness_report(&sol, 1e-12);
            assert!(report.tight, "seed {seed}: {}", report.max_relative_gap);
            let rec = recover_policy(&sol, 1e-5).unwrap();
            for k in 0..sol.horizon() {
                assert!((rec.gain(k) - policy.base().gain(k)).norm() < 1e-9);
                assert!((rec.ubar(k) - policy.base().ubar(k)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn feedback_gap_yields_randomization() {
        let (_, policy, sol) = planted(2, true);
        match recover_policy(&sol, 1e-5) {
            Err(SteeringError::GapTooLarge { k: 0, kind: GapKind::Feedback, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        let rec = recover_randomized_policy(&sol).unwrap();
        for k in 0..sol.horizon() {
            assert!((rec.p(k) - policy.p(k)).norm() < 1e-9);
        }
    }

    #[test]
    fn terminal_moments_follow_recursions() {
        let (inst, policy, sol) = planted(3, true);
        let stats = crate::moments::propagate_statistics(&inst, &policy).unwrap();
        let n = inst.horizon();
        assert!((&sol.sigma[n] - &stats.sigma[n]).norm() < 1e-10);
        assert!((&sol.mu[n] - &stats.mu[n]).norm() < 1e-12);
    }

    #[test]
    fn solver_statuses_map_to_errors() {
        let (inst, policy, _) = planted(1, false);
        let (program, layout, x) = relaxed_point(&inst, &policy);
        let cases = [
            (SolveStatus::Infeasible, "Infeasible(Relaxed)"),
            (SolveStatus::Unbounded, "Unbounded(Relaxed)"),
            (SolveStatus::IterLimit, "Numerical"),
            (SolveStatus::NumericalTrouble, "Numerical"),
        ];
        for (status, expect) in cases {
            let err = extract_solution(&inst, &program, &layout, &raw(&program, x.clone(), status)).unwrap_err();
            assert!(format!("{err:?}").starts_with(expect), "{err:?}");
        }
    }

    #[test]
    fn objective_mismatch_is_detected() {
        let (inst, policy, _) = planted(1, false);
        let (program, layout, x) = relaxed_point(&inst, &policy);
        let mut r = raw(&program, x, SolveStatus::Optimal);
        r.primal_objective += 1.0;
        assert!(matches!(
            extract_solution(&inst, &program, &layout, &r),
            Err(SteeringError::ObjectiveMismatch { .. })
        ));
    }

    #[test]
    fn exact_solver_rejects_relaxed_instances() {
        let inst = uav(SteeringMode::Relaxed).unwrap();
        assert!(matches!(
            solve_exact_cs(&inst, &SteeringSettings::default()),
            Err(SteeringError::WrongMode(SteeringMode::Relaxed))
        ));
    }

    #[test]
    fn example1_step1_is_tight_and_step2_is_not() {
        let sol = solve_exact_cs(&example1().unwrap(), &SteeringSettings::default()).unwrap();
        assert!(tightness_report(&sol.relaxed, 1e-5).tight);
        assert!(!tightness_report(&sol.step2, 1e-5).tight);
        assert!(!sol.policy.is_deterministic());
    }
}
