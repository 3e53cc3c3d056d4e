//! Homogeneous self-dual primal–dual interior-point method.
//!
//! The solver works on the embedding
//!
//! ```text
//! A x − b τ = 0,   Aᵀ y + z − c τ = 0,   −bᵀ y + cᵀ x + κ = 0,
//! x, z ∈ K,  τ, κ ≥ 0
//! ```
//!
//! started from `x = z = I`, `y = 0`, `τ = κ = 1`. Each iteration computes the
//! Nesterov–Todd scaling of every block, assembles the Schur complement
//! `M = A 𝒲 Aᵀ` with `𝒲(D) = W D W`, and takes a Mehrotra predictor–corrector
//! step. Residuals shrink by the same factor as the step, so a run either
//! drives `τ` to a positive limit (optimal) or exposes an infeasibility
//! certificate as `τ → 0`.

use std::f64::consts::SQRT_2;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::cholesky::ProfileCholesky;
use crate::program::{Cone, ConicProgram};
use crate::scaling::NtScaling;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSettings {
    pub max_iterations: usize,
    pub gap_tolerance: f64,
    pub primal_tolerance: f64,
    pub dual_tolerance: f64,
    /// Threshold on normalized infeasibility certificates.
    pub infeasibility_tolerance: f64,
    /// Fraction of the distance to the cone boundary taken per step.
    pub step_fraction: f64,
    /// Initial relative diagonal shift on the Schur complement.
    pub regularization: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            gap_tolerance: 1e-8,
            primal_tolerance: 1e-8,
            dual_tolerance: 1e-8,
            infeasibility_tolerance: 1e-8,
            step_fraction: 0.99,
            regularization: 1e-12,
        }
    }
}

/// Largest shift tried before a factorization is declared failed.
const MAX_REGULARIZATION: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum SettingsError {
    #[error("{name} must be positive and finite, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("step fraction must lie in (0, 1), got {0}")]
    StepFraction(f64),
    #[error("max_iterations must be at least 1")]
    NoIterations,
}

impl SolverSettings {
    pub fn validate(&self) -> Result<(), SettingsError> {
        for (name, value) in [
            ("gap_tolerance", self.gap_tolerance),
            ("primal_tolerance", self.primal_tolerance),
            ("dual_tolerance", self.dual_tolerance),
            ("infeasibility_tolerance", self.infeasibility_tolerance),
            ("regularization", self.regularization),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(SettingsError::NonPositive { name, value });
            }
        }
        if !(self.step_fraction > 0.0 && self.step_fraction < 1.0) {
            return Err(SettingsError::StepFraction(self.step_fraction));
        }
        if self.max_iterations == 0 {
            return Err(SettingsError::NoIterations);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    /// A dual ray certifies that `A x = b, x ∈ K` has no solution.
    Infeasible,
    /// A primal ray certifies that the objective is unbounded below.
    Unbounded,
    IterLimit,
    NumericalTrouble,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::IterLimit => "iteration_limit",
            SolveStatus::NumericalTrouble => "numerical_trouble",
        };
        f.write_str(s)
    }
}

/// KKT residuals of a primal–dual point.
///
/// `primal` and `dual` are relative to `1 + ‖b‖` and `1 + ‖c‖`; `gap` is the
/// absolute complementarity `<x, z>`; `relative_gap` is
/// `max(<x, z>, |cᵀx − bᵀy|) / (1 + |cᵀx| + |bᵀy|)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Residuals {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
    pub relative_gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Complementarity measure `(<x, z> + τκ) / (ν + 1)` of the embedding.
    pub mu: f64,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub residuals: Residuals,
    pub tau: f64,
    pub kappa: f64,
    /// Step length taken after this record (0 for the final record).
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub status: SolveStatus,
    /// Primal point in the program's svec coordinates.
    pub x: Vec<f64>,
    /// Equality multipliers.
    pub y: Vec<f64>,
    /// Dual cone variables, svec coordinates.
    pub z: Vec<f64>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub iterations: usize,
    pub residuals: Residuals,
    pub history: Vec<IterationRecord>,
}

/// One cone block as the solver sees it: nonnegative blocks are split into
/// scalar blocks so every block is a (possibly 1×1) PSD matrix.
struct InnerBlock {
    order: usize,
    /// Program coordinate of each svec entry of this inner block.
    source: InnerSource,
    cost: DMatrix<f64>,
    /// Constraint rows touching the block, ascending.
    rows: Vec<usize>,
    /// Per touching row: `(i, j, f)` with `i <= j`, `f` the symmetric matrix entry.
    entries: Vec<Vec<(usize, usize, f64)>>,
}

enum InnerSource {
    Psd { offset: usize },
    Scalar { coordinate: usize },
}

struct Problem<'a> {
    program: &'a ConicProgram,
    blocks: Vec<InnerBlock>,
    b: Vec<f64>,
    m: usize,
    degree: f64,
    c: Point,
    /// Internal data is `b / scale_b` and `c / scale_c`.
    scale_b: f64,
    scale_c: f64,
    norm_b: f64,
    norm_c: f64,
}

type Point = Vec<DMatrix<f64>>;

impl<'a> Problem<'a> {
    fn new(program: &'a ConicProgram) -> Self {
        let mut blocks = Vec::new();
        // program block index -> first inner block index
        let mut first_inner = Vec::with_capacity(program.blocks().len());
        for (bi, block) in program.blocks().iter().enumerate() {
            first_inner.push(blocks.len());
            let offset = program.block_offset(crate::BlockId(bi));
            match block.cone {
                Cone::Psd(s) => blocks.push(InnerBlock {
                    order: s,
                    source: InnerSource::Psd { offset },
                    cost: DMatrix::zeros(s, s),
                    rows: Vec::new(),
                    entries: Vec::new(),
                }),
                Cone::Nonneg(f) => {
                    for k in 0..f {
                        blocks.push(InnerBlock {
                            order: 1,
                            source: InnerSource::Scalar {
                                coordinate: offset + k,
                            },
                            cost: DMatrix::zeros(1, 1),
                            rows: Vec::new(),
                            entries: Vec::new(),
                        });
                    }
                }
            }
        }
        let map = |col: usize| -> (usize, usize, usize, f64) {
            let (b, i, j) = program.locate(col);
            match program.blocks()[b].cone {
                Cone::Psd(_) => {
                    let scale = if i == j { 1.0 } else { 1.0 / SQRT_2 };
                    (first_inner[b], i, j, scale)
                }
                Cone::Nonneg(_) => (first_inner[b] + i, 0, 0, 1.0),
            }
        };
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let positive_or_one = |v: f64| if v > 0.0 { v } else { 1.0 };
        let scale_b = positive_or_one(norm(program.rhs()));
        let scale_c = positive_or_one(norm(program.cost()));
        for (col, &c) in program.cost().iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let (ib, i, j, s) = map(col);
            blocks[ib].cost[(i, j)] = c / scale_c * s;
            blocks[ib].cost[(j, i)] = c / scale_c * s;
        }
        for (r, row) in program.rows().iter().enumerate() {
            for &(col, a) in &row.entries {
                let (ib, i, j, s) = map(col);
                let blk = &mut blocks[ib];
                if blk.rows.last() != Some(&r) {
                    blk.rows.push(r);
                    blk.entries.push(Vec::new());
                }
                blk.entries.last_mut().unwrap().push((i, j, a * s));
            }
        }
        let c = blocks.iter().map(|b| b.cost.clone()).collect();
        Self {
            program,
            c,
            blocks,
            b: program.rhs().iter().map(|v| v / scale_b).collect(),
            scale_b,
            scale_c,
            m: program.num_constraints(),
            degree: program.degree() as f64,
            norm_b: norm(program.rhs()),
            norm_c: norm(program.cost()),
        }
    }

    fn identity_point(&self) -> Point {
        self.blocks
            .iter()
            .map(|b| DMatrix::identity(b.order, b.order))
            .collect()
    }


    /// `A(X)`.
    fn apply(&self, x: &Point) -> Vec<f64> {
        let mut out = vec![0.0; self.m];
        for (blk, xb) in self.blocks.iter().zip(x) {
            for (&r, ents) in blk.rows.iter().zip(&blk.entries) {
                out[r] += ents
                    .iter()
                    .map(|&(i, j, f)| {
                        if i == j {
                            f * xb[(i, i)]
                        } else {
                            f * (xb[(i, j)] + xb[(j, i)])
                        }
                    })
                    .sum::<f64>();
            }
        }
        out
    }

    /// `Aᵀ(y)`.
    fn apply_transpose(&self, y: &[f64]) -> Point {
        self.blocks
            .iter()
            .map(|blk| {
                let mut m = DMatrix::zeros(blk.order, blk.order);
                for (&r, ents) in blk.rows.iter().zip(&blk.entries) {
                    let yr = y[r];
                    if yr == 0.0 {
                        continue;
                    }
                    for &(i, j, f) in ents {
                        m[(i, j)] += yr * f;
                        if i != j {
                            m[(j, i)] += yr * f;
                        }
                    }
                }
                m
            })
            .collect()
    }

    /// Dense row-major Schur complement `M_rs = <A_r, W A_s W>`.
    fn schur(&self, scalings: &[NtScaling]) -> Vec<f64> {
        let m = self.m;
        let mut out = vec![0.0; m * m];
        for (blk, sc) in self.blocks.iter().zip(scalings) {
            let w = &sc.w;
            let n = blk.order;
            for (si, ents_s) in blk.entries.iter().enumerate() {
                let s = blk.rows[si];
                let mut aw = DMatrix::zeros(n, n);
                for &(i, j, f) in ents_s {
                    for k in 0..n {
                        aw[(i, k)] += f * w[(j, k)];
                    }
                    if i != j {
                        for k in 0..n {
                            aw[(j, k)] += f * w[(i, k)];
                        }
                    }
                }
                let t = w * aw;
                for (ri, ents_r) in blk.entries[..=si].iter().enumerate() {
                    let r = blk.rows[ri];
                    let v: f64 = ents_r
                        .iter()
                        .map(|&(i, j, f)| {
                            if i == j {
                                f * t[(i, i)]
                            } else {
                                f * (t[(i, j)] + t[(j, i)])
                            }
                        })
                        .sum();
                    out[r * m + s] += v;
                    if r != s {
                        out[s * m + r] += v;
                    }
                }
            }
        }
        out
    }

    fn to_svec(&self, p: &Point) -> Vec<f64> {
        let mut out = vec![0.0; self.program.dim()];
        for (blk, pb) in self.blocks.iter().zip(p) {
            match blk.source {
                InnerSource::Scalar { coordinate } => out[coordinate] = pb[(0, 0)],
                InnerSource::Psd { offset } => {
                    let packed = crate::program::svec(pb);
                    out[offset..offset + packed.len()].copy_from_slice(&packed);
                }
            }
        }
        out
    }
}

fn inner(a: &Point, b: &Point) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

fn norm(p: &Point) -> f64 {
    p.iter().map(|x| x.norm_squared()).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &Point, y: &mut Point) {
    for (yb, xb) in y.iter_mut().zip(x) {
        *yb += xb * alpha;
    }
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let t = 0.5 * (&*m + m.transpose());
    *m = t;
}

/// Cholesky factor of the Jacobi-scaled Schur complement `D^{-1/2} M D^{-1/2}`.
struct Schur {
    dense: Vec<f64>,
    factor: ProfileCholesky,
    /// `D^{-1/2}`.
    inv_sqrt_diag: Vec<f64>,
    m: usize,
}

impl Schur {
    fn factor(mut dense: Vec<f64>, m: usize, reg: f64) -> Option<Self> {
        let inv_sqrt_diag: Vec<f64> = (0..m)
            .map(|i| {
                let d = dense[i * m + i];
                if d > 0.0 {
                    1.0 / d.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        for i in 0..m {
            for j in 0..m {
                dense[i * m + j] *= inv_sqrt_diag[i] * inv_sqrt_diag[j];
            }
        }
        let mut shift = reg;
        loop {
            if let Some(factor) = ProfileCholesky::factor(&dense, m, shift) {
                return Some(Self {
                    dense,
                    factor,
                    inv_sqrt_diag,
                    m,
                });
            }
            shift *= 10.0;
            if shift > MAX_REGULARIZATION * (1.0 + 1e-9) {
                return None;
            }
        }
    }

    /// Applies the factored inverse of `M` (up to the diagonal shift).
    fn apply_inverse(&self, rhs: &mut [f64]) {
        for (r, s) in rhs.iter_mut().zip(&self.inv_sqrt_diag) {
            *r *= s;
        }
        self.factor.solve_in_place(rhs);
        for (r, s) in rhs.iter_mut().zip(&self.inv_sqrt_diag) {
            *r *= s;
        }
    }

    /// Solves with two steps of iterative refinement against the unshifted matrix.
    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut x = rhs.to_vec();
        self.apply_inverse(&mut x);
        for _ in 0..2 {
            // scaled dense: M = D^{1/2} dense D^{1/2}
            let xs: Vec<f64> = x.iter().zip(&self.inv_sqrt_diag).map(|(a, s)| a / s).collect();
            let mut r: Vec<f64> = (0..m)
                .map(|i| rhs[i] - dot(&self.dense[i * m..(i + 1) * m], &xs) / self.inv_sqrt_diag[i])
                .collect();
            self.apply_inverse(&mut r);
            for (xi, ri) in x.iter_mut().zip(&r) {
                *xi += ri;
            }
        }
        x
    }
}

/// Solves `A(W Aᵀ(y) W) = rhs`, refining against the operator itself. The
/// dense Schur complement loses accuracy near the optimum; the operator does
/// not.
fn refine(p: &Problem<'_>, scalings: &[NtScaling], schur: &Schur, rhs: &[f64]) -> Vec<f64> {
    let residual = |y: &[f64]| -> Vec<f64> {
        let aty = p.apply_transpose(y);
        let w: Point = scalings.iter().zip(&aty).map(|(s, a)| s.sandwich(a)).collect();
        let ay = p.apply(&w);
        rhs.iter().zip(&ay).map(|(r, a)| r - a).collect()
    };
    let mut y = schur.solve(rhs);
    let mut r = residual(&y);
    let mut rnorm = dot(&r, &r).sqrt();
    for _ in 0..3 {
        if rnorm == 0.0 {
            break;
        }
        let mut dy = r.clone();
        schur.apply_inverse(&mut dy);
        let trial: Vec<f64> = y.iter().zip(&dy).map(|(a, b)| a + b).collect();
        let r_trial = residual(&trial);
        let n_trial = dot(&r_trial, &r_trial).sqrt();
        if n_trial >= rnorm {
            break;
        }
        y = trial;
        r = r_trial;
        rnorm = n_trial;
    }
    y
}

struct Direction {
    dx: Point,
    dz: Point,
    dy: Vec<f64>,
    dtau: f64,
    dkappa: f64,
}

/// Quantities shared by the predictor and corrector of one iteration.
struct Linearization<'p> {
    problem: &'p Problem<'p>,
    scalings: Vec<NtScaling>,
    schur: Schur,
    dx2: Point,
    dy2: Vec<f64>,
    denom_base: f64,
}

struct Iterate {
    x: Point,
    z: Point,
    y: Vec<f64>,
    tau: f64,
    kappa: f64,
}

struct ResidualState {
    r1: Vec<f64>,
    r2: Point,
    r3: f64,
}

impl<'p> Linearization<'p> {
    fn new(problem: &'p Problem<'p>, it: &Iterate, reg: f64) -> Option<Self> {
        let scalings = it
            .x
            .iter()
            .zip(&it.z)
            .map(|(x, z)| NtScaling::new(x, z))
            .collect::<Option<Vec<_>>>()?;
        let schur = Schur::factor(problem.schur(&scalings), problem.m, reg)?;
        let c = &problem.c;
        let wcw: Point = scalings.iter().zip(c).map(|(s, cb)| s.sandwich(cb)).collect();
        let mut rhs2 = problem.apply(&wcw);
        for (r, b) in rhs2.iter_mut().zip(&problem.b) {
            *r += b;
        }
        let dy2 = refine(problem, &scalings, &schur, &rhs2);
        let aty2 = problem.apply_transpose(&dy2);
        let dx2: Point = scalings
            .iter()
            .zip(&aty2)
            .zip(c)
            .map(|((s, a), cb)| s.sandwich(&(a - cb)))
            .collect();
        let denom_base = inner(c, &dx2) - dot(&problem.b, &dy2);
        Some(Self {
            problem,
            scalings,
            schur,
            dx2,
            dy2,
            denom_base,
        })
    }

    /// Solves the Newton system with complementarity right-hand side `rc`
    /// (`dX + W dZ W = rc`), `τκ` target `r_tk`, and residual weight `eta`.
    fn direction(
        &self,
        it: &Iterate,
        res: &ResidualState,
        rc: &Point,
        r_tk: f64,
        eta: f64,
    ) -> Direction {
        let p = self.problem;
        let c = &p.c;
        let t: Point = self
            .scalings
            .iter()
            .zip(&res.r2)
            .map(|(s, r2)| s.sandwich(&(r2 * eta)))
            .collect();
        let a_rc = p.apply(rc);
        let a_t = p.apply(&t);
        let rhs1: Vec<f64> = (0..p.m)
            .map(|i| eta * res.r1[i] - a_rc[i] + a_t[i])
            .collect();
        let dy1 = refine(p, &self.scalings, &self.schur, &rhs1);
        let aty1 = p.apply_transpose(&dy1);
        let dx1: Point = self
            .scalings
            .iter()
            .zip(rc.iter().zip(&res.r2))
            .zip(&aty1)
            .map(|((s, (rcb, r2)), a)| rcb + s.sandwich(&(a - r2 * eta)))
            .collect();
        let num = eta * res.r3 - r_tk / it.tau + dot(&p.b, &dy1) - inner(c, &dx1);
        let den = self.denom_base - it.kappa / it.tau;
        let dtau = num / den;
        let dy: Vec<f64> = dy1
            .iter()
            .zip(&self.dy2)
            .map(|(a, b)| a + dtau * b)
            .collect();
        let mut dx = dx1;
        axpy(dtau, &self.dx2, &mut dx);
        let aty = p.apply_transpose(&dy);
        let mut dz: Point = res
            .r2
            .iter()
            .zip(&aty)
            .zip(c)
            .map(|((r2, a), cb)| r2 * eta - a + cb * dtau)
            .collect();
        for m in dx.iter_mut().chain(dz.iter_mut()) {
            symmetrize(m);
        }
        let dkappa = (r_tk - it.kappa * dtau) / it.tau;
        Direction {
            dx,
            dz,
            dy,
            dtau,
            dkappa,
        }
    }

    fn max_step(&self, it: &Iterate, d: &Direction) -> f64 {
        let mut alpha = f64::INFINITY;
        for ((s, dx), dz) in self.scalings.iter().zip(&d.dx).zip(&d.dz) {
            alpha = alpha
                .min(s.max_step(&s.scale_primal(dx)))
                .min(s.max_step(&s.scale_dual(dz)));
        }
        if d.dtau < 0.0 {
            alpha = alpha.min(-it.tau / d.dtau);
        }
        if d.dkappa < 0.0 {
            alpha = alpha.min(-it.kappa / d.dkappa);
        }
        alpha
    }
}

struct Measures {
    /// Residuals of the caller's program.
    residuals: Residuals,
    primal_objective: f64,
    dual_objective: f64,
    /// Convergence test, evaluated on the normalized data.
    converged: bool,
}

/// Residuals of the current iterate. The convergence test runs on the
/// normalized data so that rescaling `b` or `c` leaves the iteration sequence
/// unchanged; its thresholds also bound the caller-facing relative residuals.
fn measure(p: &Problem<'_>, it: &Iterate, res: &ResidualState, settings: &SolverSettings) -> Measures {
    let tau = it.tau;
    let pobj = inner(&p.c, &it.x) / tau;
    let dobj = dot(&p.b, &it.y) / tau;
    let r1n = res.r1.iter().map(|v| v * v).sum::<f64>().sqrt() / tau;
    let r2n = norm(&res.r2) / tau;
    let compl = inner(&it.x, &it.z) / (tau * tau);
    let t = p.scale_b * p.scale_c;
    let gap = compl.max((pobj - dobj).abs());
    // Equivalent to the relative tests on the caller's data, since
    // `scale_b / (1 + ‖b‖) <= 1` and likewise for `c`.
    let converged = r1n <= settings.primal_tolerance
        && r2n <= settings.dual_tolerance
        && gap <= settings.gap_tolerance * (pobj.abs() + dobj.abs() + 1.0 / t);

    let (pobj, dobj) = (pobj * t, dobj * t);
    let residuals = Residuals {
        primal: r1n * p.scale_b / (1.0 + p.norm_b),
        dual: r2n * p.scale_c / (1.0 + p.norm_c),
        gap: compl * t,
        relative_gap: (compl * t).max((pobj - dobj).abs()) / (1.0 + pobj.abs() + dobj.abs()),
    };
    Measures {
        residuals,
        primal_objective: pobj,
        dual_objective: dobj,
        converged,
    }
}

fn residual_state(p: &Problem<'_>, it: &Iterate) -> ResidualState {
    let ax = p.apply(&it.x);
    let r1 = (0..p.m).map(|i| p.b[i] * it.tau - ax[i]).collect();
    let aty = p.apply_transpose(&it.y);
    let c = &p.c;
    let r2 = c
        .iter()
        .zip(&aty)
        .zip(&it.z)
        .map(|((cb, a), zb)| cb * it.tau - a - zb)
        .collect();
    let r3 = dot(&p.b, &it.y) - inner(c, &it.x) - it.kappa;
    ResidualState { r1, r2, r3 }
}

#[derive(Debug, Error, PartialEq)]
pub enum SolveError {
    #[error("invalid solver settings: {0}")]
    Settings(#[from] SettingsError),
}

/// Solves `program`. Deterministic: identical inputs give bitwise-identical output.
pub fn solve(program: &ConicProgram, settings: &SolverSettings) -> Result<Solution, SolveError> {
    settings.validate()?;
    let p = Problem::new(program);
    let mut it = Iterate {
        x: p.identity_point(),
        z: p.identity_point(),
        y: vec![0.0; p.m],
        tau: 1.0,
        kappa: 1.0,
    };
    let mut history: Vec<IterationRecord> = Vec::new();
    let mut stalls = 0;
    let status = loop {
        let iteration = history.len();
        let res = residual_state(&p, &it);
        let Measures {
            residuals,
            primal_objective: pobj,
            dual_objective: dobj,
            converged,
        } = measure(&p, &it, &res, settings);
        let mu = (inner(&it.x, &it.z) + it.tau * it.kappa) / (p.degree + 1.0);
        history.push(IterationRecord {
            iteration,
            mu,
            primal_objective: pobj,
            dual_objective: dobj,
            residuals,
            tau: it.tau,
            kappa: it.kappa,
            step: 0.0,
        });
        if !mu.is_finite() || !residuals.primal.is_finite() || !residuals.dual.is_finite() {
            break SolveStatus::NumericalTrouble;
        }
        if converged {
            break SolveStatus::Optimal;
        }
        let by = dot(&p.b, &it.y);
        if by > 0.0 {
            let aty = p.apply_transpose(&it.y);
            let mut cert = aty;
            axpy(1.0, &it.z, &mut cert);
            if norm(&cert) <= settings.infeasibility_tolerance * by {
                break SolveStatus::Infeasible;
            }
        }
        let cx = inner(&p.c, &it.x);
        if cx < 0.0 {
            let ax = p.apply(&it.x);
            let n = ax.iter().map(|v| v * v).sum::<f64>().sqrt();
            if n <= settings.infeasibility_tolerance * (-cx) {
                break SolveStatus::Unbounded;
            }
        }
        if iteration >= settings.max_iterations {
            break SolveStatus::IterLimit;
        }

        let Some(lin) = Linearization::new(&p, &it, settings.regularization) else {
            break SolveStatus::NumericalTrouble;
        };

        // Predictor: affine-scaling direction.
        let rc_aff: Point = it.x.iter().map(|x| -x).collect();
        let aff = lin.direction(&it, &res, &rc_aff, -it.tau * it.kappa, 1.0);
        let alpha_aff = lin.max_step(&it, &aff).min(1.0);
        let sigma = (1.0 - alpha_aff).clamp(0.0, 1.0).powi(3);

        // Corrector with Mehrotra second-order term, built in scaled coordinates.
        let target = sigma * mu;
        let rc: Point = lin
            .scalings
            .iter()
            .zip(aff.dx.iter().zip(&aff.dz))
            .map(|(s, (dx, dz))| {
                let n = s.lambda.len();
                let sx = s.scale_primal(dx);
                let sz = s.scale_dual(dz);
                let prod = 0.5 * (&sx * &sz + &sz * &sx);
                let mut r = -prod;
                for i in 0..n {
                    r[(i, i)] += target - s.lambda[i] * s.lambda[i];
                }
                s.unscale(&s.lyapunov_solve(&r))
            })
            .collect();
        let r_tk = target - it.tau * it.kappa - aff.dtau * aff.dkappa;
        let dir = lin.direction(&it, &res, &rc, r_tk, 1.0 - sigma);
        let alpha = (settings.step_fraction * lin.max_step(&it, &dir)).min(1.0);
        if !alpha.is_finite() || dir.dtau.is_nan() {
            break SolveStatus::NumericalTrouble;
        }
        history.last_mut().unwrap().step = alpha;

        axpy(alpha, &dir.dx, &mut it.x);
        axpy(alpha, &dir.dz, &mut it.z);
        for (y, dy) in it.y.iter_mut().zip(&dir.dy) {
            *y += alpha * dy;
        }
        it.tau += alpha * dir.dtau;
        it.kappa += alpha * dir.dkappa;

        if alpha < 1e-8 {
            stalls += 1;
            if stalls >= 3 {
                break SolveStatus::NumericalTrouble;
            }
        } else {
            stalls = 0;
        }
    };

    let record = history.last().cloned().unwrap();
    let (sb, sc) = (p.scale_b, p.scale_c);
    let (x_scale, yz_scale) = match status {
        // Certificates are normalized to bᵀy = 1 and cᵀx = -1.
        SolveStatus::Infeasible => (sb / it.tau, 1.0 / (sb * dot(&p.b, &it.y))),
        SolveStatus::Unbounded => (-1.0 / (sc * inner(&p.c, &it.x)), sc / it.tau),
        _ => (sb / it.tau, sc / it.tau),
    };
    let x = p.to_svec(&it.x).iter().map(|v| v * x_scale).collect();
    let y = it.y.iter().map(|v| v * yz_scale).collect();
    let z = p.to_svec(&it.z).iter().map(|v| v * yz_scale).collect();
    Ok(Solution {
        status,
        x,
        y,
        z,
        primal_objective: record.primal_objective,
        dual_objective: record.dual_objective,
        iterations: record.iteration,
        residuals: record.residuals,
        history,
    })
}
