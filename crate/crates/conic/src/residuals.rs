//! KKT residuals recomputed from the program's sparse rows.
//!
//! This path shares no code with the solver's internal block bookkeeping; it
//! is used to audit reported residuals.

use nalgebra::SymmetricEigen;

use crate::program::{BlockId, Cone, ConicProgram};
use crate::solver::Residuals;

/// Residuals of the primal–dual point `(x, y, z)` in svec coordinates.
pub fn residuals(program: &ConicProgram, x: &[f64], y: &[f64], z: &[f64]) -> Residuals {
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let primal: Vec<f64> = program
        .rows()
        .iter()
        .zip(program.rhs())
        .map(|(row, b)| row.dot(x) - b)
        .collect();
    let mut dual: Vec<f64> = z
        .iter()
        .zip(program.cost())
        .map(|(zi, ci)| zi - ci)
        .collect();
    for (row, yi) in program.rows().iter().zip(y) {
        for &(j, a) in &row.entries {
            dual[j] += a * yi;
        }
    }
    let cx: f64 = program.cost().iter().zip(x).map(|(c, v)| c * v).sum();
    let by: f64 = program.rhs().iter().zip(y).map(|(b, v)| b * v).sum();
    let xz: f64 = x.iter().zip(z).map(|(a, b)| a * b).sum();
    Residuals {
        primal: norm(&primal) / (1.0 + norm(program.rhs())),
        dual: norm(&dual) / (1.0 + norm(program.cost())),
        gap: xz,
        relative_gap: xz.max((cx - by).abs()) / (1.0 + cx.abs() + by.abs()),
    }
}

/// Smallest eigenvalue over all blocks of a point (diagonal entries for
/// nonnegative blocks). Nonnegative iff the point lies in the cone.
pub fn min_cone_eigenvalue(program: &ConicProgram, x: &[f64]) -> f64 {
    let mut out = f64::INFINITY;
    for (b, block) in program.blocks().iter().enumerate() {
        let m = program.block_matrix(x, BlockId(b));
        let v = match block.cone {
            Cone::Nonneg(_) => m.diagonal().min(),
            Cone::Psd(_) => SymmetricEigen::new(m).eigenvalues.min(),
        };
        out = out.min(v);
    }
    out
}
