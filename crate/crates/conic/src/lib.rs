//! Block-structured conic programs over products of PSD and nonnegative
//! cones, with a homogeneous self-dual interior-point solver.
//!
//! Programs use the standard primal form
//!
//! ```text
//! min <c, x>  s.t.  A x = b,  x ∈ K
//! ```
//!
//! where `x` stacks the scaled half-vectorization ([`svec`]) of each block.

mod cholesky;
pub mod program;
pub mod residuals;
mod scaling;
pub mod sdpa;
pub mod solver;

pub use program::{
    smat, svec, svec_offset, Block, BlockId, Cone, ConicProgram, ProgramBuilder, ProgramError,
    RowId, SparseRow,
};
pub use residuals::{min_cone_eigenvalue, residuals};
pub use sdpa::{export_standard_form, parse_standard_form, ParseError};
pub use solver::{
    solve, IterationRecord, Residuals, SettingsError, Solution, SolveError, SolveStatus,
    SolverSettings,
};
