//! Block-structured standard-form conic programs.
//!
//! A [`ConicProgram`] is
//!
//! ```text
//! minimize    <c, x>
//! subject to  A x = b
//!             x in K = K_1 x K_2 x ... x K_p
//! ```
//!
//! where each block `K_i` is either a PSD cone of order `s` or a nonnegative
//! orthant of dimension `f`. PSD blocks are stored in scaled upper-triangular
//! vector form: entry `(i, j)` with `i <= j` sits at offset `j (j + 1) / 2 + i`
//! and off-diagonal entries carry a factor `sqrt(2)`, so `<svec(X), svec(Y)>`
//! equals the Frobenius product `tr(X Y)`.

use std::collections::BTreeMap;
use std::f64::consts::SQRT_2;
use std::fmt;

use nalgebra::DMatrix;
use thiserror::Error;

/// Cone attached to one variable block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cone {
    /// Symmetric positive semidefinite matrices of the given order.
    Psd(usize),
    /// Nonnegative orthant (diagonal block) of the given dimension.
    Nonneg(usize),
}

impl Cone {
    /// Number of scalar coordinates the block occupies.
    pub fn dim(&self) -> usize {
        match *self {
            Cone::Psd(s) => s * (s + 1) / 2,
            Cone::Nonneg(f) => f,
        }
    }

    /// Matrix order of the block (a nonnegative block is a diagonal matrix).
    pub fn order(&self) -> usize {
        match *self {
            Cone::Psd(s) | Cone::Nonneg(s) => s,
        }
    }

    /// Barrier degree contributed by the block.
    pub fn degree(&self) -> usize {
        self.order()
    }
}

impl fmt::Display for Cone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cone::Psd(s) => write!(f, "psd({s})"),
            Cone::Nonneg(n) => write!(f, "nonneg({n})"),
        }
    }
}

/// A variable block with a diagnostic label.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub cone: Cone,
    pub label: String,
}

/// Sparse equality row, sorted by column with no duplicates.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseRow {
    pub entries: Vec<(usize, f64)>,
}

impl SparseRow {
    pub fn dot(&self, x: &[f64]) -> f64 {
        self.entries.iter().map(|&(j, a)| a * x[j]).sum()
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ProgramError {
    #[error("block {index} ({label}) is empty")]
    EmptyBlock { index: usize, label: String },
    #[error("cost vector has length {got}, expected {expected}")]
    CostLength { got: usize, expected: usize },
    #[error("{rows} equality rows but {rhs} right-hand sides")]
    RhsLength { rows: usize, rhs: usize },
    #[error("row {row} references column {col} beyond dimension {dim}")]
    ColumnOutOfRange { row: usize, col: usize, dim: usize },
    #[error("row {row} is not sorted or has duplicate columns")]
    UnsortedRow { row: usize },
    #[error("non-finite coefficient in {0}")]
    NonFinite(&'static str),
    #[error("program has no variables")]
    NoVariables,
}

/// Identifies a block inside a program or builder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BlockId(pub usize);

/// Identifies an equality row inside a builder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RowId(pub usize);

/// Offset of entry `(i, j)` inside an svec-packed block (order of `i`, `j` irrelevant).
pub fn svec_offset(i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    j * (j + 1) / 2 + i
}

/// Packs a symmetric matrix into scaled vector form.
pub fn svec(m: &DMatrix<f64>) -> Vec<f64> {
    let s = m.nrows();
    let mut out = vec![0.0; s * (s + 1) / 2];
    for j in 0..s {
        for i in 0..=j {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            out[svec_offset(i, j)] = if i == j { v } else { SQRT_2 * v };
        }
    }
    out
}

/// Inverse of [`svec`].
pub fn smat(v: &[f64], s: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(s, s);
    for j in 0..s {
        for i in 0..=j {
            let x = v[svec_offset(i, j)];
            if i == j {
                m[(i, i)] = x;
            } else {
                m[(i, j)] = x / SQRT_2;
                m[(j, i)] = x / SQRT_2;
            }
        }
    }
    m
}

/// An immutable standard-form conic program.
#[derive(Debug, Clone, PartialEq)]
pub struct ConicProgram {
    blocks: Vec<Block>,
    offsets: Vec<usize>,
    dim: usize,
    cost: Vec<f64>,
    rows: Vec<SparseRow>,
    rhs: Vec<f64>,
}

impl ConicProgram {
    pub fn new(
        blocks: Vec<Block>,
        cost: Vec<f64>,
        rows: Vec<SparseRow>,
        rhs: Vec<f64>,
    ) -> Result<Self, ProgramError> {
        let mut offsets = Vec::with_capacity(blocks.len());
        let mut dim = 0;
        for (index, b) in blocks.iter().enumerate() {
            if b.cone.dim() == 0 {
                return Err(ProgramError::EmptyBlock {
                    index,
                    label: b.label.clone(),
                });
            }
            offsets.push(dim);
            dim += b.cone.dim();
        }
        if dim == 0 {
            return Err(ProgramError::NoVariables);
        }
        if cost.len() != dim {
            return Err(ProgramError::CostLength {
                got: cost.len(),
                expected: dim,
            });
        }
        if rows.len() != rhs.len() {
            return Err(ProgramError::RhsLength {
                rows: rows.len(),
                rhs: rhs.len(),
            });
        }
        if cost.iter().any(|v| !v.is_finite()) {
            return Err(ProgramError::NonFinite("cost"));
        }
        if rhs.iter().any(|v| !v.is_finite()) {
            return Err(ProgramError::NonFinite("right-hand side"));
        }
        for (r, row) in rows.iter().enumerate() {
            let mut prev: Option<usize> = None;
            for &(col, a) in &row.entries {
                if col >= dim {
                    return Err(ProgramError::ColumnOutOfRange { row: r, col, dim });
                }
                if prev.is_some_and(|p| p >= col) {
                    return Err(ProgramError::UnsortedRow { row: r });
                }
                if !a.is_finite() {
                    return Err(ProgramError::NonFinite("constraint matrix"));
                }
                prev = Some(col);
            }
        }
        Ok(Self {
            blocks,
            offsets,
            dim,
            cost,
            rows,
            rhs,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_constraints(&self) -> usize {
        self.rows.len()
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn block_offset(&self, b: BlockId) -> usize {
        self.offsets[b.0]
    }

    pub fn cost(&self) -> &[f64] {
        &self.cost
    }

    pub fn rows(&self) -> &[SparseRow] {
        &self.rows
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    /// Total barrier degree of the cone.
    pub fn degree(&self) -> usize {
        self.blocks.iter().map(|b| b.cone.degree()).sum()
    }

    /// Locates a global coordinate: block index and `(i, j)` inside it.
    pub fn locate(&self, col: usize) -> (usize, usize, usize) {
        let b = match self.offsets.binary_search(&col) {
            Ok(b) => b,
            Err(b) => b - 1,
        };
        let local = col - self.offsets[b];
        match self.blocks[b].cone {
            Cone::Nonneg(_) => (b, local, local),
            Cone::Psd(_) => {
                let mut j = 0;
                while (j + 1) * (j + 2) / 2 <= local {
                    j += 1;
                }
                (b, local - j * (j + 1) / 2, j)
            }
        }
    }

    /// Global coordinate of entry `(i, j)` of block `b`.
    pub fn coordinate(&self, b: BlockId, i: usize, j: usize) -> usize {
        match self.blocks[b.0].cone {
            Cone::Psd(_) => self.offsets[b.0] + svec_offset(i, j),
            Cone::Nonneg(_) => {
                assert_eq!(i, j, "nonnegative blocks are diagonal");
                self.offsets[b.0] + i
            }
        }
    }

    /// Unpacks block `b` of a full variable vector into a symmetric matrix
    /// (diagonal for nonnegative blocks).
    pub fn block_matrix(&self, x: &[f64], b: BlockId) -> DMatrix<f64> {
        let off = self.offsets[b.0];
        let cone = self.blocks[b.0].cone;
        let seg = &x[off..off + cone.dim()];
        match cone {
            Cone::Psd(s) => smat(seg, s),
            Cone::Nonneg(_) => DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(seg)),
        }
    }

    /// Objective value `<c, x>`.
    pub fn objective(&self, x: &[f64]) -> f64 {
        self.cost.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Returns a copy with the objective multiplied by `factor`.
    pub fn with_scaled_objective(&self, factor: f64) -> Self {
        let mut p = self.clone();
        p.cost.iter_mut().for_each(|c| *c *= factor);
        p
    }
}

/// Incremental construction of a [`ConicProgram`] in matrix-entry terms.
///
/// Coefficients are given per scalar matrix entry: `add_coefficient(r, b, i, j, a)`
/// adds `a * X_b[i][j]` to row `r`, treating the symmetric pair `(i, j)`/`(j, i)`
/// as one unknown. The builder performs the svec scaling.
#[derive(Debug, Default)]
pub struct ProgramBuilder {
    blocks: Vec<Block>,
    offsets: Vec<usize>,
    dim: usize,
    cost: BTreeMap<usize, f64>,
    rows: Vec<BTreeMap<usize, f64>>,
    rhs: Vec<f64>,
}

impl ProgramBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_block(&mut self, cone: Cone, label: impl Into<String>) -> BlockId {
        self.blocks.push(Block {
            cone,
            label: label.into(),
        });
        self.offsets.push(self.dim);
        self.dim += cone.dim();
        BlockId(self.blocks.len() - 1)
    }

    pub fn add_row(&mut self, rhs: f64) -> RowId {
        self.rows.push(BTreeMap::new());
        self.rhs.push(rhs);
        RowId(self.rows.len() - 1)
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn add_rhs(&mut self, row: RowId, delta: f64) {
        self.rhs[row.0] += delta;
    }

    fn column(&self, b: BlockId, i: usize, j: usize) -> (usize, f64) {
        let cone = self.blocks[b.0].cone;
        let n = cone.order();
        assert!(i < n && j < n, "entry ({i}, {j}) outside block {} of order {n}", b.0);
        match cone {
            Cone::Psd(_) => {
                let scale = if i == j { 1.0 } else { 1.0 / SQRT_2 };
                (self.offsets[b.0] + svec_offset(i, j), scale)
            }
            Cone::Nonneg(_) => {
                assert_eq!(i, j, "nonnegative blocks are diagonal");
                (self.offsets[b.0] + i, 1.0)
            }
        }
    }

    /// Adds `a · X_ij` to a row. The symmetric partner `X_ji` is the same
    /// scalar, so `<F, X>` needs `2 F_ij` for `i != j`.
    pub fn add_coefficient(&mut self, row: RowId, b: BlockId, i: usize, j: usize, a: f64) {
        if a == 0.0 {
            return;
        }
        let (col, scale) = self.column(b, i, j);
        *self.rows[row.0].entry(col).or_insert(0.0) += a * scale;
    }

    /// Adds `a · X_ij` to the objective, with the same convention as
    /// [`ProgramBuilder::add_coefficient`].
    pub fn add_cost(&mut self, b: BlockId, i: usize, j: usize, a: f64) {
        if a == 0.0 {
            return;
        }
        let (col, scale) = self.column(b, i, j);
        *self.cost.entry(col).or_insert(0.0) += a * scale;
    }

    pub fn build(self) -> Result<ConicProgram, ProgramError> {
        let mut cost = vec![0.0; self.dim];
        for (col, a) in self.cost {
            cost[col] = a;
        }
        let rows = self
            .rows
            .into_iter()
            .map(|r| SparseRow {
                entries: r.into_iter().filter(|&(_, a)| a != 0.0).collect(),
            })
            .collect();
        ConicProgram::new(self.blocks, cost, rows, self.rhs)
    }
}
