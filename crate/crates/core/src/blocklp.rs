//! Block-structured LP data model.
//!
//! The problem has `N` blocks plus a linking block 0:
//!
//! ```text
//! min  c_0 x_0 + c_1 x_1 + ... + c_N x_N
//!      A_0 x_0                              = b_0
//!      d_0 <= C_0 x_0                       <= f_0
//!      A_i x_0 + B_i x_i                    = b_i        (i = 1..N)
//!      d_i <= C_i x_0 + D_i x_i             <= f_i
//!      F_0 x_0 + F_1 x_1 + ... + F_N x_N    = b_{N+1}
//!      d_{N+1} <= G_0 x_0 + ... + G_N x_N   <= f_{N+1}
//!      l_i <= x_i <= u_i
//! ```
//!
//! Block 0 stores `A_0`, `C_0`, `F_0`, `G_0` in the `a`, `c`, `f`, `g` slots of a regular
//! [`Block`]; its `b` and `d` slots have zero columns. The sides of the linking rows live in
//! [`LinkingSides`].

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BlockLpError {
    #[error("row {row}: column {col} out of range (n_cols = {n_cols})")]
    ColumnOutOfRange { row: usize, col: usize, n_cols: usize },
    #[error("row {row}: column indices not strictly increasing at column {col}")]
    UnsortedRow { row: usize, col: usize },
    #[error("row {row}: coefficient for column {col} is zero or not finite")]
    BadCoefficient { row: usize, col: usize },
    #[error("triplet row {row} out of range (n_rows = {n_rows})")]
    RowOutOfRange { row: usize, n_rows: usize },
    #[error("duplicate triplet at ({row}, {col})")]
    DuplicateEntry { row: usize, col: usize },
    #[error("target block count {k} out of range 1..={n}")]
    GroupCount { k: usize, n: usize },
}

/// Row-major sparse matrix with sorted column indices and no stored zeros.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseRowMatrix {
    n_cols: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl SparseRowMatrix {
    /// An `n_rows x n_cols` matrix without entries.
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        SparseRowMatrix { n_cols, rows: vec![Vec::new(); n_rows] }
    }

    /// Builds a matrix from per-row entry lists, checking every invariant.
    pub fn from_rows(n_cols: usize, rows: Vec<Vec<(usize, f64)>>) -> Result<Self, BlockLpError> {
        for (r, row) in rows.iter().enumerate() {
            check_row(r, row, n_cols)?;
        }
        Ok(SparseRowMatrix { n_cols, rows })
    }

    /// Builds a matrix from unordered triplets. Duplicates are rejected.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self, BlockLpError> {
        let mut rows = vec![Vec::new(); n_rows];
        for (r, c, v) in triplets {
            if r >= n_rows {
                return Err(BlockLpError::RowOutOfRange { row: r, n_rows });
            }
            rows[r].push((c, v));
        }
        for (r, row) in rows.iter_mut().enumerate() {
            row.sort_by_key(|&(c, _)| c);
            if let Some(w) = row.windows(2).find(|w| w[0].0 == w[1].0) {
                return Err(BlockLpError::DuplicateEntry { row: r, col: w[0].0 });
            }
        }
        Self::from_rows(n_cols, rows)
    }

    /// Dense constructor, mostly for tests. Zeros are skipped.
    pub fn from_dense(n_cols: usize, dense: &[&[f64]]) -> Self {
        let rows = dense
            .iter()
            .map(|row| {
                assert_eq!(row.len(), n_cols, "dense row width mismatch");
                row.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(c, v)| (c, *v)).collect()
            })
            .collect();
        Self::from_rows(n_cols, rows).expect("dense rows are valid")
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn row(&self, r: usize) -> &[(usize, f64)] {
        &self.rows[r]
    }

    pub fn rows(&self) -> &[Vec<(usize, f64)>] {
        &self.rows
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.rows.iter().enumerate().flat_map(|(r, row)| row.iter().map(move |&(c, v)| (r, c, v)))
    }

    /// Every invariant violation as `(row, message)`.
    pub fn violations(&self) -> Vec<BlockLpError> {
        self.rows
            .iter()
            .enumerate()
            .filter_map(|(r, row)| check_row(r, row, self.n_cols).err())
            .collect()
    }

    /// Stacks `self` on top of `other` (same column count).
    fn vstack(mut self, other: &SparseRowMatrix) -> Self {
        debug_assert_eq!(self.n_cols, other.n_cols);
        self.rows.extend(other.rows.iter().cloned());
        self
    }
}

fn check_row(r: usize, row: &[(usize, f64)], n_cols: usize) -> Result<(), BlockLpError> {
    let mut prev: Option<usize> = None;
    for &(c, v) in row {
        if c >= n_cols {
            return Err(BlockLpError::ColumnOutOfRange { row: r, col: c, n_cols });
        }
        if prev.is_some_and(|p| p >= c) {
            return Err(BlockLpError::UnsortedRow { row: r, col: c });
        }
        if v == 0.0 || !v.is_finite() {
            return Err(BlockLpError::BadCoefficient { row: r, col: c });
        }
        prev = Some(c);
    }
    Ok(())
}

/// One distribution unit. For block 0 the "local" columns are the linking columns.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Block {
    /// Equality rows over linking columns.
    pub a: SparseRowMatrix,
    /// Equality rows over local columns.
    pub b: SparseRowMatrix,
    /// Inequality rows over linking columns.
    pub c: SparseRowMatrix,
    /// Inequality rows over local columns.
    pub d: SparseRowMatrix,
    /// This block's slice of the linking equality rows.
    pub f: SparseRowMatrix,
    /// This block's slice of the linking inequality rows.
    pub g: SparseRowMatrix,
    pub rhs_eq: Vec<f64>,
    pub lhs_ineq: Vec<f64>,
    pub rhs_ineq: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub obj: Vec<f64>,
}

impl Block {
    /// An empty block with the given dimensions.
    pub fn empty(
        n_linking_cols: usize,
        n_cols: usize,
        n_eq: usize,
        n_ineq: usize,
        n_link_eq: usize,
        n_link_ineq: usize,
    ) -> Self {
        Block {
            a: SparseRowMatrix::zeros(n_eq, n_linking_cols),
            b: SparseRowMatrix::zeros(n_eq, n_cols),
            c: SparseRowMatrix::zeros(n_ineq, n_linking_cols),
            d: SparseRowMatrix::zeros(n_ineq, n_cols),
            f: SparseRowMatrix::zeros(n_link_eq, n_cols),
            g: SparseRowMatrix::zeros(n_link_ineq, n_cols),
            rhs_eq: vec![0.0; n_eq],
            lhs_ineq: vec![f64::NEG_INFINITY; n_ineq],
            rhs_ineq: vec![f64::INFINITY; n_ineq],
            lower: vec![0.0; n_cols],
            upper: vec![f64::INFINITY; n_cols],
            obj: vec![0.0; n_cols],
        }
    }

    pub fn n_eq(&self) -> usize {
        self.a.n_rows()
    }

    pub fn n_ineq(&self) -> usize {
        self.c.n_rows()
    }

    /// Number of columns this block owns (linking columns for block 0).
    pub fn n_cols(&self) -> usize {
        self.lower.len()
    }

    pub fn nnz(&self) -> usize {
        self.a.nnz() + self.b.nnz() + self.c.nnz() + self.d.nnz() + self.f.nnz() + self.g.nnz()
    }
}

/// Sides of the linking rows (`b_{N+1}`, `d_{N+1}`, `f_{N+1}`).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinkingSides {
    pub rhs_eq: Vec<f64>,
    pub lhs_ineq: Vec<f64>,
    pub rhs_ineq: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockLp {
    /// `blocks[0]` is the linking block, `blocks[1..=N]` the regular ones.
    pub blocks: Vec<Block>,
    pub linking: LinkingSides,
    pub objective_offset: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RowKind {
    Eq,
    Ineq,
}

impl RowKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RowKind::Eq => "eq",
            RowKind::Ineq => "ineq",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RowOwner {
    Block(usize),
    Linking,
}

/// Address of a constraint row in original coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RowRef {
    pub owner: RowOwner,
    pub kind: RowKind,
    pub index: usize,
}

impl RowRef {
    pub fn block(block: usize, kind: RowKind, index: usize) -> Self {
        RowRef { owner: RowOwner::Block(block), kind, index }
    }

    pub fn linking(kind: RowKind, index: usize) -> Self {
        RowRef { owner: RowOwner::Linking, kind, index }
    }

    pub fn is_linking(&self) -> bool {
        self.owner == RowOwner::Linking
    }
}

impl fmt::Display for RowRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.owner {
            RowOwner::Block(b) => write!(f, "block({b}),{},{}", self.kind.as_str(), self.index),
            RowOwner::Linking => write!(f, "linking,{},{}", self.kind.as_str(), self.index),
        }
    }
}

/// Address of a column in original coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ColRef {
    Linking(usize),
    Local { block: usize, index: usize },
}

impl fmt::Display for ColRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ColRef::Linking(j) => write!(f, "linking,{j}"),
            ColRef::Local { block, index } => write!(f, "local({block}),{index}"),
        }
    }
}

/// Where a violation was found.
#[derive(Clone, Debug, PartialEq)]
pub enum Location {
    Row(RowRef),
    Col(ColRef),
    Block(usize),
    Linking,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Row(r) => write!(f, "{r}"),
            Location::Col(c) => write!(f, "{c}"),
            Location::Block(b) => write!(f, "block {b}"),
            Location::Linking => write!(f, "linking rows"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub location: Location,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.location {
            Location::Block(_) | Location::Linking => write!(f, "{} in {}", self.message, self.location),
            loc => write!(f, "{} at {}", self.message, loc),
        }
    }
}

impl BlockLp {
    /// A problem with `n_blocks` empty regular blocks and nothing else.
    pub fn empty(n_blocks: usize, n_linking_cols: usize) -> Self {
        let mut blocks = vec![Block::empty(n_linking_cols, n_linking_cols, 0, 0, 0, 0)];
        // block 0 keeps A_0/C_0 over the linking columns and zero-width B/D.
        blocks[0].b = SparseRowMatrix::zeros(0, 0);
        blocks[0].d = SparseRowMatrix::zeros(0, 0);
        blocks.extend((0..n_blocks).map(|_| Block::empty(n_linking_cols, 0, 0, 0, 0, 0)));
        BlockLp { blocks, linking: LinkingSides::default(), objective_offset: 0.0 }
    }

    /// Number of regular blocks `N`.
    pub fn n_blocks(&self) -> usize {
        self.blocks.len() - 1
    }

    pub fn n_linking_cols(&self) -> usize {
        self.blocks[0].n_cols()
    }

    pub fn n_linking_eq(&self) -> usize {
        self.linking.rhs_eq.len()
    }

    pub fn n_linking_ineq(&self) -> usize {
        self.linking.rhs_ineq.len()
    }

    /// Total column count across the linking block and all regular blocks.
    pub fn n_cols_total(&self) -> usize {
        self.blocks.iter().map(Block::n_cols).sum()
    }

    pub fn n_rows_total(&self) -> usize {
        self.blocks.iter().map(|b| b.n_eq() + b.n_ineq()).sum::<usize>()
            + self.n_linking_eq()
            + self.n_linking_ineq()
    }

    /// Entry count over all stored matrices, block 0 counted once.
    pub fn total_nnz(&self) -> usize {
        self.blocks.iter().map(Block::nnz).sum()
    }

    /// Per-block entry counts, index 0 being the linking block.
    pub fn block_nnz(&self) -> Vec<usize> {
        self.blocks.iter().map(Block::nnz).collect()
    }

    /// Column offset of block `i` in the flattened variable order
    /// (linking columns first, then blocks 1..=N).
    pub fn col_offset(&self, block: usize) -> usize {
        self.blocks[..block].iter().map(Block::n_cols).sum()
    }

    /// `c^T x + offset` for a flattened point.
    pub fn objective(&self, x: &[f64]) -> f64 {
        let mut k = 0;
        let mut total = 0.0;
        for block in &self.blocks {
            for &c in &block.obj {
                total += c * x[k];
                k += 1;
            }
        }
        total + self.objective_offset
    }

    /// Every invariant violation. Empty means the problem is well formed.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut push = |location: Location, message: String| out.push(Violation { location, message });
        if self.blocks.is_empty() {
            push(Location::Linking, "missing linking block".into());
            return out;
        }
        let n0 = self.n_linking_cols();
        let n_leq = self.n_linking_eq();
        let n_lineq = self.n_linking_ineq();
        if self.linking.lhs_ineq.len() != n_lineq {
            push(Location::Linking, "linking ineq side length mismatch".into());
        }
        for (i, blk) in self.blocks.iter().enumerate() {
            let nc = blk.n_cols();
            if blk.a.n_rows() != blk.b.n_rows() {
                push(Location::Block(i), format!("eq row-count mismatch in block {i}"));
            }
            if blk.c.n_rows() != blk.d.n_rows() {
                push(Location::Block(i), format!("ineq row-count mismatch in block {i}"));
            }
            if blk.f.n_rows() != n_leq {
                push(Location::Block(i), format!("linking eq row-count mismatch in block {i}"));
            }
            if blk.g.n_rows() != n_lineq {
                push(Location::Block(i), format!("linking ineq row-count mismatch in block {i}"));
            }
            if blk.a.n_cols() != n0 || blk.c.n_cols() != n0 {
                push(Location::Block(i), format!("linking column dimension mismatch in block {i}"));
            }
            let local_width = if i == 0 { 0 } else { nc };
            if blk.b.n_cols() != local_width || blk.d.n_cols() != local_width {
                push(Location::Block(i), format!("local column dimension mismatch in block {i}"));
            }
            if blk.f.n_cols() != nc || blk.g.n_cols() != nc {
                push(Location::Block(i), format!("linking slice width mismatch in block {i}"));
            }
            if blk.upper.len() != nc || blk.obj.len() != nc {
                push(Location::Block(i), format!("column vector length mismatch in block {i}"));
            }
            if blk.rhs_eq.len() != blk.n_eq() {
                push(Location::Block(i), format!("eq side length mismatch in block {i}"));
            }
            if blk.lhs_ineq.len() != blk.n_ineq() || blk.rhs_ineq.len() != blk.n_ineq() {
                push(Location::Block(i), format!("ineq side length mismatch in block {i}"));
            }
            for (name, m) in [("A", &blk.a), ("B", &blk.b), ("C", &blk.c), ("D", &blk.d), ("F", &blk.f), ("G", &blk.g)] {
                for e in m.violations() {
                    push(Location::Block(i), format!("matrix {name}: {e}"));
                }
            }
            let col = |k: usize| if i == 0 { ColRef::Linking(k) } else { ColRef::Local { block: i, index: k } };
            for k in 0..nc.min(blk.upper.len()) {
                let (l, u) = (blk.lower[k], blk.upper[k]);
                if l.is_nan() || u.is_nan() || l == f64::INFINITY || u == f64::NEG_INFINITY {
                    push(Location::Col(col(k)), "invalid bound".into());
                } else if l > u {
                    push(Location::Col(col(k)), "crossed bounds".into());
                }
            }
            for (k, c) in blk.obj.iter().enumerate() {
                if !c.is_finite() {
                    push(Location::Col(col(k)), "non-finite objective coefficient".into());
                }
            }
            for (r, v) in blk.rhs_eq.iter().enumerate() {
                if !v.is_finite() {
                    push(Location::Row(RowRef::block(i, RowKind::Eq, r)), "non-finite equality side".into());
                }
            }
            for r in 0..blk.lhs_ineq.len().min(blk.rhs_ineq.len()) {
                let (d, f) = (blk.lhs_ineq[r], blk.rhs_ineq[r]);
                if d.is_nan() || f.is_nan() || d == f64::INFINITY || f == f64::NEG_INFINITY {
                    push(Location::Row(RowRef::block(i, RowKind::Ineq, r)), "invalid side".into());
                } else if d > f {
                    push(Location::Row(RowRef::block(i, RowKind::Ineq, r)), "crossed sides".into());
                }
            }
        }
        for (r, v) in self.linking.rhs_eq.iter().enumerate() {
            if !v.is_finite() {
                push(Location::Row(RowRef::linking(RowKind::Eq, r)), "non-finite equality side".into());
            }
        }
        for r in 0..n_lineq.min(self.linking.lhs_ineq.len()) {
            let (d, f) = (self.linking.lhs_ineq[r], self.linking.rhs_ineq[r]);
            if d.is_nan() || f.is_nan() || d == f64::INFINITY || f == f64::NEG_INFINITY {
                push(Location::Row(RowRef::linking(RowKind::Ineq, r)), "invalid side".into());
            } else if d > f {
                push(Location::Row(RowRef::linking(RowKind::Ineq, r)), "crossed sides".into());
            }
        }
        if !self.objective_offset.is_finite() {
            push(Location::Linking, "non-finite objective offset".into());
        }
        out
    }

    /// Merges contiguous ranges of blocks so that `k` blocks remain.
    ///
    /// Range sizes differ by at most one; earlier ranges take the extra block.
    pub fn group_blocks(&self, k: usize) -> Result<BlockLp, BlockLpError> {
        let n = self.n_blocks();
        if k == 0 || k > n {
            return Err(BlockLpError::GroupCount { k, n });
        }
        let mut blocks = vec![self.blocks[0].clone()];
        for range in even_ranges(n, k) {
            blocks.push(merge_blocks(&self.blocks[range]));
        }
        Ok(BlockLp { blocks, linking: self.linking.clone(), objective_offset: self.objective_offset })
    }
}

/// `k` contiguous ranges over `1..=n` whose sizes differ by at most one.
pub(crate) fn even_ranges(n: usize, k: usize) -> Vec<std::ops::Range<usize>> {
    let base = n / k;
    let extra = n % k;
    let mut start = 1;
    (0..k)
        .map(|w| {
            let len = base + usize::from(w < extra);
            let r = start..start + len;
            start += len;
            r
        })
        .collect()
}

fn merge_blocks(parts: &[Block]) -> Block {
    let n_cols: usize = parts.iter().map(Block::n_cols).sum();
    let mut out = Block {
        a: SparseRowMatrix::zeros(0, parts[0].a.n_cols()),
        b: SparseRowMatrix::zeros(0, n_cols),
        c: SparseRowMatrix::zeros(0, parts[0].c.n_cols()),
        d: SparseRowMatrix::zeros(0, n_cols),
        f: SparseRowMatrix::zeros(parts[0].f.n_rows(), n_cols),
        g: SparseRowMatrix::zeros(parts[0].g.n_rows(), n_cols),
        ..Block::default()
    };
    let mut shift = 0;
    for p in parts {
        out.a = out.a.vstack(&p.a);
        out.c = out.c.vstack(&p.c);
        let shifted = |rows: &[Vec<(usize, f64)>]| -> Vec<Vec<(usize, f64)>> {
            rows.iter().map(|r| r.iter().map(|&(c, v)| (c + shift, v)).collect()).collect()
        };
        out.b.rows.extend(shifted(p.b.rows()));
        out.d.rows.extend(shifted(p.d.rows()));
        for (dst, src) in out.f.rows.iter_mut().zip(shifted(p.f.rows())) {
            dst.extend(src);
        }
        for (dst, src) in out.g.rows.iter_mut().zip(shifted(p.g.rows())) {
            dst.extend(src);
        }
        out.rhs_eq.extend_from_slice(&p.rhs_eq);
        out.lhs_ineq.extend_from_slice(&p.lhs_ineq);
        out.rhs_ineq.extend_from_slice(&p.rhs_ineq);
        out.lower.extend_from_slice(&p.lower);
        out.upper.extend_from_slice(&p.upper);
        out.obj.extend_from_slice(&p.obj);
        shift += p.n_cols();
    }
    out
}
