//! Reduction journal, forward replay, and primal solution recovery.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::blocklp::{BlockLp, ColRef, Location, RowOwner, RowRef};
use crate::kernels::Kernel;
use crate::work::{decompose, reassemble, Col, IndexMapping, Replica, WorkBlock};

/// One recorded change. Values are stored as their state after the change, so replay needs
/// no arithmetic and reproduces the presolved problem bit for bit.
#[derive(Clone, Debug, PartialEq)]
pub enum JournalOp {
    DeleteRow { row: RowRef, entries: Vec<(ColRef, f64)>, lhs: f64, rhs: f64 },
    /// A block removed its own entries of a linking row that is being deleted.
    ClearSlice { block: usize, row: RowRef, entries: Vec<(ColRef, f64)> },
    DeleteEntry { row: RowRef, col: ColRef, value: f64 },
    SetBounds { col: ColRef, lower: f64, upper: f64, prev_lower: f64, prev_upper: f64 },
    SetSides { row: RowRef, lhs: f64, rhs: f64 },
    /// Column fixed and removed; `entries` are its removed coefficients.
    FixVariable { col: ColRef, value: f64, entries: Vec<(RowRef, f64)> },
    /// A fixed linking column removed from one block's rows.
    DropColumn { block: usize, col: ColRef, entries: Vec<(RowRef, f64)> },
    /// Objective offset held by `block` (0 for the replica) after the change.
    Offset { block: usize, value: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct JournalEntry {
    pub round: u32,
    /// Position in the round's schedule: kernel runs are even, the following sync is odd.
    pub step: u32,
    /// Kernel whose run (or whose proposals, for a sync step) caused the change.
    pub kernel: Kernel,
    /// Block whose data changed; 0 for replicated data.
    pub block: u32,
    pub seq: u32,
    pub op: JournalOp,
}

impl JournalEntry {
    pub fn key(&self) -> (u32, u32, u32, u32) {
        (self.round, self.step, self.block, self.seq)
    }
}

/// Collects one worker's journal entries.
#[derive(Clone, Debug)]
pub struct JournalSink {
    pub entries: Vec<JournalEntry>,
    round: u32,
    step: u32,
    kernel: Kernel,
    seqs: BTreeMap<u32, u32>,
}

impl Default for JournalSink {
    fn default() -> Self {
        JournalSink { entries: Vec::new(), round: 0, step: 0, kernel: Kernel::Cleanup, seqs: BTreeMap::new() }
    }
}

impl JournalSink {
    pub fn set_step(&mut self, round: u32, step: u32, kernel: Kernel) {
        self.round = round;
        self.step = step;
        self.kernel = kernel;
        self.seqs.clear();
    }

    pub fn push(&mut self, block: usize, op: JournalOp) {
        let seq = self.seqs.entry(block as u32).or_insert(0);
        self.entries.push(JournalEntry {
            round: self.round,
            step: self.step,
            kernel: self.kernel,
            block: block as u32,
            seq: *seq,
            op,
        });
        *seq += 1;
    }
}

/// Dimensions of the original problem, per block: `(eq rows, ineq rows, columns)`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OriginalDims {
    pub blocks: Vec<(usize, usize, usize)>,
    pub linking_eq: usize,
    pub linking_ineq: usize,
}

impl OriginalDims {
    pub fn of(lp: &BlockLp) -> Self {
        OriginalDims {
            blocks: lp.blocks.iter().map(|b| (b.n_eq(), b.n_ineq(), b.n_cols())).collect(),
            linking_eq: lp.n_linking_eq(),
            linking_ineq: lp.n_linking_ineq(),
        }
    }

    pub fn n_cols(&self) -> usize {
        self.blocks.iter().map(|b| b.2).sum()
    }
}

/// Ordered log of every change made by presolve plus the final index mapping.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ReductionJournal {
    pub entries: Vec<JournalEntry>,
    pub dims: OriginalDims,
    pub mapping: IndexMapping,
}

impl ReductionJournal {
    /// Journal of a presolve that changed nothing.
    pub fn identity(lp: &BlockLp) -> Self {
        ReductionJournal { entries: Vec::new(), dims: OriginalDims::of(lp), mapping: IndexMapping::identity(lp) }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of entries attributed to each kernel.
    pub fn counts_by_kernel(&self) -> BTreeMap<Kernel, usize> {
        let mut out: BTreeMap<Kernel, usize> = Kernel::ALL.iter().map(|&k| (k, 0)).collect();
        for e in &self.entries {
            *out.entry(e.kernel).or_insert(0) += 1;
        }
        out
    }
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum PostsolveError {
    #[error("journal does not match the problem: {0}")]
    Mismatch(String),
    #[error("solution has {got} values, the presolved problem has {expected} columns")]
    Dimension { expected: usize, got: usize },
    #[error("solution violates {location} by {amount:e}")]
    Infeasible { location: Location, amount: f64 },
}

fn block_mut<'a>(blocks: &'a mut [WorkBlock], b: usize) -> Result<&'a mut WorkBlock, PostsolveError> {
    b.checked_sub(1)
        .and_then(|i| blocks.get_mut(i))
        .ok_or_else(|| PostsolveError::Mismatch(format!("no block {b}")))
}

fn apply_op(replica: &mut Replica, blocks: &mut [WorkBlock], op: &JournalOp) -> Result<(), PostsolveError> {
    match op {
        JournalOp::DeleteRow { row, .. } => match row.owner {
            RowOwner::Block(0) => {
                let id = replica.row_id(row);
                replica.rows[id].alive = false;
            }
            RowOwner::Block(b) => {
                let blk = block_mut(blocks, b)?;
                let id = blk.row_id(row);
                blk.rows[id].alive = false;
            }
            RowOwner::Linking => {
                let id = replica.link_id(row);
                replica.link_rows[id].alive = false;
                replica.link_rows[id].slice.clear();
                for blk in blocks.iter_mut() {
                    blk.slices[id].clear();
                }
            }
        },
        JournalOp::ClearSlice { block, row, .. } => {
            let blk = block_mut(blocks, *block)?;
            let id = blk.link_id(row);
            blk.slices[id].clear();
        }
        JournalOp::DeleteEntry { row, col, .. } => {
            let removed = match (row.owner, *col) {
                (RowOwner::Block(0) | RowOwner::Linking, ColRef::Linking(j)) => replica.delete_entry(row, j as u32),
                (RowOwner::Block(b), c) => {
                    let blk = block_mut(blocks, b)?;
                    let id = blk.row_id(row);
                    let c = match c {
                        ColRef::Linking(j) => Col::Link(j as u32),
                        ColRef::Local { index, .. } => Col::Local(index as u32),
                    };
                    blk.remove_entry(id, c)
                }
                (RowOwner::Linking, ColRef::Local { block, index }) => {
                    let blk = block_mut(blocks, block)?;
                    let id = blk.link_id(row);
                    blk.remove_slice_entry(id, index as u32)
                }
            };
            if removed.is_none() {
                return Err(PostsolveError::Mismatch(format!("no entry {col} in {row}")));
            }
        }
        JournalOp::SetBounds { col, lower, upper, .. } => match *col {
            ColRef::Linking(j) => {
                replica.lower[j] = *lower;
                replica.upper[j] = *upper;
            }
            ColRef::Local { block, index } => {
                let blk = block_mut(blocks, block)?;
                blk.lower[index] = *lower;
                blk.upper[index] = *upper;
            }
        },
        JournalOp::SetSides { row, lhs, rhs } => match row.owner {
            RowOwner::Block(0) | RowOwner::Linking => replica.set_sides(row, *lhs, *rhs),
            RowOwner::Block(b) => {
                let blk = block_mut(blocks, b)?;
                let id = blk.row_id(row);
                blk.rows[id].lhs = *lhs;
                blk.rows[id].rhs = *rhs;
            }
        },
        JournalOp::FixVariable { col, value, .. } => match *col {
            ColRef::Linking(j) => {
                replica.drop_column(j as u32);
                replica.lower[j] = *value;
                replica.upper[j] = *value;
            }
            ColRef::Local { block, index } => {
                let blk = block_mut(blocks, block)?;
                blk.drop_local_column(index as u32);
                blk.lower[index] = *value;
                blk.upper[index] = *value;
            }
        },
        JournalOp::DropColumn { block, col, .. } => {
            let ColRef::Linking(j) = *col else {
                return Err(PostsolveError::Mismatch(format!("{col} is not a linking column")));
            };
            block_mut(blocks, *block)?.drop_link_column(j as u32);
        }
        JournalOp::Offset { block, value } => {
            if *block == 0 {
                replica.offset = *value;
            } else {
                block_mut(blocks, *block)?.offset = *value;
            }
        }
    }
    Ok(())
}

/// Applies the journal to the original problem, yielding the presolved problem.
pub fn replay(original: &BlockLp, journal: &ReductionJournal) -> Result<BlockLp, PostsolveError> {
    if OriginalDims::of(original) != journal.dims {
        return Err(PostsolveError::Mismatch("original dimensions differ from the journal".into()));
    }
    let (mut replica, mut blocks) = decompose(original);
    for e in &journal.entries {
        apply_op(&mut replica, &mut blocks, &e.op)?;
    }
    Ok(reassemble(&replica, &blocks).0)
}

/// Lifts a point of the presolved problem to the original columns.
///
/// Removed columns take their fixed values; the rest are placed through the journal's
/// index mapping. Both points are flattened block by block, block 0 first.
pub fn postsolve(journal: &ReductionJournal, x: &[f64]) -> Result<Vec<f64>, PostsolveError> {
    let map = &journal.mapping;
    let expected: usize = map.blocks.iter().map(|b| b.cols.len()).sum();
    if x.len() != expected {
        return Err(PostsolveError::Dimension { expected, got: x.len() });
    }
    let dims = &journal.dims;
    if map.blocks.len() != dims.blocks.len() {
        return Err(PostsolveError::Mismatch("block count differs from the mapping".into()));
    }
    let offsets: Vec<usize> = dims
        .blocks
        .iter()
        .scan(0, |acc, b| {
            let o = *acc;
            *acc += b.2;
            Some(o)
        })
        .collect();
    let mut out = vec![f64::NAN; dims.n_cols()];
    for e in &journal.entries {
        if let JournalOp::FixVariable { col, value, .. } = &e.op {
            let k = match *col {
                ColRef::Linking(j) => j,
                ColRef::Local { block, index } => offsets[block] + index,
            };
            out[k] = *value;
        }
    }
    let mut pos = 0;
    for (b, bm) in map.blocks.iter().enumerate() {
        for &old in &bm.cols {
            out[offsets[b] + old] = x[pos];
            pos += 1;
        }
    }
    if let Some(k) = out.iter().position(|v| v.is_nan()) {
        return Err(PostsolveError::Mismatch(format!("original column {k} has no value")));
    }
    Ok(out)
}

/// Feasibility of a flattened point with respect to every row and bound of `lp`.
#[derive(Clone, Debug, PartialEq)]
pub struct SolutionReport {
    /// Largest violation, each scaled by `1 + ‖row‖∞` (bounds by 1).
    pub max_violation: f64,
    pub worst: Option<Location>,
    pub objective: f64,
}

impl SolutionReport {
    pub fn check(&self, tol: f64) -> Result<(), PostsolveError> {
        match &self.worst {
            Some(location) if self.max_violation > tol => {
                Err(PostsolveError::Infeasible { location: location.clone(), amount: self.max_violation })
            }
            _ => Ok(()),
        }
    }
}

pub fn evaluate(lp: &BlockLp, x: &[f64]) -> Result<SolutionReport, PostsolveError> {
    let n = lp.n_cols_total();
    if x.len() != n {
        return Err(PostsolveError::Dimension { expected: n, got: x.len() });
    }
    let mut report = SolutionReport { max_violation: 0.0, worst: None, objective: lp.objective(x) };
    let mut note = |amount: f64, location: Location| {
        if amount > report.max_violation {
            report.max_violation = amount;
            report.worst = Some(location);
        }
    };
    let n0 = lp.n_linking_cols();
    let link_x = &x[..n0];
    // linking rows accumulate over all blocks
    let n_leq = lp.n_linking_eq();
    let mut link_act = vec![0.0; n_leq + lp.n_linking_ineq()];
    let mut link_norm = vec![0.0f64; link_act.len()];
    for (b, blk) in lp.blocks.iter().enumerate() {
        let off = lp.col_offset(b);
        let xb = &x[off..off + blk.n_cols()];
        for (k, (&v, (&l, &u))) in xb.iter().zip(blk.lower.iter().zip(&blk.upper)).enumerate() {
            let col = if b == 0 { ColRef::Linking(k) } else { ColRef::Local { block: b, index: k } };
            note((l - v).max(v - u).max(0.0), Location::Col(col));
        }
        let row_value = |link: &[(usize, f64)], local: &[(usize, f64)]| {
            let mut s = 0.0;
            let mut norm = 0.0f64;
            for &(j, a) in link {
                s += a * link_x[j];
                norm = norm.max(a.abs());
            }
            if b > 0 {
                for &(k, a) in local {
                    s += a * xb[k];
                    norm = norm.max(a.abs());
                }
            }
            (s, norm)
        };
        for r in 0..blk.n_eq() {
            let (s, norm) = row_value(blk.a.row(r), if b > 0 { blk.b.row(r) } else { &[] });
            let loc = Location::Row(RowRef::block(b, crate::blocklp::RowKind::Eq, r));
            note((s - blk.rhs_eq[r]).abs() / (1.0 + norm), loc);
        }
        for r in 0..blk.n_ineq() {
            let (s, norm) = row_value(blk.c.row(r), if b > 0 { blk.d.row(r) } else { &[] });
            let loc = Location::Row(RowRef::block(b, crate::blocklp::RowKind::Ineq, r));
            note((blk.lhs_ineq[r] - s).max(s - blk.rhs_ineq[r]).max(0.0) / (1.0 + norm), loc);
        }
        for (r, row) in blk.f.rows().iter().chain(blk.g.rows()).enumerate() {
            for &(k, a) in row {
                link_act[r] += a * xb[k];
                link_norm[r] = link_norm[r].max(a.abs());
            }
        }
    }
    for (r, (&s, &norm)) in link_act.iter().zip(&link_norm).enumerate() {
        let (amount, row) = if r < n_leq {
            ((s - lp.linking.rhs_eq[r]).abs(), RowRef::linking(crate::blocklp::RowKind::Eq, r))
        } else {
            let k = r - n_leq;
            let v = (lp.linking.lhs_ineq[k] - s).max(s - lp.linking.rhs_ineq[k]).max(0.0);
            (v, RowRef::linking(crate::blocklp::RowKind::Ineq, k))
        };
        note(amount / (1.0 + norm), Location::Row(row));
    }
    Ok(report)
}
