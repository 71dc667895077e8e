//! Synchronization of replicated data between workers.
//!
//! Workers buffer nonzero-count changes of linking rows and propose changes to linking
//! columns and rows. At a sync point every worker contributes one [`SyncBatch`];
//! [`exchange`] merges them independently of order and [`apply_sync`] applies the merged
//! batch identically on every worker.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::blocklp::{ColRef, Location, RowOwner, RowRef};
use crate::error::PresolveError;
use crate::kernels::activity::Activity;
use crate::kernels::{infeasible, GlobalProposal};
use crate::postsolve::{JournalOp, JournalSink};
use crate::work::{Col, Replica, WorkBlock};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Entries below this magnitude are deleted.
    pub tiny: f64,
    /// Feasibility tolerance for redundancy and infeasibility tests.
    pub feas: f64,
    /// Relative tolerance for row proportionality.
    pub parallel: f64,
    /// Minimum absolute improvement for a tightened bound to be kept.
    pub improve: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { tiny: 1e-10, feas: 1e-8, parallel: 1e-10, improve: 1e-7 }
    }
}

impl Tolerances {
    /// Feasibility tolerance around the value `v`, relative for large magnitudes.
    pub fn feas_at(&self, v: f64) -> f64 {
        if v.is_finite() {
            self.feas * v.abs().max(1.0)
        } else {
            0.0
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [("tiny", self.tiny), ("feas", self.feas), ("parallel", self.parallel), ("improve", self.improve)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(format!("tolerance {name} must be a finite nonnegative number, got {v}"));
            }
        }
        Ok(())
    }
}

/// Nonzero bookkeeping for the linking rows, one copy per worker.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LinkCounters {
    /// Entries in the slices of this worker's blocks (exact).
    pub local_count: Vec<i64>,
    /// Entries in block 0's slice (exact, replicated).
    pub block0_count: Vec<i64>,
    /// Global count as of the last sync; never below the true count.
    pub cached_global: Vec<i64>,
    /// Changes of `local_count` not broadcast yet.
    pub pending_delta: Vec<i64>,
}

impl LinkCounters {
    /// Counters before the first sync: the local counts are pending, so the first exchange
    /// establishes the global counts.
    pub fn new<'a>(replica: &Replica, blocks: impl IntoIterator<Item = &'a WorkBlock>) -> Self {
        let n = replica.n_link_rows();
        let block0_count: Vec<i64> = replica.link_rows.iter().map(|r| r.slice.len() as i64).collect();
        let mut local_count = vec![0i64; n];
        for b in blocks {
            for (r, s) in b.slices.iter().enumerate() {
                local_count[r] += s.len() as i64;
            }
        }
        LinkCounters { pending_delta: local_count.clone(), cached_global: block0_count.clone(), local_count, block0_count }
    }

    pub fn buffer_delta(&mut self, row: usize, delta: i64) -> Result<(), PresolveError> {
        if self.local_count[row] + delta < 0 {
            return Err(PresolveError::Internal(format!(
                "nonzero count of linking row {row} would drop below zero ({} {delta:+})",
                self.local_count[row]
            )));
        }
        self.local_count[row] += delta;
        self.pending_delta[row] += delta;
        Ok(())
    }
}

/// Payload one worker contributes to a sync, and the merged result of [`exchange`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SyncBatch {
    pub nnz_deltas: BTreeMap<RowRef, i64>,
    /// Linking column -> proposed `(lower, upper)`.
    pub bound_changes: BTreeMap<usize, (f64, f64)>,
    /// Linking column -> `(smallest, largest)` proposed value.
    pub fixings: BTreeMap<usize, (f64, f64)>,
    pub row_deletions: BTreeSet<RowRef>,
    /// Removals of block-0 entries: `(row, linking column)`.
    pub entry_deletions: BTreeSet<(RowRef, usize)>,
    /// Block-0 row -> replacement sides.
    pub side_tightenings: BTreeMap<RowRef, (f64, f64)>,
    /// `(linking row, block)` -> accumulated `a * v` of that block's fixings.
    pub side_shifts: BTreeMap<(RowRef, usize), f64>,
    /// `(linking row, block)` -> that block's activity share.
    pub activity_partials: BTreeMap<(RowRef, usize), Activity>,
}

impl SyncBatch {
    pub fn is_empty(&self) -> bool {
        *self == SyncBatch::default()
    }

    pub fn add_proposal(&mut self, p: &GlobalProposal) {
        match *p {
            GlobalProposal::LinkRowDelete(r) => {
                self.row_deletions.insert(r);
            }
            GlobalProposal::LinkBoundChange { col, lower, upper } => {
                let e = self.bound_changes.entry(col).or_insert((f64::NEG_INFINITY, f64::INFINITY));
                e.0 = e.0.max(lower);
                e.1 = e.1.min(upper);
            }
            GlobalProposal::LinkVarFix { col, value } => {
                let e = self.fixings.entry(col).or_insert((value, value));
                e.0 = e.0.min(value);
                e.1 = e.1.max(value);
            }
            GlobalProposal::NnzDelta { row, delta } => *self.nnz_deltas.entry(row).or_insert(0) += delta,
            GlobalProposal::EntryDelete { row, col } => {
                self.entry_deletions.insert((row, col));
            }
            GlobalProposal::SideTighten { row, lhs, rhs } => {
                let e = self.side_tightenings.entry(row).or_insert((lhs, rhs));
                e.0 = e.0.max(lhs);
                e.1 = e.1.min(rhs);
            }
        }
    }

    /// Size of the batch as it would travel over a wire.
    pub fn payload_bytes(&self) -> usize {
        const ROW: usize = 9;
        self.nnz_deltas.len() * (ROW + 8)
            + self.bound_changes.len() * (8 + 16)
            + self.fixings.len() * (8 + 16)
            + self.row_deletions.len() * ROW
            + self.entry_deletions.len() * (ROW + 8)
            + self.side_tightenings.len() * (ROW + 16)
            + self.side_shifts.len() * (ROW + 8 + 8)
            + self.activity_partials.len() * (ROW + 8 + 24)
    }
}

/// Merges the batches of all workers. The result does not depend on their order.
pub fn exchange(batches: &[SyncBatch], tol: &Tolerances) -> Result<SyncBatch, PresolveError> {
    let mut m = SyncBatch::default();
    for b in batches {
        for (r, d) in &b.nnz_deltas {
            *m.nnz_deltas.entry(*r).or_insert(0) += d;
        }
        for (&j, &(l, u)) in &b.bound_changes {
            m.add_proposal(&GlobalProposal::LinkBoundChange { col: j, lower: l, upper: u });
        }
        for (&j, &(lo, hi)) in &b.fixings {
            let e = m.fixings.entry(j).or_insert((lo, hi));
            e.0 = e.0.min(lo);
            e.1 = e.1.max(hi);
        }
        m.row_deletions.extend(b.row_deletions.iter().copied());
        m.entry_deletions.extend(b.entry_deletions.iter().copied());
        for (&r, &(l, u)) in &b.side_tightenings {
            m.add_proposal(&GlobalProposal::SideTighten { row: r, lhs: l, rhs: u });
        }
        for (k, v) in &b.side_shifts {
            m.side_shifts.insert(*k, *v);
        }
        for (k, v) in &b.activity_partials {
            m.activity_partials.insert(*k, *v);
        }
    }
    m.nnz_deltas.retain(|_, d| *d != 0);
    for (&j, &(lo, hi)) in &m.fixings {
        if hi - lo > tol.feas_at(lo) {
            return Err(infeasible(
                Location::Col(ColRef::Linking(j)),
                format!("conflicting fixings {lo} and {hi}"),
            ));
        }
    }
    for (&j, &(l, u)) in &m.bound_changes {
        if l > u + tol.feas_at(u) {
            return Err(infeasible(
                Location::Col(ColRef::Linking(j)),
                format!("proposed bounds cross: [{l}, {u}]"),
            ));
        }
    }
    Ok(m)
}

fn shift(v: f64, delta: f64) -> f64 {
    if v.is_finite() {
        v - delta
    } else {
        v
    }
}

/// Applies a merged batch to one worker's replica, owned blocks and counters.
///
/// Replica changes are journaled only when `designated` is set, so they appear once in the
/// combined journal; changes to owned blocks are always journaled.
pub fn apply_sync(
    replica: &mut Replica,
    blocks: &mut [WorkBlock],
    counters: &mut LinkCounters,
    merged: &SyncBatch,
    journal: &mut JournalSink,
    designated: bool,
    tol: &Tolerances,
) -> Result<(), PresolveError> {
    let mut replica_log = |op: JournalOp| {
        if designated {
            journal.push(0, op);
        }
    };
    let mut block_ops: Vec<(usize, JournalOp)> = Vec::new();

    // linking-column fixings; the smallest proposed value is used
    for (&j, &(value, _)) in &merged.fixings {
        let (l, u) = replica.bounds(j as u32);
        if !replica.col_alive[j] {
            if (value - l).abs() > tol.feas_at(l) {
                return Err(infeasible(
                    Location::Col(ColRef::Linking(j)),
                    format!("fixing {value} conflicts with earlier fixing {l}"),
                ));
            }
            continue;
        }
        let (bl, bu) = merged.bound_changes.get(&j).copied().unwrap_or((l, u));
        let (lo, hi) = (l.max(bl), u.min(bu));
        if value < lo - tol.feas_at(lo) || value > hi + tol.feas_at(hi) {
            return Err(infeasible(
                Location::Col(ColRef::Linking(j)),
                format!("fixing {value} violates bounds [{lo}, {hi}]"),
            ));
        }
        let v = value.min(hi).max(lo);
        let removed = replica.drop_column(j as u32);
        replica.lower[j] = v;
        replica.upper[j] = v;
        let mut sides = Vec::new();
        for &(row, a) in &removed {
            let alive = match row.owner {
                RowOwner::Linking => {
                    let id = replica.link_id(&row);
                    counters.block0_count[id] -= 1;
                    counters.cached_global[id] -= 1;
                    replica.link_rows[id].alive
                }
                RowOwner::Block(_) => replica.rows[replica.row_id(&row)].alive,
            };
            if alive {
                let (lhs, rhs) = replica.sides(&row);
                let (lhs, rhs) = (shift(lhs, a * v), shift(rhs, a * v));
                replica.set_sides(&row, lhs, rhs);
                sides.push(JournalOp::SetSides { row, lhs, rhs });
            }
        }
        replica_log(JournalOp::FixVariable { col: ColRef::Linking(j), value: v, entries: removed });
        for op in sides {
            replica_log(op);
        }
        let c = replica.obj[j];
        if c != 0.0 {
            replica.offset += c * v;
            replica_log(JournalOp::Offset { block: 0, value: replica.offset });
        }
        for blk in blocks.iter_mut() {
            let removed = blk.drop_link_column(j as u32);
            if removed.is_empty() {
                continue;
            }
            let entries = removed.iter().map(|&(id, a)| (blk.row_ref(id), a)).collect();
            block_ops.push((blk.index, JournalOp::DropColumn { block: blk.index, col: ColRef::Linking(j), entries }));
            for &(id, a) in &removed {
                let row = blk.row_ref(id);
                let r = &mut blk.rows[id];
                if r.alive {
                    r.lhs = shift(r.lhs, a * v);
                    r.rhs = shift(r.rhs, a * v);
                    block_ops.push((blk.index, JournalOp::SetSides { row, lhs: r.lhs, rhs: r.rhs }));
                }
            }
        }
    }

    for (&j, &(bl, bu)) in &merged.bound_changes {
        if !replica.col_alive[j] {
            continue;
        }
        let (l, u) = replica.bounds(j as u32);
        let (mut lo, hi) = (l.max(bl), u.min(bu));
        if lo > hi + tol.feas_at(hi) {
            return Err(infeasible(
                Location::Col(ColRef::Linking(j)),
                format!("bounds cross: [{lo}, {hi}]"),
            ));
        }
        lo = lo.min(hi);
        if (lo, hi) != (l, u) {
            replica.lower[j] = lo;
            replica.upper[j] = hi;
            replica_log(JournalOp::SetBounds { col: ColRef::Linking(j), lower: lo, upper: hi, prev_lower: l, prev_upper: u });
        }
    }

    for &(row, j) in &merged.entry_deletions {
        let alive = match row.owner {
            RowOwner::Linking => replica.link_rows[replica.link_id(&row)].alive,
            RowOwner::Block(_) => replica.rows[replica.row_id(&row)].alive,
        };
        if !alive {
            continue;
        }
        if let Some(value) = replica.delete_entry(&row, j as u32) {
            if row.is_linking() {
                let id = replica.link_id(&row);
                counters.block0_count[id] -= 1;
                counters.cached_global[id] -= 1;
            }
            replica_log(JournalOp::DeleteEntry { row, col: ColRef::Linking(j), value });
        }
    }

    for (&row, &(lhs, rhs)) in &merged.side_tightenings {
        let id = replica.row_id(&row);
        if !replica.rows[id].alive {
            continue;
        }
        let (l, u) = replica.sides(&row);
        let (lhs, rhs) = (l.max(lhs), u.min(rhs));
        if lhs > rhs + tol.feas_at(rhs) {
            return Err(infeasible(Location::Row(row), format!("sides cross: [{lhs}, {rhs}]")));
        }
        let lhs = lhs.min(rhs);
        if (lhs, rhs) != (l, u) {
            replica.set_sides(&row, lhs, rhs);
            replica_log(JournalOp::SetSides { row, lhs, rhs });
        }
    }

    for &row in &merged.row_deletions {
        match row.owner {
            RowOwner::Block(_) => {
                let id = replica.row_id(&row);
                let r = &mut replica.rows[id];
                if !r.alive {
                    continue;
                }
                r.alive = false;
                let entries = r.entries.iter().map(|&(c, a)| (col_ref0(c), a)).collect();
                let (lhs, rhs) = (r.lhs, r.rhs);
                replica_log(JournalOp::DeleteRow { row, entries, lhs, rhs });
            }
            RowOwner::Linking => {
                let id = replica.link_id(&row);
                let lr = &mut replica.link_rows[id];
                if !lr.alive {
                    continue;
                }
                lr.alive = false;
                let entries = lr.slice.drain(..).map(|(j, a)| (ColRef::Linking(j as usize), a)).collect();
                let (lhs, rhs) = (lr.lhs, lr.rhs);
                replica_log(JournalOp::DeleteRow { row, entries, lhs, rhs });
                for blk in blocks.iter_mut() {
                    blk.slices[id].clear();
                }
            }
        }
    }

    // fixings inside blocks moved a * v out of the linking rows; summed in block order
    let mut shifts: BTreeMap<RowRef, f64> = BTreeMap::new();
    for (&(row, _), &d) in &merged.side_shifts {
        *shifts.entry(row).or_insert(0.0) += d;
    }
    for (row, d) in shifts {
        let id = replica.link_id(&row);
        if !replica.link_rows[id].alive || d == 0.0 {
            continue;
        }
        let (l, u) = replica.sides(&row);
        let (lhs, rhs) = (shift(l, d), shift(u, d));
        replica.set_sides(&row, lhs, rhs);
        replica_log(JournalOp::SetSides { row, lhs, rhs });
    }

    for (r, &d) in &merged.nnz_deltas {
        counters.cached_global[replica.link_id(r)] += d;
    }
    for id in 0..replica.n_link_rows() {
        counters.pending_delta[id] = 0;
        if !replica.link_rows[id].alive {
            counters.local_count[id] = 0;
            counters.block0_count[id] = 0;
            counters.cached_global[id] = 0;
        }
    }

    for (&(row, block), part) in &merged.activity_partials {
        let id = replica.link_id(&row);
        replica.partials[id].insert(block, *part);
    }
    replica.refresh_block0_partial();
    for id in 0..replica.n_link_rows() {
        if !replica.link_rows[id].alive {
            replica.partials[id].clear();
        }
        let mut act = replica.block0_partial[id];
        for part in replica.partials[id].values() {
            act.merge(part);
        }
        replica.activity[id] = act;
    }

    for blk in blocks.iter_mut() {
        blk.side_shift.iter_mut().for_each(|s| *s = 0.0);
        blk.link_deleting.iter_mut().for_each(|d| *d = false);
    }
    for (b, op) in block_ops {
        journal.push(b, op);
    }
    Ok(())
}

fn col_ref0(c: Col) -> ColRef {
    match c {
        Col::Link(j) => ColRef::Linking(j as usize),
        Col::Local(_) => unreachable!("block 0 rows only hold linking columns"),
    }
}

/// The batch a worker sends: its buffered proposals plus pending counter deltas, side
/// shifts and the activity partials of its blocks that changed since the last sync.
/// Records the current partials in each block.
pub fn build_batch(
    replica: &Replica,
    blocks: &mut [WorkBlock],
    counters: &LinkCounters,
    proposals: &[GlobalProposal],
) -> SyncBatch {
    let mut batch = SyncBatch::default();
    for p in proposals {
        batch.add_proposal(p);
    }
    for (id, &d) in counters.pending_delta.iter().enumerate() {
        if d != 0 {
            batch.nnz_deltas.insert(replica.link_ref(id), d);
        }
    }
    for blk in blocks.iter_mut() {
        let partials = blk.link_partials();
        for (id, part) in partials.iter().enumerate() {
            let row = replica.link_ref(id);
            if blk.side_shift[id] != 0.0 {
                batch.side_shifts.insert((row, blk.index), blk.side_shift[id]);
            }
            if *part != blk.synced_partial[id] {
                batch.activity_partials.insert((row, blk.index), *part);
            }
        }
        blk.synced_partial = partials;
    }
    batch
}
