//! Presolve reductions.
//!
//! Every kernel reads one [`Scope`] (a regular block, or the replicated linking block 0) and
//! returns local reductions plus proposals for replicated data. Kernels never communicate;
//! proposals travel through [`crate::sync`].

pub mod activity;
mod apply;
mod bounds;
mod cleanup;
mod parallel;
mod singleton;

use std::collections::BTreeMap;
use std::fmt;

use crate::blocklp::{ColRef, Location, RowRef};
use crate::error::PresolveError;
use crate::sync::Tolerances;
use crate::work::{Col, Replica, Row, WorkBlock};

pub use apply::apply_reductions;
pub use bounds::bound_tightening;
pub use cleanup::model_cleanup;
pub use parallel::parallel_rows;
pub use singleton::singleton_rows;

/// The four presolve methods, in schedule order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Kernel {
    Cleanup,
    Singleton,
    BoundTightening,
    Parallel,
}

impl Kernel {
    pub const ALL: [Kernel; 4] = [Kernel::Cleanup, Kernel::Singleton, Kernel::BoundTightening, Kernel::Parallel];

    pub fn name(self) -> &'static str {
        match self {
            Kernel::Cleanup => "cleanup",
            Kernel::Singleton => "singleton",
            Kernel::BoundTightening => "bounds",
            Kernel::Parallel => "parallel",
        }
    }

    pub fn from_name(s: &str) -> Option<Kernel> {
        Kernel::ALL.into_iter().find(|k| k.name() == s)
    }

    pub fn run(self, scope: &Scope<'_>, ctx: &KernelCtx<'_>) -> Result<KernelOutput, PresolveError> {
        match self {
            Kernel::Cleanup => model_cleanup(scope, ctx),
            Kernel::Singleton => singleton_rows(scope, ctx),
            Kernel::BoundTightening => bound_tightening(scope, ctx),
            Kernel::Parallel => parallel_rows(scope, ctx),
        }
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A change confined to data one worker owns.
#[derive(Clone, Debug, PartialEq)]
pub enum LocalReduction {
    DeleteRow(RowRef),
    DeleteEntry(RowRef, ColRef),
    TightenLower(ColRef, f64),
    TightenUpper(ColRef, f64),
    FixVariable(ColRef, f64),
    /// Adds `delta` to both (finite) sides.
    ShiftSide(RowRef, f64),
    SetSides(RowRef, f64, f64),
    ObjOffset(f64),
}

/// A change to replicated data (linking columns, linking rows, block-0 rows).
#[derive(Clone, Debug, PartialEq)]
pub enum GlobalProposal {
    /// Deletion of a linking row or a block-0 row.
    LinkRowDelete(RowRef),
    LinkBoundChange { col: usize, lower: f64, upper: f64 },
    LinkVarFix { col: usize, value: f64 },
    NnzDelta { row: RowRef, delta: i64 },
    /// Removal of a tiny entry of a block-0 row or of `F_0` / `G_0`.
    EntryDelete { row: RowRef, col: usize },
    /// Replacement sides for a block-0 row, merged tightest-first.
    SideTighten { row: RowRef, lhs: f64, rhs: f64 },
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct KernelOutput {
    pub local: Vec<LocalReduction>,
    pub global: Vec<GlobalProposal>,
}

impl KernelOutput {
    pub fn is_empty(&self) -> bool {
        self.local.is_empty() && self.global.is_empty()
    }

    fn delete_row(&mut self, scope: &Scope<'_>, id: usize) {
        let r = scope.row_ref(id);
        match scope.block {
            Some(_) => self.local.push(LocalReduction::DeleteRow(r)),
            None => self.global.push(GlobalProposal::LinkRowDelete(r)),
        }
    }

    fn delete_entry(&mut self, scope: &Scope<'_>, id: usize, col: Col) {
        let r = scope.row_ref(id);
        match (scope.block, col) {
            (Some(_), _) => self.local.push(LocalReduction::DeleteEntry(r, scope.col_ref(col))),
            (None, Col::Link(j)) => self.global.push(GlobalProposal::EntryDelete { row: r, col: j as usize }),
            (None, Col::Local(_)) => unreachable!("block 0 rows only hold linking columns"),
        }
    }

    fn set_sides(&mut self, scope: &Scope<'_>, id: usize, lhs: f64, rhs: f64) {
        let r = scope.row_ref(id);
        match scope.block {
            Some(_) => self.local.push(LocalReduction::SetSides(r, lhs, rhs)),
            None => self.global.push(GlobalProposal::SideTighten { row: r, lhs, rhs }),
        }
    }

    fn fix(&mut self, scope: &Scope<'_>, col: Col, value: f64) {
        match col {
            Col::Local(_) => self.local.push(LocalReduction::FixVariable(scope.col_ref(col), value)),
            Col::Link(j) => self.global.push(GlobalProposal::LinkVarFix { col: j as usize, value }),
        }
    }

    fn tighten(&mut self, scope: &Scope<'_>, col: Col, lower: Option<f64>, upper: Option<f64>) {
        match col {
            Col::Local(_) => {
                let c = scope.col_ref(col);
                if let Some(l) = lower {
                    self.local.push(LocalReduction::TightenLower(c, l));
                }
                if let Some(u) = upper {
                    self.local.push(LocalReduction::TightenUpper(c, u));
                }
            }
            Col::Link(j) => self.global.push(GlobalProposal::LinkBoundChange {
                col: j as usize,
                lower: lower.unwrap_or(f64::NEG_INFINITY),
                upper: upper.unwrap_or(f64::INFINITY),
            }),
        }
    }
}

/// Read-only inputs shared by all kernels of one worker.
#[derive(Clone, Copy, Debug)]
pub struct KernelCtx<'a> {
    pub tol: &'a Tolerances,
    /// Global nonzero count per linking row as of the last sync (an upper bound between syncs).
    pub cached_global: &'a [i64],
    pub hash_seed: u64,
}

/// What a kernel works on: one regular block, or block 0 when `block` is `None`.
#[derive(Clone, Copy, Debug)]
pub struct Scope<'a> {
    pub replica: &'a Replica,
    pub block: Option<&'a WorkBlock>,
}

impl<'a> Scope<'a> {
    pub fn of_block(replica: &'a Replica, block: &'a WorkBlock) -> Self {
        Scope { replica, block: Some(block) }
    }

    pub fn of_linking(replica: &'a Replica) -> Self {
        Scope { replica, block: None }
    }

    pub fn rows(&self) -> &'a [Row] {
        match self.block {
            Some(b) => &b.rows,
            None => &self.replica.rows,
        }
    }

    pub fn bounds(&self, col: Col) -> (f64, f64) {
        match col {
            Col::Link(j) => self.replica.bounds(j),
            Col::Local(k) => {
                let b = self.block.expect("local column outside a block scope");
                (b.lower[k as usize], b.upper[k as usize])
            }
        }
    }

    pub fn row_ref(&self, id: usize) -> RowRef {
        match self.block {
            Some(b) => b.row_ref(id),
            None => self.replica.row_ref(id),
        }
    }

    pub fn col_ref(&self, col: Col) -> ColRef {
        match (self.block, col) {
            (Some(b), c) => b.col_ref(c),
            (None, Col::Link(j)) => ColRef::Linking(j as usize),
            (None, Col::Local(_)) => unreachable!("block 0 rows only hold linking columns"),
        }
    }

    fn row_activity(&self, row: &Row) -> activity::Activity {
        activity::Activity::of_terms(row.entries.iter().map(|&(c, a)| {
            let (l, u) = self.bounds(c);
            (a, l, u)
        }))
    }

    /// Sides of a linking row as this scope must see them: the replicated sides minus any
    /// fixing contributions the block has not broadcast yet.
    fn link_sides(&self, r: usize) -> (f64, f64) {
        let lr = &self.replica.link_rows[r];
        match self.block {
            Some(b) => (lr.lhs - b.side_shift[r], lr.rhs - b.side_shift[r]),
            None => (lr.lhs, lr.rhs),
        }
    }

    /// Whether linking row `r` can be used by this scope.
    fn link_usable(&self, r: usize) -> bool {
        self.replica.link_rows[r].alive && self.block.is_none_or(|b| !b.link_deleting[r])
    }
}

pub(crate) fn infeasible(location: Location, reason: impl Into<String>) -> PresolveError {
    PresolveError::Infeasible { location, reason: reason.into() }
}

/// Pending bound edits of one kernel pass, kept consistent across rows.
struct BoundEdits<'s> {
    scope: &'s Scope<'s>,
    tol: &'s Tolerances,
    edits: BTreeMap<Col, Edit>,
}

#[derive(Clone, Copy, Debug)]
struct Edit {
    lower: f64,
    upper: f64,
    fixed: Option<f64>,
}

impl<'s> BoundEdits<'s> {
    fn new(scope: &'s Scope<'s>, tol: &'s Tolerances) -> Self {
        BoundEdits { scope, tol, edits: BTreeMap::new() }
    }

    fn current(&self, col: Col) -> (f64, f64) {
        match self.edits.get(&col) {
            Some(e) => (e.lower, e.upper),
            None => self.scope.bounds(col),
        }
    }

    fn entry(&mut self, col: Col) -> &mut Edit {
        let (lower, upper) = self.scope.bounds(col);
        self.edits.entry(col).or_insert(Edit { lower, upper, fixed: None })
    }

    fn fix(&mut self, col: Col, value: f64, origin: &RowRef) -> Result<(), PresolveError> {
        let tol = self.tol;
        let (l, u) = self.current(col);
        if value < l - tol.feas_at(l) || value > u + tol.feas_at(u) {
            return Err(infeasible(
                Location::Row(*origin),
                format!("fixing {} = {value} violates bounds [{l}, {u}]", self.scope.col_ref(col)),
            ));
        }
        let e = self.entry(col);
        if let Some(prev) = e.fixed {
            if (prev - value).abs() > tol.feas_at(prev) {
                return Err(infeasible(
                    Location::Row(*origin),
                    format!("conflicting fixings {prev} and {value}"),
                ));
            }
            return Ok(());
        }
        let v = value.clamp(l, u);
        *e = Edit { lower: v, upper: v, fixed: Some(v) };
        Ok(())
    }

    fn tighten_lower(&mut self, col: Col, value: f64, origin: &RowRef) -> Result<(), PresolveError> {
        let (l, u) = self.current(col);
        if value <= l {
            return Ok(());
        }
        if value > u + self.tol.feas_at(u) {
            return Err(infeasible(
                Location::Row(*origin),
                format!("lower bound {value} crosses upper bound {u} of {}", self.scope.col_ref(col)),
            ));
        }
        self.entry(col).lower = value.min(u);
        Ok(())
    }

    fn tighten_upper(&mut self, col: Col, value: f64, origin: &RowRef) -> Result<(), PresolveError> {
        let (l, u) = self.current(col);
        if value >= u {
            return Ok(());
        }
        if value < l - self.tol.feas_at(l) {
            return Err(infeasible(
                Location::Row(*origin),
                format!("upper bound {value} crosses lower bound {l} of {}", self.scope.col_ref(col)),
            ));
        }
        self.entry(col).upper = value.max(l);
        Ok(())
    }

    /// Emits every edit that improves on the scope's bounds by more than `min_gain`.
    fn emit(self, out: &mut KernelOutput, min_gain: f64) {
        for (col, e) in self.edits {
            let (l, u) = self.scope.bounds(col);
            if let Some(v) = e.fixed {
                out.fix(self.scope, col, v);
                continue;
            }
            let lower = (e.lower > l && (l == f64::NEG_INFINITY || e.lower - l > min_gain)).then_some(e.lower);
            let upper = (e.upper < u && (u == f64::INFINITY || u - e.upper > min_gain)).then_some(e.upper);
            if lower.is_some() || upper.is_some() {
                out.tighten(self.scope, col, lower, upper);
            }
        }
    }
}
