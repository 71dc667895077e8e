use super::{BoundEdits, KernelCtx, KernelOutput, LocalReduction, Scope};
use crate::blocklp::{RowKind, RowRef};
use crate::error::PresolveError;
use crate::work::Col;

/// Turns rows with a single entry into fixings or bound changes and deletes them.
///
/// Linking rows are handled only when the cached global count is 1 and the entry belongs to
/// this scope; block 0 acts for entries in its own slice.
pub fn singleton_rows(scope: &Scope<'_>, ctx: &KernelCtx<'_>) -> Result<KernelOutput, PresolveError> {
    let mut out = KernelOutput::default();
    let mut edits = BoundEdits::new(scope, ctx.tol);
    for (id, row) in scope.rows().iter().enumerate() {
        if !row.alive || row.entries.len() != 1 {
            continue;
        }
        let (col, a) = row.entries[0];
        // a tiny coefficient is noise; cleanup drops it and checks the sides
        if a.abs() < ctx.tol.tiny {
            continue;
        }
        let origin = scope.row_ref(id);
        apply_singleton(&mut edits, &origin, row.kind, col, a, row.lhs, row.rhs)?;
        out.delete_row(scope, id);
    }
    let replica = scope.replica;
    for r in 0..replica.n_link_rows() {
        if !scope.link_usable(r) || ctx.cached_global[r] != 1 {
            continue;
        }
        let lr = &replica.link_rows[r];
        let entry = match scope.block {
            Some(b) if lr.slice.is_empty() && b.slices[r].len() == 1 => {
                let (k, a) = b.slices[r][0];
                (Col::Local(k), a)
            }
            None if lr.slice.len() == 1 => {
                let (j, a) = lr.slice[0];
                (Col::Link(j), a)
            }
            _ => continue,
        };
        if entry.1.abs() < ctx.tol.tiny {
            continue;
        }
        let origin = replica.link_ref(r);
        let (lhs, rhs) = scope.link_sides(r);
        apply_singleton(&mut edits, &origin, lr.kind, entry.0, entry.1, lhs, rhs)?;
        if scope.block.is_some() {
            out.local.push(LocalReduction::DeleteRow(origin));
        }
        out.global.push(super::GlobalProposal::LinkRowDelete(origin));
    }
    edits.emit(&mut out, 0.0);
    Ok(out)
}

fn apply_singleton(
    edits: &mut BoundEdits<'_>,
    origin: &RowRef,
    kind: RowKind,
    col: Col,
    a: f64,
    lhs: f64,
    rhs: f64,
) -> Result<(), PresolveError> {
    match kind {
        RowKind::Eq => edits.fix(col, rhs / a, origin),
        RowKind::Ineq => {
            let (lo, hi) = if a > 0.0 { (lhs / a, rhs / a) } else { (rhs / a, lhs / a) };
            if lo > f64::NEG_INFINITY {
                edits.tighten_lower(col, lo, origin)?;
            }
            if hi < f64::INFINITY {
                edits.tighten_upper(col, hi, origin)?;
            }
            Ok(())
        }
    }
}
