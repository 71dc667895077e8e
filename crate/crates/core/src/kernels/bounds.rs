use super::activity::Activity;
use super::{infeasible, BoundEdits, KernelCtx, KernelOutput, Scope};
use crate::blocklp::{Location, RowRef};
use crate::error::PresolveError;
use crate::work::Col;

/// Tightens column bounds implied by row sides and the activity of the other terms.
///
/// Own rows use activities computed from current bounds; linking rows combine this scope's
/// current slice with the other blocks' share as of the last sync.
pub fn bound_tightening(scope: &Scope<'_>, ctx: &KernelCtx<'_>) -> Result<KernelOutput, PresolveError> {
    let mut out = KernelOutput::default();
    let mut edits = BoundEdits::new(scope, ctx.tol);
    for (id, row) in scope.rows().iter().enumerate() {
        if !row.alive || row.entries.is_empty() {
            continue;
        }
        let act = scope.row_activity(row);
        let origin = scope.row_ref(id);
        tighten_row(scope, &mut edits, &origin, &act, row.entries.iter().copied(), row.lhs, row.rhs, ctx)?;
    }
    let replica = scope.replica;
    for r in 0..replica.n_link_rows() {
        if !scope.link_usable(r) {
            continue;
        }
        let origin = replica.link_ref(r);
        let (lhs, rhs) = scope.link_sides(r);
        match scope.block {
            Some(b) => {
                if b.slices[r].is_empty() {
                    continue;
                }
                let mut act = replica.activity[r].without(&b.synced_partial[r]);
                let terms: Vec<(Col, f64)> = b.slices[r].iter().map(|&(k, a)| (Col::Local(k), a)).collect();
                for &(k, a) in &b.slices[r] {
                    act.add_term(a, b.lower[k as usize], b.upper[k as usize]);
                }
                tighten_row(scope, &mut edits, &origin, &act, terms.into_iter(), lhs, rhs, ctx)?;
            }
            None => {
                let lr = &replica.link_rows[r];
                if lr.slice.is_empty() {
                    continue;
                }
                let act = replica.activity[r];
                let terms = lr.slice.iter().map(|&(j, a)| (Col::Link(j), a));
                tighten_row(scope, &mut edits, &origin, &act, terms, lhs, rhs, ctx)?;
            }
        }
    }
    edits.emit(&mut out, ctx.tol.improve);
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn tighten_row(
    scope: &Scope<'_>,
    edits: &mut BoundEdits<'_>,
    origin: &RowRef,
    act: &Activity,
    terms: impl Iterator<Item = (Col, f64)>,
    lhs: f64,
    rhs: f64,
    ctx: &KernelCtx<'_>,
) -> Result<(), PresolveError> {
    let tol = ctx.tol;
    if act.min_act() > rhs + tol.feas_at(rhs) || act.max_act() < lhs - tol.feas_at(lhs) {
        return Err(infeasible(
            Location::Row(*origin),
            format!("activity [{}, {}] misses sides [{lhs}, {rhs}]", act.min_act(), act.max_act()),
        ));
    }
    for (col, a) in terms {
        if a.abs() < tol.tiny {
            continue;
        }
        let (l, u) = scope.bounds(col);
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        if rhs < f64::INFINITY {
            if let Some(rest) = act.residual_min(a, l, u) {
                let v = (rhs - rest) / a;
                if a > 0.0 {
                    hi = v;
                } else {
                    lo = v;
                }
            }
        }
        if lhs > f64::NEG_INFINITY {
            if let Some(rest) = act.residual_max(a, l, u) {
                let v = (lhs - rest) / a;
                if a > 0.0 {
                    lo = lo.max(v);
                } else {
                    hi = hi.min(v);
                }
            }
        }
        if lo.is_finite() {
            edits.tighten_lower(col, lo, origin)?;
        }
        if hi.is_finite() {
            edits.tighten_upper(col, hi, origin)?;
        }
    }
    Ok(())
}
