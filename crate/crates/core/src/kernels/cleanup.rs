use super::{infeasible, GlobalProposal, KernelCtx, KernelOutput, LocalReduction, Scope};
use crate::blocklp::{Location, RowKind};
use crate::error::PresolveError;
use crate::work::Col;

/// Deletes tiny entries and redundant rows, drops redundant sides of inequalities, and
/// reports rows whose activity cannot reach their sides.
///
/// Linking rows are judged redundant only from the synchronized global activity, so only
/// block 0 proposes their deletion.
pub fn model_cleanup(scope: &Scope<'_>, ctx: &KernelCtx<'_>) -> Result<KernelOutput, PresolveError> {
    let tol = ctx.tol;
    let mut out = KernelOutput::default();
    for (id, row) in scope.rows().iter().enumerate() {
        if !row.alive {
            continue;
        }
        let tiny: Vec<Col> = row.entries.iter().filter(|e| e.1.abs() < tol.tiny).map(|e| e.0).collect();
        let act = scope.row_activity(row);
        let (min, max) = (act.min_act(), act.max_act());
        if min > row.rhs + tol.feas_at(row.rhs) || max < row.lhs - tol.feas_at(row.lhs) {
            return Err(infeasible(
                Location::Row(scope.row_ref(id)),
                format!("activity [{min}, {max}] misses sides [{}, {}]", row.lhs, row.rhs),
            ));
        }
        let lhs_redundant = row.lhs == f64::NEG_INFINITY || min >= row.lhs - tol.feas_at(row.lhs);
        let rhs_redundant = row.rhs == f64::INFINITY || max <= row.rhs + tol.feas_at(row.rhs);
        if lhs_redundant && rhs_redundant {
            out.delete_row(scope, id);
            continue;
        }
        for &col in &tiny {
            out.delete_entry(scope, id, col);
        }
        if row.kind == RowKind::Ineq && (lhs_redundant != rhs_redundant) && tiny.is_empty() {
            let lhs = if lhs_redundant { f64::NEG_INFINITY } else { row.lhs };
            let rhs = if rhs_redundant { f64::INFINITY } else { row.rhs };
            if lhs != row.lhs || rhs != row.rhs {
                out.set_sides(scope, id, lhs, rhs);
            }
        }
    }

    let replica = scope.replica;
    match scope.block {
        Some(b) => {
            for r in 0..replica.n_link_rows() {
                if !scope.link_usable(r) {
                    continue;
                }
                let link = replica.link_ref(r);
                for &(k, a) in &b.slices[r] {
                    if a.abs() < tol.tiny {
                        out.local.push(LocalReduction::DeleteEntry(link, b.col_ref(Col::Local(k))));
                    }
                }
            }
        }
        None => {
            for r in 0..replica.n_link_rows() {
                let lr = &replica.link_rows[r];
                if !lr.alive {
                    continue;
                }
                let link = replica.link_ref(r);
                let act = replica.activity[r];
                let (min, max) = (act.min_act(), act.max_act());
                if min > lr.rhs + tol.feas_at(lr.rhs) || max < lr.lhs - tol.feas_at(lr.lhs) {
                    return Err(infeasible(
                        Location::Row(link),
                        format!("activity [{min}, {max}] misses sides [{}, {}]", lr.lhs, lr.rhs),
                    ));
                }
                let empty = ctx.cached_global[r] == 0;
                let redundant = (lr.lhs == f64::NEG_INFINITY || min >= lr.lhs - tol.feas_at(lr.lhs))
                    && (lr.rhs == f64::INFINITY || max <= lr.rhs + tol.feas_at(lr.rhs));
                if empty || redundant {
                    out.global.push(GlobalProposal::LinkRowDelete(link));
                    continue;
                }
                for &(j, a) in &lr.slice {
                    if a.abs() < tol.tiny {
                        out.global.push(GlobalProposal::EntryDelete { row: link, col: j as usize });
                    }
                }
            }
        }
    }
    Ok(out)
}
