use super::LocalReduction;
use crate::blocklp::{ColRef, RowOwner, RowRef};
use crate::error::PresolveError;
use crate::postsolve::{JournalOp, JournalSink};
use crate::work::{Col, WorkBlock};

fn stale(what: impl std::fmt::Display) -> PresolveError {
    PresolveError::Internal(format!("stale reduction on {what}"))
}

fn shift(v: f64, delta: f64) -> f64 {
    if v.is_finite() {
        v + delta
    } else {
        v
    }
}

fn local_col(block: &WorkBlock, col: &ColRef) -> Result<u32, PresolveError> {
    match *col {
        ColRef::Local { block: b, index } if b == block.index && index < block.col_alive.len() => {
            if block.col_alive[index] {
                Ok(index as u32)
            } else {
                Err(stale(col))
            }
        }
        _ => Err(PresolveError::Internal(format!("{col} is not owned by block {}", block.index))),
    }
}

fn own_row(block: &WorkBlock, row: &RowRef) -> Result<usize, PresolveError> {
    match row.owner {
        RowOwner::Block(b) if b == block.index => {
            let id = block.row_id(row);
            if id < block.rows.len() && block.rows[id].alive {
                Ok(id)
            } else {
                Err(stale(row))
            }
        }
        _ => Err(PresolveError::Internal(format!("{row} is not owned by block {}", block.index))),
    }
}

/// Applies `reds` in order to `block`, journaling each change.
///
/// Returns the change in this block's entry count per linking row, for the caller to buffer.
pub fn apply_reductions(
    block: &mut WorkBlock,
    journal: &mut JournalSink,
    reds: &[LocalReduction],
) -> Result<Vec<(usize, i64)>, PresolveError> {
    let b = block.index;
    let mut deltas = Vec::new();
    for red in reds {
        match red {
            LocalReduction::DeleteRow(row) if row.is_linking() => {
                let id = block.link_id(row);
                let entries: Vec<(ColRef, f64)> =
                    block.slices[id].iter().map(|&(k, a)| (block.col_ref(Col::Local(k)), a)).collect();
                block.slices[id].clear();
                block.link_deleting[id] = true;
                if !entries.is_empty() {
                    deltas.push((id, -(entries.len() as i64)));
                    journal.push(b, JournalOp::ClearSlice { block: b, row: *row, entries });
                }
            }
            LocalReduction::DeleteRow(row) => {
                let id = own_row(block, row)?;
                let entries = block.rows[id].entries.iter().map(|&(c, a)| (block.col_ref(c), a)).collect();
                block.rows[id].alive = false;
                let (lhs, rhs) = (block.rows[id].lhs, block.rows[id].rhs);
                journal.push(b, JournalOp::DeleteRow { row: *row, entries, lhs, rhs });
            }
            LocalReduction::DeleteEntry(row, col) if row.is_linking() => {
                let id = block.link_id(row);
                let k = local_col(block, col)?;
                let value = block.remove_slice_entry(id, k).ok_or_else(|| stale(col))?;
                deltas.push((id, -1));
                journal.push(b, JournalOp::DeleteEntry { row: *row, col: *col, value });
            }
            LocalReduction::DeleteEntry(row, col) => {
                let id = own_row(block, row)?;
                let c = match *col {
                    ColRef::Linking(j) => Col::Link(j as u32),
                    ColRef::Local { .. } => Col::Local(local_col(block, col)?),
                };
                let value = block.remove_entry(id, c).ok_or_else(|| stale(col))?;
                journal.push(b, JournalOp::DeleteEntry { row: *row, col: *col, value });
            }
            LocalReduction::TightenLower(col, v) | LocalReduction::TightenUpper(col, v) => {
                let k = local_col(block, col)? as usize;
                let (prev_lower, prev_upper) = (block.lower[k], block.upper[k]);
                if matches!(red, LocalReduction::TightenLower(..)) {
                    block.lower[k] = block.lower[k].max(*v);
                } else {
                    block.upper[k] = block.upper[k].min(*v);
                }
                if (block.lower[k], block.upper[k]) != (prev_lower, prev_upper) {
                    journal.push(
                        b,
                        JournalOp::SetBounds {
                            col: *col,
                            lower: block.lower[k],
                            upper: block.upper[k],
                            prev_lower,
                            prev_upper,
                        },
                    );
                }
            }
            LocalReduction::FixVariable(col, v) => {
                let k = local_col(block, col)?;
                let (in_rows, in_slices) = block.drop_local_column(k);
                block.lower[k as usize] = *v;
                block.upper[k as usize] = *v;
                let mut entries = Vec::with_capacity(in_rows.len() + in_slices.len());
                let mut sides = Vec::new();
                for &(id, a) in &in_rows {
                    let row_ref = block.row_ref(id);
                    entries.push((row_ref, a));
                    let r = &mut block.rows[id];
                    if r.alive {
                        r.lhs = shift(r.lhs, -a * v);
                        r.rhs = shift(r.rhs, -a * v);
                        sides.push(JournalOp::SetSides { row: row_ref, lhs: r.lhs, rhs: r.rhs });
                    }
                }
                for &(id, a) in &in_slices {
                    entries.push((block.link_ref(id), a));
                    block.side_shift[id] += a * v;
                    deltas.push((id, -1));
                }
                journal.push(b, JournalOp::FixVariable { col: *col, value: *v, entries });
                for op in sides {
                    journal.push(b, op);
                }
                let c = block.obj[k as usize];
                if c != 0.0 {
                    block.offset += c * v;
                    journal.push(b, JournalOp::Offset { block: b, value: block.offset });
                }
            }
            LocalReduction::ShiftSide(row, delta) => {
                let id = own_row(block, row)?;
                let r = &mut block.rows[id];
                r.lhs = shift(r.lhs, *delta);
                r.rhs = shift(r.rhs, *delta);
                journal.push(b, JournalOp::SetSides { row: *row, lhs: r.lhs, rhs: r.rhs });
            }
            LocalReduction::SetSides(row, lhs, rhs) => {
                let id = own_row(block, row)?;
                let r = &mut block.rows[id];
                r.lhs = *lhs;
                r.rhs = *rhs;
                journal.push(b, JournalOp::SetSides { row: *row, lhs: *lhs, rhs: *rhs });
            }
            LocalReduction::ObjOffset(delta) => {
                block.offset += delta;
                journal.push(b, JournalOp::Offset { block: b, value: block.offset });
            }
        }
    }
    Ok(deltas)
}
