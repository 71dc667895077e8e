use std::collections::HashMap;

use super::{infeasible, BoundEdits, KernelCtx, KernelOutput, Scope};
use crate::blocklp::{Location, RowKind};
use crate::error::PresolveError;
use crate::work::{Col, Row};

/// Longest equality row considered for nearly parallel detection.
const NEAR_MAX_LEN: usize = 32;
/// Minimum relative size of the differing coefficient before it is solved for.
const NEAR_MIN_PIVOT: f64 = 1e-3;

/// Merges rows that are scalar multiples of each other and fixes the differing column of
/// equality pairs that are parallel except in one column.
pub fn parallel_rows(scope: &Scope<'_>, ctx: &KernelCtx<'_>) -> Result<KernelOutput, PresolveError> {
    let tol = ctx.tol;
    let rows = scope.rows();
    let mut out = KernelOutput::default();

    let mut buckets: HashMap<u64, Vec<usize>> = HashMap::new();
    for (id, row) in rows.iter().enumerate() {
        if row.alive && !row.entries.is_empty() && !has_tiny(row, tol.tiny) {
            buckets.entry(canonical_hash(&row.entries, None, ctx.hash_seed)).or_default().push(id);
        }
    }
    let mut groups: Vec<Vec<usize>> = buckets.into_values().filter(|ids| ids.len() > 1).collect();
    groups.sort_unstable_by_key(|ids| ids[0]);
    let mut deleted = vec![false; rows.len()];
    for ids in &groups {
        // row ids list equalities first, so an equality always represents its class
        let mut reps: Vec<Rep> = Vec::new();
        for &q in ids {
            let row = &rows[q];
            let Some((p, lambda)) = reps.iter().enumerate().find_map(|(p, rep)| {
                proportion(&rows[rep.id].entries, &row.entries, tol.parallel).map(|l| (p, l))
            }) else {
                reps.push(Rep { id: q, kind: row.kind, lhs: row.lhs, rhs: row.rhs, changed: false });
                continue;
            };
            let rep = &mut reps[p];
            let (lo, hi) = if lambda > 0.0 {
                (row.lhs / lambda, row.rhs / lambda)
            } else {
                (row.rhs / lambda, row.lhs / lambda)
            };
            let origin = Location::Row(scope.row_ref(q));
            match rep.kind {
                RowKind::Eq => {
                    let b = rep.rhs;
                    if b < lo - tol.feas_at(lo) || b > hi + tol.feas_at(hi) {
                        return Err(infeasible(
                            origin,
                            format!("parallel to {} with side {b} outside [{lo}, {hi}]", scope.row_ref(rep.id)),
                        ));
                    }
                }
                RowKind::Ineq => {
                    let lhs = rep.lhs.max(lo);
                    let rhs = rep.rhs.min(hi);
                    if lhs > rhs + tol.feas_at(rhs) {
                        return Err(infeasible(
                            origin,
                            format!("parallel to {} with disjoint sides [{lhs}, {rhs}]", scope.row_ref(rep.id)),
                        ));
                    }
                    let lhs = lhs.min(rhs);
                    if lhs != rep.lhs || rhs != rep.rhs {
                        rep.lhs = lhs;
                        rep.rhs = rhs;
                        rep.changed = true;
                    }
                }
            }
            deleted[q] = true;
            out.delete_row(scope, q);
        }
        for rep in reps.iter().filter(|r| r.changed) {
            out.set_sides(scope, rep.id, rep.lhs, rep.rhs);
        }
    }

    let mut edits = BoundEdits::new(scope, tol);
    nearly_parallel(scope, ctx, &deleted, &mut edits)?;
    edits.emit(&mut out, 0.0);
    Ok(out)
}

/// Rows still holding tiny coefficients wait for cleanup; their ratios are noise.
fn has_tiny(row: &Row, tiny: f64) -> bool {
    row.entries.iter().any(|&(_, a)| a.abs() < tiny)
}

struct Rep {
    id: usize,
    kind: RowKind,
    lhs: f64,
    rhs: f64,
    changed: bool,
}

fn nearly_parallel(
    scope: &Scope<'_>,
    ctx: &KernelCtx<'_>,
    deleted: &[bool],
    edits: &mut BoundEdits<'_>,
) -> Result<(), PresolveError> {
    let rows = scope.rows();
    let candidates = |id: usize, row: &Row| {
        row.alive
            && !deleted[id]
            && row.kind == RowKind::Eq
            && (2..=NEAR_MAX_LEN).contains(&row.entries.len())
            && !has_tiny(row, ctx.tol.tiny)
    };
    let mut full: HashMap<u64, Vec<usize>> = HashMap::new();
    let mut reduced: HashMap<(u64, Col), Vec<usize>> = HashMap::new();
    let mut hashes = Vec::new();
    for (id, row) in rows.iter().enumerate() {
        if !candidates(id, row) {
            continue;
        }
        let e = &row.entries;
        let s = 1.0 / e[0].1;
        hashes.clear();
        hashes.extend(e.iter().map(|&(c, a)| entry_hash(c, a * s, ctx.hash_seed)));
        let total = hashes.iter().fold(0u64, |acc, h| acc.wrapping_add(*h));
        full.entry(total).or_default().push(id);
        // dropping the first entry changes the scale, so that one is rehashed
        reduced.entry((canonical_hash(e, Some(e[0].0), ctx.hash_seed), e[0].0)).or_default().push(id);
        for (i, &(c, _)) in e.iter().enumerate().skip(1) {
            reduced.entry((total.wrapping_sub(hashes[i]), c)).or_default().push(id);
        }
    }
    let mut groups: Vec<((u64, Col), Vec<usize>)> =
        reduced.into_iter().filter(|(k, ids)| ids.len() > 1 || full.contains_key(&k.0)).collect();
    groups.sort_unstable_by_key(|(k, ids)| (ids[0], k.1));
    let mut used = vec![false; rows.len()];
    for ((h, c), ids) in &groups {
        let (h, c) = (*h, *c);
        // a row lacking `c` entirely, matched against a row containing it
        let partners = full.get(&h).map(Vec::as_slice).unwrap_or(&[]);
        let pairs = ids
            .iter()
            .flat_map(|&q| partners.iter().map(move |&p| (p, q)))
            .chain(ids.iter().enumerate().flat_map(|(i, &p)| ids[i + 1..].iter().map(move |&q| (p, q))));
        for (p, q) in pairs {
            if p == q || used[p] || used[q] {
                continue;
            }
            let (rp, rq) = (&rows[p], &rows[q]);
            let rest_p: Vec<(Col, f64)> = rp.entries.iter().copied().filter(|e| e.0 != c).collect();
            let rest_q: Vec<(Col, f64)> = rq.entries.iter().copied().filter(|e| e.0 != c).collect();
            if rest_p.is_empty() {
                continue;
            }
            let Some(lambda) = proportion(&rest_p, &rest_q, ctx.tol.parallel) else { continue };
            let pc = rp.coef(c).unwrap_or(0.0);
            let qc = rq.coef(c).unwrap_or(0.0);
            let pivot = qc - lambda * pc;
            if pivot.abs() < ctx.tol.tiny || pivot.abs() < NEAR_MIN_PIVOT * qc.abs().max((lambda * pc).abs()) {
                continue;
            }
            let value = (rq.rhs - lambda * rp.rhs) / pivot;
            edits.fix(c, value, &scope.row_ref(q))?;
            used[p] = true;
            used[q] = true;
        }
    }
    Ok(())
}

/// `lambda` with `q = lambda * p` entrywise (relative to the first coefficients), if any.
fn proportion(p: &[(Col, f64)], q: &[(Col, f64)], tol: f64) -> Option<f64> {
    if p.len() != q.len() || p.is_empty() {
        return None;
    }
    let (p0, q0) = (p[0].1, q[0].1);
    for (&(cp, a), &(cq, b)) in p.iter().zip(q) {
        if cp != cq {
            return None;
        }
        let (sa, sb) = (a / p0, b / q0);
        if (sa - sb).abs() > tol * sa.abs().max(1.0) {
            return None;
        }
    }
    Some(q0 / p0)
}

/// Hash of the row scaled so its first (non-skipped) coefficient is 1, with coefficients
/// rounded to 40 significant bits. Entry hashes are summed, so removing an entry that is
/// not the first one amounts to subtracting its hash.
fn canonical_hash(entries: &[(Col, f64)], skip: Option<Col>, seed: u64) -> u64 {
    let mut scale = None;
    let mut total = 0u64;
    for &(c, a) in entries {
        if Some(c) == skip {
            continue;
        }
        let s = *scale.get_or_insert(1.0 / a);
        total = total.wrapping_add(entry_hash(c, a * s, seed));
    }
    total
}

fn entry_hash(c: Col, v: f64, seed: u64) -> u64 {
    let col = match c {
        Col::Link(j) => u64::from(j) << 1,
        Col::Local(k) => (u64::from(k) << 1) | 1,
    };
    let (e, m) = round_significant(v);
    mix(mix(mix(seed) ^ col) ^ ((e as u64) << 48) ^ m as u64)
}

/// splitmix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Binary exponent and signed mantissa rounded to 40 significant bits (about 12 digits).
fn round_significant(v: f64) -> (i32, i64) {
    if v == 0.0 || !v.is_finite() {
        return (0, 0);
    }
    let bits = v.to_bits();
    let mut e = ((bits >> 52) & 0x7ff) as i32;
    let mut m = ((bits & ((1 << 52) - 1)) | (1 << 52)) + (1 << 12);
    m >>= 13;
    if m >> 40 != 0 {
        m >>= 1;
        e += 1;
    }
    let m = m as i64;
    (e, if v < 0.0 { -m } else { m })
}
