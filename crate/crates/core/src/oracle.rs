//! Dense reference LP solver for small instances.
//!
//! `flatten` turns a block LP into one dense row list and `solve_reference` runs a two-phase
//! tableau simplex with Bland's rule. Both are meant for checking presolve on problems with at
//! most a few hundred variables, not for speed.

use thiserror::Error;

use crate::blocklp::BlockLp;

/// Largest number of variables `flatten` accepts.
pub const MAX_VARS: usize = 200;

const PIVOT_TOL: f64 = 1e-9;
const MAX_ITER: usize = 50_000;

/// `min c·x + offset` subject to `lhs <= A x <= rhs`, `lower <= x <= upper`.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseLp {
    pub c: Vec<f64>,
    pub offset: f64,
    pub rows: Vec<Vec<f64>>,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal { value: f64, x: Vec<f64> },
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn value(&self) -> Option<f64> {
        match self {
            LpOutcome::Optimal { value, .. } => Some(*value),
            _ => None,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("{0} variables exceed the reference solver limit of {MAX_VARS}")]
    TooLarge(usize),
    #[error("simplex did not terminate within {MAX_ITER} pivots")]
    IterationLimit,
}

/// Dense form of `lp`. Columns follow the flattened order (linking columns, then block by
/// block); rows are block 0's rows, then each block's rows, then the linking rows.
pub fn flatten(lp: &BlockLp) -> Result<DenseLp, OracleError> {
    let n = lp.n_cols_total();
    if n > MAX_VARS {
        return Err(OracleError::TooLarge(n));
    }
    let n0 = lp.n_linking_cols();
    let mut d = DenseLp { c: Vec::with_capacity(n), offset: lp.objective_offset, rows: vec![], lhs: vec![], rhs: vec![], lower: vec![], upper: vec![] };
    for blk in &lp.blocks {
        d.c.extend(&blk.obj);
        d.lower.extend(&blk.lower);
        d.upper.extend(&blk.upper);
    }
    for (i, blk) in lp.blocks.iter().enumerate() {
        let off = lp.col_offset(i);
        for r in 0..blk.n_eq() {
            let mut row = vec![0.0; n];
            for &(j, v) in blk.a.row(r) {
                row[j] += v;
            }
            if i > 0 {
                for &(k, v) in blk.b.row(r) {
                    row[off + k] += v;
                }
            }
            d.rows.push(row);
            d.lhs.push(blk.rhs_eq[r]);
            d.rhs.push(blk.rhs_eq[r]);
        }
        for r in 0..blk.n_ineq() {
            let mut row = vec![0.0; n];
            for &(j, v) in blk.c.row(r) {
                row[j] += v;
            }
            if i > 0 {
                for &(k, v) in blk.d.row(r) {
                    row[off + k] += v;
                }
            }
            d.rows.push(row);
            d.lhs.push(blk.lhs_ineq[r]);
            d.rhs.push(blk.rhs_ineq[r]);
        }
    }
    let linking = |eq: bool, r: usize| {
        let mut row = vec![0.0; n];
        for (i, blk) in lp.blocks.iter().enumerate() {
            let m = if eq { &blk.f } else { &blk.g };
            for &(k, v) in m.row(r) {
                row[lp.col_offset(i) + k] += v;
            }
        }
        row
    };
    debug_assert_eq!(lp.col_offset(0), 0);
    debug_assert!(n0 == 0 || lp.col_offset(1) == n0);
    for r in 0..lp.n_linking_eq() {
        d.rows.push(linking(true, r));
        d.lhs.push(lp.linking.rhs_eq[r]);
        d.rhs.push(lp.linking.rhs_eq[r]);
    }
    for r in 0..lp.n_linking_ineq() {
        d.rows.push(linking(false, r));
        d.lhs.push(lp.linking.lhs_ineq[r]);
        d.rhs.push(lp.linking.rhs_ineq[r]);
    }
    Ok(d)
}

/// How an original variable maps onto nonnegative standard-form variables.
enum Map {
    /// `x = base + s * y[i]`
    Shift { i: usize, base: f64, s: f64 },
    /// `x = y[p] - y[m]`
    Free { p: usize, m: usize },
}

/// Solves `lp` exactly enough for comparisons at about 1e-7 relative precision.
pub fn solve_reference(lp: &DenseLp) -> Result<LpOutcome, OracleError> {
    let n = lp.c.len();
    for j in 0..n {
        if lp.lower[j] > lp.upper[j] {
            return Ok(LpOutcome::Infeasible);
        }
    }
    // variables
    let mut maps = Vec::with_capacity(n);
    let mut ny = 0;
    let mut ub_rows: Vec<(usize, f64)> = vec![];
    for j in 0..n {
        let (l, u) = (lp.lower[j], lp.upper[j]);
        if l.is_finite() {
            maps.push(Map::Shift { i: ny, base: l, s: 1.0 });
            if u.is_finite() {
                ub_rows.push((ny, u - l));
            }
            ny += 1;
        } else if u.is_finite() {
            maps.push(Map::Shift { i: ny, base: u, s: -1.0 });
            ny += 1;
        } else {
            maps.push(Map::Free { p: ny, m: ny + 1 });
            ny += 2;
        }
    }
    // rows as (coefs over y, sense, rhs) where sense: 0 eq, 1 <=, -1 >=
    let mut cons: Vec<(Vec<f64>, i8, f64)> = vec![];
    for (r, row) in lp.rows.iter().enumerate() {
        let mut y = vec![0.0; ny];
        let mut shift = 0.0;
        for (j, &a) in row.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            match maps[j] {
                Map::Shift { i, base, s } => {
                    y[i] += a * s;
                    shift += a * base;
                }
                Map::Free { p, m } => {
                    y[p] += a;
                    y[m] -= a;
                }
            }
        }
        let (l, u) = (lp.lhs[r], lp.rhs[r]);
        if l > u {
            return Ok(LpOutcome::Infeasible);
        }
        if l == u {
            cons.push((y, 0, l - shift));
            continue;
        }
        if u.is_finite() {
            cons.push((y.clone(), 1, u - shift));
        }
        if l.is_finite() {
            cons.push((y, -1, l - shift));
        }
    }
    for (i, cap) in ub_rows {
        let mut y = vec![0.0; ny];
        y[i] = 1.0;
        cons.push((y, 1, cap));
    }
    let mut cost = vec![0.0; ny];
    for j in 0..n {
        match maps[j] {
            Map::Shift { i, s, .. } => {
                cost[i] += lp.c[j] * s;
            }
            Map::Free { p, m } => {
                cost[p] += lp.c[j];
                cost[m] -= lp.c[j];
            }
        }
    }
    let y = match simplex(ny, &cons, &cost)? {
        Ok(y) => y,
        Err(outcome) => return Ok(outcome),
    };
    let x: Vec<f64> = maps
        .iter()
        .map(|m| match *m {
            Map::Shift { i, base, s } => base + s * y[i],
            Map::Free { p, m } => y[p] - y[m],
        })
        .collect();
    let value = lp.offset + lp.c.iter().zip(&x).map(|(c, x)| c * x).sum::<f64>();
    Ok(LpOutcome::Optimal { value, x })
}

struct Tableau {
    /// `m` constraint rows followed by the objective row; last column is the right-hand side.
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    width: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.t[r][c];
        for v in self.t[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
            }
        }
        self.basis[r] = c;
    }

    /// Minimizes the objective row over columns `< allowed`. `Ok(false)` means unbounded.
    fn optimize(&mut self, allowed: usize) -> Result<bool, OracleError> {
        let m = self.basis.len();
        for _ in 0..MAX_ITER {
            let obj = &self.t[m];
            // Bland: lowest index with negative reduced cost
            let Some(c) = (0..allowed).find(|&j| obj[j] < -PIVOT_TOL) else {
                return Ok(true);
            };
            let mut best: Option<(usize, f64)> = None;
            for r in 0..m {
                let a = self.t[r][c];
                if a > PIVOT_TOL {
                    let ratio = self.t[r][self.width] / a;
                    let better = match best {
                        None => true,
                        Some((br, bv)) => ratio < bv - 1e-12 || (ratio <= bv + 1e-12 && self.basis[r] < self.basis[br]),
                    };
                    if better {
                        best = Some((r, ratio));
                    }
                }
            }
            match best {
                None => return Ok(false),
                Some((r, _)) => self.pivot(r, c),
            }
        }
        Err(OracleError::IterationLimit)
    }
}

/// Two-phase simplex on `cons` over `y >= 0`. The inner `Err` carries a non-optimal outcome.
fn simplex(ny: usize, cons: &[(Vec<f64>, i8, f64)], cost: &[f64]) -> Result<Result<Vec<f64>, LpOutcome>, OracleError> {
    let m = cons.len();
    let n_slack = cons.iter().filter(|c| c.1 != 0).count();
    let n_struct = ny + n_slack;
    let width = n_struct + m;
    let mut t = vec![vec![0.0; width + 1]; m + 1];
    let mut slack = ny;
    let scale = cons.iter().map(|c| c.2.abs()).fold(1.0, f64::max);
    for (r, (coefs, sense, rhs)) in cons.iter().enumerate() {
        t[r][..ny].copy_from_slice(coefs);
        if *sense != 0 {
            t[r][slack] = f64::from(*sense);
            slack += 1;
        }
        t[r][width] = *rhs;
        if *rhs < 0.0 {
            for v in t[r].iter_mut() {
                *v = -*v;
            }
        }
        t[r][n_struct + r] = 1.0;
    }
    // phase 1 objective: sum of artificials, expressed in nonbasic terms
    for r in 0..m {
        for j in 0..=width {
            if j < n_struct || j == width {
                t[m][j] -= t[r][j];
            }
        }
    }
    let mut tab = Tableau { t, basis: (n_struct..n_struct + m).collect(), width };
    tab.optimize(width)?;
    if -tab.t[m][width] > 1e-7 * scale {
        return Ok(Err(LpOutcome::Infeasible));
    }
    // drive remaining artificials out of the basis
    let mut keep: Vec<bool> = vec![true; m];
    for r in 0..m {
        if tab.basis[r] >= n_struct {
            match (0..n_struct).find(|&j| tab.t[r][j].abs() > 1e-7) {
                Some(c) => tab.pivot(r, c),
                None => keep[r] = false,
            }
        }
    }
    // phase 2 over kept rows and structural columns
    let rows: Vec<usize> = (0..m).filter(|&r| keep[r]).collect();
    let mut t2: Vec<Vec<f64>> = rows
        .iter()
        .map(|&r| {
            let mut row = tab.t[r][..n_struct].to_vec();
            row.push(tab.t[r][width]);
            row
        })
        .collect();
    let basis: Vec<usize> = rows.iter().map(|&r| tab.basis[r]).collect();
    let mut obj = vec![0.0; n_struct + 1];
    obj[..ny].copy_from_slice(cost);
    for (i, &b) in basis.iter().enumerate() {
        let f = obj[b];
        if f != 0.0 {
            for (v, rv) in obj.iter_mut().zip(&t2[i]) {
                *v -= f * rv;
            }
        }
    }
    t2.push(obj);
    let mut tab2 = Tableau { t: t2, basis, width: n_struct };
    if !tab2.optimize(n_struct)? {
        return Ok(Err(LpOutcome::Unbounded));
    }
    let mut y = vec![0.0; ny];
    for (i, &b) in tab2.basis.iter().enumerate() {
        if b < ny {
            y[b] = tab2.t[i][n_struct].max(0.0);
        }
    }
    Ok(Ok(y))
}
