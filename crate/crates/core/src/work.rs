//! Mutable presolve-time representation of a [`BlockLp`].
//!
//! Rows keep their original indices and carry an `alive` flag until [`reassemble`] compacts
//! them. Each regular block becomes a [`WorkBlock`]; block 0 together with the linking-row
//! sides becomes a [`Replica`], of which every worker holds its own copy.

use std::collections::BTreeMap;

use crate::blocklp::{Block, BlockLp, ColRef, LinkingSides, RowKind, RowOwner, RowRef, SparseRowMatrix};
use crate::kernels::activity::Activity;

/// Column inside a block's rows: either a linking column or one of the block's own.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Col {
    Link(u32),
    Local(u32),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub kind: RowKind,
    /// Sorted by column; linking columns first.
    pub entries: Vec<(Col, f64)>,
    pub lhs: f64,
    pub rhs: f64,
    pub alive: bool,
}

impl Row {
    fn new(kind: RowKind, entries: Vec<(Col, f64)>, lhs: f64, rhs: f64) -> Self {
        Row { kind, entries, lhs, rhs, alive: true }
    }

    pub fn coef(&self, col: Col) -> Option<f64> {
        self.entries.binary_search_by_key(&col, |e| e.0).ok().map(|p| self.entries[p].1)
    }

    fn remove(&mut self, col: Col) -> Option<f64> {
        let pos = self.entries.binary_search_by_key(&col, |e| e.0).ok()?;
        Some(self.entries.remove(pos).1)
    }
}

/// A linking row as seen by the replica: sides plus block 0's slice.
#[derive(Clone, Debug, PartialEq)]
pub struct LinkRow {
    pub kind: RowKind,
    pub lhs: f64,
    pub rhs: f64,
    pub alive: bool,
    /// Entries over linking columns (`F_0` / `G_0`).
    pub slice: Vec<(u32, f64)>,
}

fn remove_sorted(slice: &mut Vec<(u32, f64)>, col: u32) -> Option<f64> {
    let pos = slice.binary_search_by_key(&col, |e| e.0).ok()?;
    Some(slice.remove(pos).1)
}

/// Block 0 plus linking-row sides, replicated on every worker.
#[derive(Clone, Debug, PartialEq)]
pub struct Replica {
    pub rows: Vec<Row>,
    pub n_eq: usize,
    pub link_rows: Vec<LinkRow>,
    pub n_link_eq: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub obj: Vec<f64>,
    pub col_alive: Vec<bool>,
    pub col_rows: Vec<Vec<u32>>,
    pub col_links: Vec<Vec<u32>>,
    /// Holds the original offset plus every linking-column fixing contribution.
    pub offset: f64,
    /// Global activity of each linking row as of the last synchronization.
    pub activity: Vec<Activity>,
    /// Block 0's share of `activity`.
    pub block0_partial: Vec<Activity>,
    /// Per linking row, the last activity share received from each block.
    pub partials: Vec<BTreeMap<usize, Activity>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WorkBlock {
    pub index: usize,
    pub rows: Vec<Row>,
    pub n_eq: usize,
    /// Per linking row, this block's entries over its own columns.
    pub slices: Vec<Vec<(u32, f64)>>,
    pub n_link_eq: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub obj: Vec<f64>,
    pub col_alive: Vec<bool>,
    /// Own column -> rows that contained it at construction (may be stale).
    pub col_rows: Vec<Vec<u32>>,
    /// Own column -> linking rows whose slice contained it (may be stale).
    pub col_links: Vec<Vec<u32>>,
    /// Linking column -> own rows that contained it (may be stale).
    pub link_col_rows: Vec<Vec<u32>>,
    pub offset: f64,
    /// Accumulated `a * v` of own fixings per linking row, not yet broadcast.
    pub side_shift: Vec<f64>,
    /// Linking rows this block has proposed for deletion since the last sync.
    pub link_deleting: Vec<bool>,
    /// This block's activity partial per linking row as sent at the last sync.
    pub synced_partial: Vec<Activity>,
}

/// Which original rows and columns survive, in their new order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct IndexMapping {
    pub linking_cols: Vec<usize>,
    pub linking_eq: Vec<usize>,
    pub linking_ineq: Vec<usize>,
    /// Index 0 is block 0 (its `cols` repeat `linking_cols`).
    pub blocks: Vec<BlockMapping>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BlockMapping {
    pub eq: Vec<usize>,
    pub ineq: Vec<usize>,
    pub cols: Vec<usize>,
}

impl IndexMapping {
    /// Identity mapping for `lp`.
    pub fn identity(lp: &BlockLp) -> Self {
        IndexMapping {
            linking_cols: (0..lp.n_linking_cols()).collect(),
            linking_eq: (0..lp.n_linking_eq()).collect(),
            linking_ineq: (0..lp.n_linking_ineq()).collect(),
            blocks: lp
                .blocks
                .iter()
                .map(|b| BlockMapping {
                    eq: (0..b.n_eq()).collect(),
                    ineq: (0..b.n_ineq()).collect(),
                    cols: (0..b.n_cols()).collect(),
                })
                .collect(),
        }
    }
}

fn merge_row(link: &[(usize, f64)], local: &[(usize, f64)]) -> Vec<(Col, f64)> {
    link.iter()
        .map(|&(c, v)| (Col::Link(c as u32), v))
        .chain(local.iter().map(|&(c, v)| (Col::Local(c as u32), v)))
        .collect()
}

fn build_rows(blk: &Block, local: bool) -> Vec<Row> {
    let mut rows = Vec::with_capacity(blk.n_eq() + blk.n_ineq());
    for r in 0..blk.n_eq() {
        let loc: &[(usize, f64)] = if local { blk.b.row(r) } else { &[] };
        rows.push(Row::new(RowKind::Eq, merge_row(blk.a.row(r), loc), blk.rhs_eq[r], blk.rhs_eq[r]));
    }
    for r in 0..blk.n_ineq() {
        let loc: &[(usize, f64)] = if local { blk.d.row(r) } else { &[] };
        rows.push(Row::new(
            RowKind::Ineq,
            merge_row(blk.c.row(r), loc),
            blk.lhs_ineq[r],
            blk.rhs_ineq[r],
        ));
    }
    rows
}

fn slices_of(blk: &Block) -> Vec<Vec<(u32, f64)>> {
    blk.f
        .rows()
        .iter()
        .chain(blk.g.rows())
        .map(|r| r.iter().map(|&(c, v)| (c as u32, v)).collect())
        .collect()
}

impl Replica {
    pub fn from_lp(lp: &BlockLp) -> Self {
        let blk = &lp.blocks[0];
        let n0 = blk.n_cols();
        let rows = build_rows(blk, false);
        let n_link_eq = lp.n_linking_eq();
        let link_rows: Vec<LinkRow> = slices_of(blk)
            .into_iter()
            .enumerate()
            .map(|(r, slice)| {
                let (kind, lhs, rhs) = if r < n_link_eq {
                    (RowKind::Eq, lp.linking.rhs_eq[r], lp.linking.rhs_eq[r])
                } else {
                    let k = r - n_link_eq;
                    (RowKind::Ineq, lp.linking.lhs_ineq[k], lp.linking.rhs_ineq[k])
                };
                LinkRow { kind, lhs, rhs, alive: true, slice }
            })
            .collect();
        let mut col_rows = vec![Vec::new(); n0];
        for (r, row) in rows.iter().enumerate() {
            for &(c, _) in &row.entries {
                if let Col::Link(j) = c {
                    col_rows[j as usize].push(r as u32);
                }
            }
        }
        let mut col_links = vec![Vec::new(); n0];
        for (r, lr) in link_rows.iter().enumerate() {
            for &(j, _) in &lr.slice {
                col_links[j as usize].push(r as u32);
            }
        }
        let n_link = link_rows.len();
        Replica {
            n_eq: blk.n_eq(),
            rows,
            link_rows,
            n_link_eq,
            lower: blk.lower.clone(),
            upper: blk.upper.clone(),
            obj: blk.obj.clone(),
            col_alive: vec![true; n0],
            col_rows,
            col_links,
            offset: lp.objective_offset,
            activity: vec![Activity::default(); n_link],
            block0_partial: vec![Activity::default(); n_link],
            partials: vec![BTreeMap::new(); n_link],
        }
    }

    pub fn n_link_rows(&self) -> usize {
        self.link_rows.len()
    }

    pub fn row_ref(&self, id: usize) -> RowRef {
        if id < self.n_eq {
            RowRef::block(0, RowKind::Eq, id)
        } else {
            RowRef::block(0, RowKind::Ineq, id - self.n_eq)
        }
    }

    pub fn row_id(&self, r: &RowRef) -> usize {
        match r.kind {
            RowKind::Eq => r.index,
            RowKind::Ineq => self.n_eq + r.index,
        }
    }

    pub fn link_ref(&self, id: usize) -> RowRef {
        if id < self.n_link_eq {
            RowRef::linking(RowKind::Eq, id)
        } else {
            RowRef::linking(RowKind::Ineq, id - self.n_link_eq)
        }
    }

    pub fn link_id(&self, r: &RowRef) -> usize {
        match r.kind {
            RowKind::Eq => r.index,
            RowKind::Ineq => self.n_link_eq + r.index,
        }
    }

    pub fn bounds(&self, j: u32) -> (f64, f64) {
        (self.lower[j as usize], self.upper[j as usize])
    }

    /// Removes linking column `j` from block-0 rows and linking slices.
    /// Returns the removed `(row, coefficient)` pairs; row sides are untouched.
    pub fn drop_column(&mut self, j: u32) -> Vec<(RowRef, f64)> {
        let mut removed = Vec::new();
        for &r in &self.col_rows[j as usize] {
            if let Some(v) = self.rows[r as usize].remove(Col::Link(j)) {
                removed.push((r as usize, v));
            }
        }
        let mut out: Vec<(RowRef, f64)> = removed.into_iter().map(|(r, v)| (self.row_ref(r), v)).collect();
        for &r in &self.col_links[j as usize] {
            if let Some(v) = remove_sorted(&mut self.link_rows[r as usize].slice, j) {
                out.push((self.link_ref(r as usize), v));
            }
        }
        self.col_alive[j as usize] = false;
        out
    }

    /// Removes one entry of a block-0 row or linking slice.
    pub fn delete_entry(&mut self, row: &RowRef, j: u32) -> Option<f64> {
        match row.owner {
            RowOwner::Block(_) => {
                let id = self.row_id(row);
                self.rows[id].remove(Col::Link(j))
            }
            RowOwner::Linking => {
                let id = self.link_id(row);
                remove_sorted(&mut self.link_rows[id].slice, j)
            }
        }
    }

    pub fn sides(&self, row: &RowRef) -> (f64, f64) {
        match row.owner {
            RowOwner::Block(_) => {
                let r = &self.rows[self.row_id(row)];
                (r.lhs, r.rhs)
            }
            RowOwner::Linking => {
                let r = &self.link_rows[self.link_id(row)];
                (r.lhs, r.rhs)
            }
        }
    }

    pub fn set_sides(&mut self, row: &RowRef, lhs: f64, rhs: f64) {
        match row.owner {
            RowOwner::Block(_) => {
                let id = self.row_id(row);
                self.rows[id].lhs = lhs;
                self.rows[id].rhs = rhs;
            }
            RowOwner::Linking => {
                let id = self.link_id(row);
                self.link_rows[id].lhs = lhs;
                self.link_rows[id].rhs = rhs;
            }
        }
    }

    /// Recomputes block 0's activity share on every live linking row.
    pub fn refresh_block0_partial(&mut self) {
        for (r, lr) in self.link_rows.iter().enumerate() {
            let mut act = Activity::default();
            if lr.alive {
                for &(j, a) in &lr.slice {
                    act.add_term(a, self.lower[j as usize], self.upper[j as usize]);
                }
            }
            self.block0_partial[r] = act;
        }
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().filter(|r| r.alive).map(|r| r.entries.len()).sum::<usize>()
            + self.link_rows.iter().filter(|r| r.alive).map(|r| r.slice.len()).sum::<usize>()
    }
}

impl WorkBlock {
    pub fn from_lp(lp: &BlockLp, index: usize) -> Self {
        let blk = &lp.blocks[index];
        let n = blk.n_cols();
        let rows = build_rows(blk, true);
        let slices = slices_of(blk);
        let mut col_rows = vec![Vec::new(); n];
        let mut link_col_rows = vec![Vec::new(); lp.n_linking_cols()];
        for (r, row) in rows.iter().enumerate() {
            for &(c, _) in &row.entries {
                match c {
                    Col::Local(k) => col_rows[k as usize].push(r as u32),
                    Col::Link(j) => link_col_rows[j as usize].push(r as u32),
                }
            }
        }
        let mut col_links = vec![Vec::new(); n];
        for (r, s) in slices.iter().enumerate() {
            for &(k, _) in s {
                col_links[k as usize].push(r as u32);
            }
        }
        let n_link = slices.len();
        WorkBlock {
            index,
            n_eq: blk.n_eq(),
            rows,
            slices,
            n_link_eq: lp.n_linking_eq(),
            lower: blk.lower.clone(),
            upper: blk.upper.clone(),
            obj: blk.obj.clone(),
            col_alive: vec![true; n],
            col_rows,
            col_links,
            link_col_rows,
            offset: 0.0,
            side_shift: vec![0.0; n_link],
            link_deleting: vec![false; n_link],
            synced_partial: vec![Activity::default(); n_link],
        }
    }

    pub fn row_ref(&self, id: usize) -> RowRef {
        if id < self.n_eq {
            RowRef::block(self.index, RowKind::Eq, id)
        } else {
            RowRef::block(self.index, RowKind::Ineq, id - self.n_eq)
        }
    }

    pub fn row_id(&self, r: &RowRef) -> usize {
        match r.kind {
            RowKind::Eq => r.index,
            RowKind::Ineq => self.n_eq + r.index,
        }
    }

    pub fn link_id(&self, r: &RowRef) -> usize {
        match r.kind {
            RowKind::Eq => r.index,
            RowKind::Ineq => self.n_link_eq + r.index,
        }
    }

    pub fn link_ref(&self, id: usize) -> RowRef {
        if id < self.n_link_eq {
            RowRef::linking(RowKind::Eq, id)
        } else {
            RowRef::linking(RowKind::Ineq, id - self.n_link_eq)
        }
    }

    pub fn col_ref(&self, col: Col) -> ColRef {
        match col {
            Col::Link(j) => ColRef::Linking(j as usize),
            Col::Local(k) => ColRef::Local { block: self.index, index: k as usize },
        }
    }

    /// Removes own column `k` from every row and slice; sides are untouched.
    pub fn drop_local_column(&mut self, k: u32) -> (Vec<(usize, f64)>, Vec<(usize, f64)>) {
        let mut in_rows = Vec::new();
        for &r in &self.col_rows[k as usize] {
            if let Some(v) = self.rows[r as usize].remove(Col::Local(k)) {
                in_rows.push((r as usize, v));
            }
        }
        let mut in_slices = Vec::new();
        for &r in &self.col_links[k as usize] {
            if let Some(v) = remove_sorted(&mut self.slices[r as usize], k) {
                in_slices.push((r as usize, v));
            }
        }
        self.col_alive[k as usize] = false;
        (in_rows, in_slices)
    }

    /// Removes linking column `j` from this block's own rows.
    pub fn drop_link_column(&mut self, j: u32) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        for &r in &self.link_col_rows[j as usize] {
            if let Some(v) = self.rows[r as usize].remove(Col::Link(j)) {
                out.push((r as usize, v));
            }
        }
        out
    }

    pub fn remove_entry(&mut self, row_id: usize, col: Col) -> Option<f64> {
        self.rows[row_id].remove(col)
    }

    pub fn remove_slice_entry(&mut self, link_id: usize, k: u32) -> Option<f64> {
        remove_sorted(&mut self.slices[link_id], k)
    }

    /// This block's activity share on every linking row.
    pub fn link_partials(&self) -> Vec<Activity> {
        self.slices
            .iter()
            .map(|s| {
                let mut act = Activity::default();
                for &(k, a) in s {
                    act.add_term(a, self.lower[k as usize], self.upper[k as usize]);
                }
                act
            })
            .collect()
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().filter(|r| r.alive).map(|r| r.entries.len()).sum::<usize>()
            + self.slices.iter().map(Vec::len).sum::<usize>()
    }
}

/// Splits a vector of per-block states out of `lp`.
pub fn decompose(lp: &BlockLp) -> (Replica, Vec<WorkBlock>) {
    let replica = Replica::from_lp(lp);
    let blocks = (1..=lp.n_blocks()).map(|i| WorkBlock::from_lp(lp, i)).collect();
    (replica, blocks)
}

/// Compacts the surviving rows and columns back into a [`BlockLp`].
///
/// `blocks` must yield blocks `1..=N` in order. The objective offset is the replica's offset
/// followed by each block's offset, summed in block order.
pub fn reassemble<'a>(replica: &Replica, blocks: impl IntoIterator<Item = &'a WorkBlock>) -> (BlockLp, IndexMapping) {
    let linking_cols: Vec<usize> = (0..replica.col_alive.len()).filter(|&j| replica.col_alive[j]).collect();
    let mut link_map = vec![usize::MAX; replica.col_alive.len()];
    for (new, &old) in linking_cols.iter().enumerate() {
        link_map[old] = new;
    }
    let n0 = linking_cols.len();
    let live_links: Vec<usize> = (0..replica.link_rows.len()).filter(|&r| replica.link_rows[r].alive).collect();
    let linking_eq: Vec<usize> = live_links.iter().copied().filter(|&r| r < replica.n_link_eq).collect();
    let linking_ineq: Vec<usize> =
        live_links.iter().copied().filter(|&r| r >= replica.n_link_eq).map(|r| r - replica.n_link_eq).collect();

    let split_rows = |rows: &[Row], n_eq: usize, local_map: Option<&[usize]>| {
        let mut a = Vec::new();
        let mut b = Vec::new();
        let mut c = Vec::new();
        let mut d = Vec::new();
        let mut rhs_eq = Vec::new();
        let mut lhs_ineq = Vec::new();
        let mut rhs_ineq = Vec::new();
        let mut eq_map = Vec::new();
        let mut ineq_map = Vec::new();
        for (id, row) in rows.iter().enumerate().filter(|(_, r)| r.alive) {
            let mut link = Vec::new();
            let mut local = Vec::new();
            for &(col, v) in &row.entries {
                match col {
                    Col::Link(j) => link.push((link_map[j as usize], v)),
                    Col::Local(k) => local.push((local_map.expect("local column in block 0")[k as usize], v)),
                }
            }
            if id < n_eq {
                a.push(link);
                b.push(local);
                rhs_eq.push(row.rhs);
                eq_map.push(id);
            } else {
                c.push(link);
                d.push(local);
                lhs_ineq.push(row.lhs);
                rhs_ineq.push(row.rhs);
                ineq_map.push(id - n_eq);
            }
        }
        (a, b, c, d, rhs_eq, lhs_ineq, rhs_ineq, eq_map, ineq_map)
    };
    let matrix = |n_cols: usize, rows: Vec<Vec<(usize, f64)>>| {
        SparseRowMatrix::from_rows(n_cols, rows).expect("presolve keeps matrices well formed")
    };
    let slice_rows = |slices: &dyn Fn(usize) -> Vec<(usize, f64)>, ids: &[usize], offset: usize| {
        ids.iter().map(|&r| slices(r + offset)).collect::<Vec<_>>()
    };

    // block 0
    let (a, _, c, _, rhs_eq, lhs_ineq, rhs_ineq, eq_map, ineq_map) = split_rows(&replica.rows, replica.n_eq, None);
    let b0_slices = |r: usize| -> Vec<(usize, f64)> {
        replica.link_rows[r].slice.iter().map(|&(j, v)| (link_map[j as usize], v)).collect()
    };
    let block0 = Block {
        b: SparseRowMatrix::zeros(a.len(), 0),
        d: SparseRowMatrix::zeros(c.len(), 0),
        a: matrix(n0, a),
        c: matrix(n0, c),
        f: matrix(n0, slice_rows(&b0_slices, &linking_eq, 0)),
        g: matrix(n0, slice_rows(&b0_slices, &linking_ineq, replica.n_link_eq)),
        rhs_eq,
        lhs_ineq,
        rhs_ineq,
        lower: linking_cols.iter().map(|&j| replica.lower[j]).collect(),
        upper: linking_cols.iter().map(|&j| replica.upper[j]).collect(),
        obj: linking_cols.iter().map(|&j| replica.obj[j]).collect(),
    };
    let mut out_blocks = vec![block0];
    let mut mapping_blocks =
        vec![BlockMapping { eq: eq_map, ineq: ineq_map, cols: linking_cols.clone() }];
    let mut offset = replica.offset;

    for wb in blocks {
        let cols: Vec<usize> = (0..wb.col_alive.len()).filter(|&k| wb.col_alive[k]).collect();
        let mut local_map = vec![usize::MAX; wb.col_alive.len()];
        for (new, &old) in cols.iter().enumerate() {
            local_map[old] = new;
        }
        let n = cols.len();
        let (a, b, c, d, rhs_eq, lhs_ineq, rhs_ineq, eq_map, ineq_map) =
            split_rows(&wb.rows, wb.n_eq, Some(&local_map));
        let slices = |r: usize| -> Vec<(usize, f64)> {
            wb.slices[r].iter().map(|&(k, v)| (local_map[k as usize], v)).collect()
        };
        out_blocks.push(Block {
            a: matrix(n0, a),
            b: matrix(n, b),
            c: matrix(n0, c),
            d: matrix(n, d),
            f: matrix(n, slice_rows(&slices, &linking_eq, 0)),
            g: matrix(n, slice_rows(&slices, &linking_ineq, wb.n_link_eq)),
            rhs_eq,
            lhs_ineq,
            rhs_ineq,
            lower: cols.iter().map(|&k| wb.lower[k]).collect(),
            upper: cols.iter().map(|&k| wb.upper[k]).collect(),
            obj: cols.iter().map(|&k| wb.obj[k]).collect(),
        });
        mapping_blocks.push(BlockMapping { eq: eq_map, ineq: ineq_map, cols });
        offset += wb.offset;
    }

    let linking = LinkingSides {
        rhs_eq: linking_eq.iter().map(|&r| replica.link_rows[r].rhs).collect(),
        lhs_ineq: linking_ineq.iter().map(|&r| replica.link_rows[r + replica.n_link_eq].lhs).collect(),
        rhs_ineq: linking_ineq.iter().map(|&r| replica.link_rows[r + replica.n_link_eq].rhs).collect(),
    };
    let lp = BlockLp { blocks: out_blocks, linking, objective_offset: offset };
    let mapping = IndexMapping { linking_cols, linking_eq, linking_ineq, blocks: mapping_blocks };
    (lp, mapping)
}
