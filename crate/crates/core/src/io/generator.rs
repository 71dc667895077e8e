//! Synthetic block LPs with planted redundancy.
//!
//! Every instance is built around a planted point `x*` strictly inside the bounds, so it is
//! feasible by construction. Base rows have mixed-sign coefficients and sides close to their
//! activity at `x*`, which keeps incidental reductions rare. On top of them the generator
//! plants four kinds of removable structure and records each plant in a manifest.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::blocklp::{Block, BlockLp, ColRef, LinkingSides, RowKind, RowRef, SparseRowMatrix};

const TINY_VALUE: f64 = 1e-12;
const SCALES: [f64; 6] = [2.0, -2.0, 0.5, -0.5, 4.0, -4.0];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorSpec {
    pub blocks: usize,
    pub cols_per_block: usize,
    pub eq_rows_per_block: usize,
    pub ineq_rows_per_block: usize,
    /// Fraction of a block's columns present in each base row (at least two entries).
    pub density: f64,
    pub linking_cols: usize,
    /// Probability that a block row also holds one linking-column entry.
    pub linking_col_density: f64,
    pub linking_eq: usize,
    pub linking_ineq: usize,
    /// Blocks each linking row touches; 0 means all of them.
    pub linking_row_blocks: usize,
    /// Entries per touched block in a linking row.
    pub linking_row_nnz: usize,
    /// Rows of block 0 (over linking columns only).
    pub block0_eq: usize,
    pub block0_ineq: usize,
    /// Planted singleton equalities, as a fraction of the base rows.
    pub singleton_rows: f64,
    /// Planted scaled copies of base rows, as a fraction of the base rows.
    pub parallel_pairs: f64,
    /// Planted rows implied by the bounds, as a fraction of the base rows.
    pub redundant_rows: f64,
    /// Planted entries below the elimination threshold, as a fraction of the base nonzeros.
    pub tiny_entries: f64,
    pub seed: u64,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        GeneratorSpec {
            blocks: 4,
            cols_per_block: 40,
            eq_rows_per_block: 10,
            ineq_rows_per_block: 15,
            density: 0.15,
            linking_cols: 4,
            linking_col_density: 0.3,
            linking_eq: 2,
            linking_ineq: 2,
            linking_row_blocks: 0,
            linking_row_nnz: 2,
            block0_eq: 0,
            block0_ineq: 0,
            singleton_rows: 0.0,
            parallel_pairs: 0.0,
            redundant_rows: 0.0,
            tiny_entries: 0.0,
            seed: 1,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum GeneratorError {
    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),
    #[error("requested dimensions overflow: {0}")]
    Overflow(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum PlantKind {
    Singleton,
    Parallel,
    Redundant,
    Tiny,
}

impl PlantKind {
    pub fn name(self) -> &'static str {
        match self {
            PlantKind::Singleton => "singleton",
            PlantKind::Parallel => "parallel",
            PlantKind::Redundant => "redundant",
            PlantKind::Tiny => "tiny",
        }
    }
}

/// One planted structure.
#[derive(Clone, Debug, PartialEq)]
pub struct Plant {
    pub kind: PlantKind,
    pub row: RowRef,
    /// Fixed column (singleton) or tiny entry column.
    pub col: Option<ColRef>,
    /// Row the plant copies (parallel).
    pub source: Option<RowRef>,
    /// Nonzeros presolve can remove because of this plant alone.
    pub removable: usize,
}

impl fmt::Display for Plant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} row {}", self.kind.name(), self.row)?;
        if let Some(c) = self.col {
            write!(f, " col {c}")?;
        }
        if let Some(s) = self.source {
            write!(f, " of {s}")?;
        }
        write!(f, " removable {}", self.removable)
    }
}

#[derive(Clone, Debug)]
pub struct Generated {
    pub lp: BlockLp,
    pub plants: Vec<Plant>,
    /// Planted point, flattened block by block.
    pub point: Vec<f64>,
}

impl Generated {
    pub fn removable_nnz(&self) -> usize {
        self.plants.iter().map(|p| p.removable).sum()
    }

    /// One line per plant, preceded by totals.
    pub fn manifest(&self) -> String {
        let mut out = String::new();
        writeln!(out, "total_nnz {}", self.lp.total_nnz()).unwrap();
        writeln!(out, "removable_nnz {}", self.removable_nnz()).unwrap();
        for p in &self.plants {
            writeln!(out, "{p}").unwrap();
        }
        out
    }
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<(), GeneratorError> {
        let bad = |m: String| Err(GeneratorError::InvalidSpec(m));
        if self.blocks == 0 {
            return bad("at least one block required".into());
        }
        for (name, v) in [
            ("density", self.density),
            ("linking_col_density", self.linking_col_density),
            ("singleton_rows", self.singleton_rows),
            ("parallel_pairs", self.parallel_pairs),
            ("redundant_rows", self.redundant_rows),
            ("tiny_entries", self.tiny_entries),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} must lie in [0, 1], got {v}"));
            }
        }
        if self.cols_per_block < 2 && self.eq_rows_per_block + self.ineq_rows_per_block > 0 {
            return bad("rows need at least two columns per block".into());
        }
        if self.linking_row_blocks > self.blocks {
            return bad(format!("linking_row_blocks {} exceeds blocks {}", self.linking_row_blocks, self.blocks));
        }
        if (self.linking_eq + self.linking_ineq) > 0 && self.linking_row_nnz > self.cols_per_block {
            return bad("linking_row_nnz exceeds cols_per_block".into());
        }
        let limit = u32::MAX as u128;
        let base = self.eq_rows_per_block as u128 + self.ineq_rows_per_block as u128;
        // base rows plus at most one plant of each kind per base row
        let rows = base * 4;
        let checks = [
            ("columns", self.blocks as u128 * self.cols_per_block as u128 + self.linking_cols as u128),
            ("rows", self.blocks as u128 * rows),
            ("nonzeros", self.blocks as u128 * rows * (self.row_len() as u128 + 2)),
        ];
        for (what, n) in checks {
            if n > limit {
                return Err(GeneratorError::Overflow(format!("{what}: {n}")));
            }
        }
        Ok(())
    }

    fn row_len(&self) -> usize {
        ((self.density * self.cols_per_block as f64).round() as usize).clamp(2.min(self.cols_per_block), self.cols_per_block.max(1))
    }

    fn count(frac: f64, base: usize) -> usize {
        (frac * base as f64).round() as usize
    }
}

struct GenRow {
    kind: RowKind,
    link: Vec<(usize, f64)>,
    local: Vec<(usize, f64)>,
    lhs: f64,
    rhs: f64,
    plant: Option<PlantKind>,
}

impl GenRow {
    fn activity(&self, x0: &[f64], x: &[f64]) -> f64 {
        self.link.iter().map(|&(j, a)| a * x0[j]).sum::<f64>() + self.local.iter().map(|&(k, a)| a * x[k]).sum::<f64>()
    }

    fn max_activity(&self, upper: f64) -> f64 {
        // bounds are [0, upper] for every column
        self.link.iter().chain(&self.local).map(|&(_, a)| a.max(0.0) * upper).sum()
    }

    fn nnz(&self) -> usize {
        self.link.len() + self.local.len()
    }
}

const UPPER: f64 = 10.0;

fn coef(rng: &mut ChaCha8Rng) -> f64 {
    let m: f64 = rng.gen_range(0.5..2.0);
    if rng.gen_bool(0.5) {
        m
    } else {
        -m
    }
}

fn sorted(mut v: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    v.sort_by_key(|e| e.0);
    v
}

fn block_rng(seed: u64, block: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (block as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn set_sides(row: &mut GenRow, act: f64, rng: &mut ChaCha8Rng) {
    match row.kind {
        RowKind::Eq => {
            row.lhs = act;
            row.rhs = act;
        }
        RowKind::Ineq => match rng.gen_range(0..3) {
            0 => {
                row.lhs = f64::NEG_INFINITY;
                row.rhs = act + rng.gen_range(0.0..1.0);
            }
            1 => {
                row.lhs = act - rng.gen_range(0.0..1.0);
                row.rhs = f64::INFINITY;
            }
            _ => {
                row.lhs = act - rng.gen_range(0.0..1.0);
                row.rhs = act + rng.gen_range(0.0..1.0);
            }
        },
    }
}

/// Builds an instance from `spec`. Deterministic in `spec.seed`.
pub fn generate(spec: &GeneratorSpec) -> Result<Generated, GeneratorError> {
    spec.validate()?;
    let n = spec.blocks;
    let n0 = spec.linking_cols;
    let mut rng0 = block_rng(spec.seed, 0);
    let x0: Vec<f64> = (0..n0).map(|_| rng0.gen_range(1.0..9.0)).collect();

    let mut blocks = vec![Block::empty(n0, 0, 0, 0, 0, 0)];
    let mut plants = Vec::new();
    let mut points = vec![x0.clone()];
    let mut link_partials: Vec<Vec<f64>> = Vec::with_capacity(n);
    let n_link = spec.linking_eq + spec.linking_ineq;
    // which blocks each linking row touches
    let touched: Vec<BTreeSet<usize>> = (0..n_link)
        .map(|_| {
            if spec.linking_row_blocks == 0 {
                (1..=n).collect()
            } else {
                sample(&mut rng0, n, spec.linking_row_blocks).into_iter().map(|b| b + 1).collect()
            }
        })
        .collect();

    for b in 1..=n {
        let mut rng = block_rng(spec.seed, b);
        let (blk, x, block_plants, partial) = generate_block(spec, b, &x0, &touched, &mut rng);
        blocks.push(blk);
        points.push(x);
        plants.extend(block_plants);
        link_partials.push(partial);
    }

    // block 0 rows and slices
    let mut b0_rows: Vec<GenRow> = Vec::new();
    for (count, kind) in [(spec.block0_eq, RowKind::Eq), (spec.block0_ineq, RowKind::Ineq)] {
        for _ in 0..count {
            let len = 2.min(n0);
            let cols = sample(&mut rng0, n0, len).into_vec();
            let link = sorted(cols.into_iter().map(|j| (j, coef(&mut rng0))).collect());
            let mut row = GenRow { kind, link, local: vec![], lhs: 0.0, rhs: 0.0, plant: None };
            let act = row.activity(&x0, &[]);
            set_sides(&mut row, act, &mut rng0);
            b0_rows.push(row);
        }
    }
    let mut f0: Vec<Vec<(usize, f64)>> = Vec::with_capacity(n_link);
    for _ in 0..n_link {
        if n0 > 0 && rng0.gen_bool(0.5) {
            f0.push(vec![(rng0.gen_range(0..n0), coef(&mut rng0))]);
        } else {
            f0.push(vec![]);
        }
    }
    let mut linking = LinkingSides::default();
    for r in 0..n_link {
        let mut act: f64 = f0[r].iter().map(|&(j, a)| a * x0[j]).sum();
        for partial in &link_partials {
            act += partial[r];
        }
        if r < spec.linking_eq {
            linking.rhs_eq.push(act);
        } else {
            let slack = rng0.gen_range(0.0..1.0);
            linking.lhs_ineq.push(if rng0.gen_bool(0.5) { act - slack } else { f64::NEG_INFINITY });
            linking.rhs_ineq.push(act + slack);
        }
    }
    let blk0 = &mut blocks[0];
    let (eq0, ineq0): (Vec<&GenRow>, Vec<&GenRow>) = b0_rows.iter().partition(|r| r.kind == RowKind::Eq);
    blk0.a = SparseRowMatrix::from_rows(n0, eq0.iter().map(|r| r.link.clone()).collect()).expect("sorted rows");
    blk0.b = SparseRowMatrix::zeros(eq0.len(), 0);
    blk0.c = SparseRowMatrix::from_rows(n0, ineq0.iter().map(|r| r.link.clone()).collect()).expect("sorted rows");
    blk0.d = SparseRowMatrix::zeros(ineq0.len(), 0);
    blk0.rhs_eq = eq0.iter().map(|r| r.rhs).collect();
    blk0.lhs_ineq = ineq0.iter().map(|r| r.lhs).collect();
    blk0.rhs_ineq = ineq0.iter().map(|r| r.rhs).collect();
    blk0.f = SparseRowMatrix::from_rows(n0, f0[..spec.linking_eq].to_vec()).expect("sorted rows");
    blk0.g = SparseRowMatrix::from_rows(n0, f0[spec.linking_eq..].to_vec()).expect("sorted rows");
    blk0.lower = vec![0.0; n0];
    blk0.upper = vec![UPPER; n0];
    blk0.obj = (0..n0).map(|_| rng0.gen_range(-1.0..1.0)).collect();

    let lp = BlockLp { blocks, linking, objective_offset: 0.0 };
    debug_assert!(lp.validate().is_empty(), "{:?}", lp.validate().first());
    Ok(Generated { lp, plants, point: points.concat() })
}

type BlockOut = (Block, Vec<f64>, Vec<Plant>, Vec<f64>);

fn generate_block(
    spec: &GeneratorSpec,
    b: usize,
    x0: &[f64],
    touched: &[BTreeSet<usize>],
    rng: &mut ChaCha8Rng,
) -> BlockOut {
    let n = spec.cols_per_block;
    let n0 = spec.linking_cols;
    let x: Vec<f64> = (0..n).map(|_| rng.gen_range(1.0..9.0)).collect();
    let len = spec.row_len();
    let base_rows = spec.eq_rows_per_block + spec.ineq_rows_per_block;

    let random_row = |rng: &mut ChaCha8Rng, kind: RowKind| {
        let local = sorted(sample(rng, n, len).into_iter().map(|k| (k, coef(rng))).collect());
        let link = if n0 > 0 && rng.gen_bool(spec.linking_col_density) {
            vec![(rng.gen_range(0..n0), coef(rng))]
        } else {
            vec![]
        };
        GenRow { kind, link, local, lhs: 0.0, rhs: 0.0, plant: None }
    };
    let mut eq: Vec<GenRow> = (0..spec.eq_rows_per_block).map(|_| random_row(rng, RowKind::Eq)).collect();
    let mut ineq: Vec<GenRow> = (0..spec.ineq_rows_per_block).map(|_| random_row(rng, RowKind::Ineq)).collect();

    // tiny entries go into base rows before their sides are computed
    let n_tiny = GeneratorSpec::count(spec.tiny_entries, base_rows * len).min(base_rows * (n - len.min(n)));
    let mut tiny: Vec<(RowKind, usize, usize)> = Vec::new();
    let mut attempts = 0;
    while tiny.len() < n_tiny && attempts < 20 * n_tiny + 100 {
        attempts += 1;
        let r = rng.gen_range(0..base_rows);
        let k = rng.gen_range(0..n);
        let row = if r < eq.len() { &mut eq[r] } else { &mut ineq[r - eq.len()] };
        if row.local.iter().any(|e| e.0 == k) {
            continue;
        }
        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        row.local.push((k, sign * TINY_VALUE));
        row.local.sort_by_key(|e| e.0);
        let (kind, idx) = if r < eq.len() { (RowKind::Eq, r) } else { (RowKind::Ineq, r - eq.len()) };
        tiny.push((kind, idx, k));
    }
    for row in eq.iter_mut().chain(ineq.iter_mut()) {
        let act = row.activity(x0, &x);
        set_sides(row, act, rng);
    }

    // scaled copies of base rows
    let n_par = GeneratorSpec::count(spec.parallel_pairs, base_rows).min(base_rows);
    let mut par_sources: Vec<(RowKind, usize)> = Vec::new();
    for r in sample(rng, base_rows, n_par).into_vec() {
        let (kind, idx) = if r < eq.len() { (RowKind::Eq, r) } else { (RowKind::Ineq, r - eq.len()) };
        let src = if kind == RowKind::Eq { &eq[idx] } else { &ineq[idx] };
        let s = SCALES[rng.gen_range(0..SCALES.len())];
        let scale = |v: &[(usize, f64)]| v.iter().map(|&(c, a)| (c, a * s)).collect::<Vec<_>>();
        let margin = rng.gen_range(0.0..1.0);
        let (lo, hi) = if s > 0.0 { (src.lhs * s, src.rhs * s) } else { (src.rhs * s, src.lhs * s) };
        let (lhs, rhs) = match kind {
            RowKind::Eq => (lo, hi),
            RowKind::Ineq => (lo - margin, hi + margin),
        };
        let copy = GenRow { kind, link: scale(&src.link), local: scale(&src.local), lhs, rhs, plant: Some(PlantKind::Parallel) };
        par_sources.push((kind, idx));
        if kind == RowKind::Eq {
            eq.push(copy);
        } else {
            ineq.push(copy);
        }
    }

    // singleton equalities fixing distinct columns
    let n_single = GeneratorSpec::count(spec.singleton_rows, base_rows).min(n / 2);
    let single_cols = sample(rng, n, n_single).into_vec();
    for &k in &single_cols {
        let a = coef(rng);
        eq.push(GenRow { kind: RowKind::Eq, link: vec![], local: vec![(k, a)], lhs: a * x[k], rhs: a * x[k], plant: Some(PlantKind::Singleton) });
    }

    // rows implied by the bounds
    let n_red = GeneratorSpec::count(spec.redundant_rows, base_rows);
    for _ in 0..n_red {
        let mut row = random_row(rng, RowKind::Ineq);
        row.lhs = f64::NEG_INFINITY;
        row.rhs = row.max_activity(UPPER) + rng.gen_range(1.0..5.0);
        row.plant = Some(PlantKind::Redundant);
        ineq.push(row);
    }

    // linking-row slices
    let n_link = spec.linking_eq + spec.linking_ineq;
    let mut slices: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_link];
    let mut partial = vec![0.0; n_link];
    for r in 0..n_link {
        if !touched[r].contains(&b) {
            continue;
        }
        let cols = sample(rng, n, spec.linking_row_nnz.min(n)).into_vec();
        slices[r] = sorted(cols.into_iter().map(|k| (k, coef(rng))).collect());
        partial[r] = slices[r].iter().map(|&(k, a)| a * x[k]).sum();
    }

    // removable nonzeros: planted rows entirely, fixed columns and tiny entries elsewhere
    let fixed: BTreeSet<usize> = single_cols.iter().copied().collect();
    let mut plants = Vec::new();
    let row_ref = |kind: RowKind, idx: usize| RowRef::block(b, kind, idx);
    let col_ref = |k: usize| ColRef::Local { block: b, index: k };
    let fixed_hits = |k: usize| {
        eq.iter()
            .chain(ineq.iter())
            .filter(|r| r.plant.is_none() && r.local.iter().any(|e| e.0 == k))
            .count()
            + slices.iter().filter(|s| s.iter().any(|e| e.0 == k)).count()
    };
    for (idx, row) in eq.iter().enumerate() {
        match row.plant {
            Some(PlantKind::Parallel) => {
                let (kind, src) = par_sources[plants.iter().filter(|p: &&Plant| p.kind == PlantKind::Parallel).count()];
                plants.push(Plant {
                    kind: PlantKind::Parallel,
                    row: row_ref(RowKind::Eq, idx),
                    col: None,
                    source: Some(row_ref(kind, src)),
                    removable: row.nnz(),
                });
            }
            Some(PlantKind::Singleton) => {
                let k = row.local[0].0;
                plants.push(Plant {
                    kind: PlantKind::Singleton,
                    row: row_ref(RowKind::Eq, idx),
                    col: Some(col_ref(k)),
                    source: None,
                    removable: 1 + fixed_hits(k),
                });
            }
            _ => {}
        }
    }
    for (idx, row) in ineq.iter().enumerate() {
        match row.plant {
            Some(PlantKind::Parallel) => {
                let (kind, src) = par_sources[plants.iter().filter(|p: &&Plant| p.kind == PlantKind::Parallel).count()];
                plants.push(Plant {
                    kind: PlantKind::Parallel,
                    row: row_ref(RowKind::Ineq, idx),
                    col: None,
                    source: Some(row_ref(kind, src)),
                    removable: row.nnz(),
                });
            }
            Some(PlantKind::Redundant) => plants.push(Plant {
                kind: PlantKind::Redundant,
                row: row_ref(RowKind::Ineq, idx),
                col: None,
                source: None,
                removable: row.nnz(),
            }),
            _ => {}
        }
    }
    for &(kind, idx, k) in &tiny {
        let removable = usize::from(!fixed.contains(&k));
        plants.push(Plant { kind: PlantKind::Tiny, row: row_ref(kind, idx), col: Some(col_ref(k)), source: None, removable });
    }

    let mut blk = Block::empty(n0, n, 0, 0, 0, 0);
    blk.a = SparseRowMatrix::from_rows(n0, eq.iter().map(|r| r.link.clone()).collect()).expect("sorted rows");
    blk.b = SparseRowMatrix::from_rows(n, eq.iter().map(|r| r.local.clone()).collect()).expect("sorted rows");
    blk.c = SparseRowMatrix::from_rows(n0, ineq.iter().map(|r| r.link.clone()).collect()).expect("sorted rows");
    blk.d = SparseRowMatrix::from_rows(n, ineq.iter().map(|r| r.local.clone()).collect()).expect("sorted rows");
    blk.f = SparseRowMatrix::from_rows(n, slices[..spec.linking_eq].to_vec()).expect("sorted rows");
    blk.g = SparseRowMatrix::from_rows(n, slices[spec.linking_eq..].to_vec()).expect("sorted rows");
    blk.rhs_eq = eq.iter().map(|r| r.rhs).collect();
    blk.lhs_ineq = ineq.iter().map(|r| r.lhs).collect();
    blk.rhs_ineq = ineq.iter().map(|r| r.rhs).collect();
    blk.lower = vec![0.0; n];
    blk.upper = vec![UPPER; n];
    blk.obj = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    (blk, x, plants, partial)
}
