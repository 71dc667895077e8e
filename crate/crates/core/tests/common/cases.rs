//! Worked examples, runnable both as individual tests and as one catalogue.
//!
//! Each case panics on failure. Expected values are either forced by hand arithmetic or
//! computed by a small independent routine defined next to the case.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use blockpresolve::blocklp::{Block, LinkingSides};
use blockpresolve::cli::write_solution;
use blockpresolve::io::{self, generate, GeneratorSpec};
use blockpresolve::kernels::{
    apply_reductions, bound_tightening, model_cleanup, parallel_rows, singleton_rows, GlobalProposal, Kernel, KernelCtx,
    KernelOutput, LocalReduction, Scope,
};
use blockpresolve::oracle::{flatten, solve_reference, DenseLp, LpOutcome};
use blockpresolve::postsolve::{evaluate, postsolve, JournalEntry, JournalOp, JournalSink, ReductionJournal};
use blockpresolve::runtime::{distribute_weights, KernelToggles};
use blockpresolve::sync::{apply_sync, build_batch, exchange, LinkCounters, SyncBatch, Tolerances};
use blockpresolve::work::{decompose, reassemble, BlockMapping, Col, IndexMapping, Replica, WorkBlock};
use blockpresolve::{run_presolve, BlockLp, ColRef, PresolveConfig, PresolveError, RowKind, RowRef, SparseRowMatrix};

use super::*;

const INF: f64 = f64::INFINITY;

/// Expands `$m!` over every case name.
#[macro_export]
macro_rules! for_each_case {
    ($m:ident) => {
        $m! {
            well_formed_lp_validates,
            crossed_bounds_are_reported,
            eq_row_count_mismatch_is_reported,
            empty_lp_has_no_nonzeros,
            sparse_block_counts_its_entries,
            requested_entry_count_is_emitted,
            grouping_into_n_blocks_is_identity,
            grouping_preserves_nnz_and_feasible_points,
            grouping_to_one_block_gives_same_presolved_size,
            redundant_row_is_deleted,
            tiny_entry_is_deleted,
            unreachable_side_is_infeasible,
            equality_singleton_fixes_variable,
            negative_singleton_flips_to_lower_bound,
            linking_singletons_match_sequential_reference,
            sum_row_bounds_each_column,
            equality_is_solved_for_a_column,
            linking_sum_row_bounds_agree_across_workers,
            implied_parallel_row_is_deleted,
            inconsistent_parallel_equalities_are_infeasible,
            planted_parallel_pairs_are_deleted,
            fixing_shifts_rhs_and_removes_entry,
            deleting_linking_slice_buffers_delta,
            empty_reduction_list_changes_nothing,
            buffered_deletions_update_local_count,
            buffered_deletions_accumulate,
            zero_delta_changes_nothing,
            tightest_bound_wins,
            nearly_equal_fixings_merge,
            conflicting_fixings_are_infeasible,
            merged_deltas_update_cached_count,
            linking_fixing_substitutes_into_block_rows,
            empty_merged_batch_changes_nothing,
            one_block_per_worker,
            equal_blocks_split_in_halves,
            uneven_blocks_split_by_enumerated_cut,
            no_reduction_instance_is_a_fixpoint,
            singleton_equality_per_block_fixes_three_columns,
            nothing_deleted_gives_identity_mapping,
            deleted_row_is_reindexed,
            all_linking_rows_deleted,
            empty_journal_postsolves_to_itself,
            fixed_column_is_spliced_back,
            twenty_variable_instance_postsolves_feasibly,
            write_then_read_is_identity,
            duplicate_triplet_names_its_line,
            zero_blocks_are_rejected,
            unplanted_instance_loses_at_most_one_percent,
            same_seed_gives_identical_files,
            cli_quiet_instance_reports_unchanged_nnz,
            cli_contradictory_singletons_exit_two,
            cli_worker_count_does_not_change_output,
            cli_oracle_solution_verifies,
            cli_perturbed_solution_is_rejected,
            cli_empty_journal_verifies_original_solution,
            single_block_flattens_to_its_matrix,
            two_blocks_flatten_block_diagonally,
            grouped_flattening_has_same_optimum,
            lower_bound_is_the_optimum,
            equality_sum_optimum,
            simplex_matches_vertex_enumeration,
            thirty_variable_instance_is_solved_at_a_feasible_point,
        }
    };
}

macro_rules! table {
    ($($name:ident),* $(,)?) => {
        /// Every case with its name.
        pub const CASES: &[(&str, fn())] = &[$((stringify!($name), $name)),*];
    };
}
for_each_case!(table);

// ---------------------------------------------------------------- data model

/// Two blocks of one local column each, one linking column, one linking eq row.
fn two_block() -> BlockLp {
    let mut lp = BlockLp::empty(2, 1);
    lp.linking.rhs_eq = vec![3.0];
    lp.blocks[0].f = SparseRowMatrix::from_dense(1, &[&[1.0]]);
    for i in 1..=2 {
        let blk = &mut lp.blocks[i];
        *blk = Block::empty(1, 1, 1, 0, 1, 0);
        blk.a = SparseRowMatrix::from_dense(1, &[&[1.0]]);
        blk.b = SparseRowMatrix::from_dense(1, &[&[2.0]]);
        blk.f = SparseRowMatrix::from_dense(1, &[&[1.0]]);
        blk.rhs_eq = vec![4.0];
        blk.upper = vec![10.0];
    }
    lp
}

pub fn well_formed_lp_validates() {
    assert!(two_block().validate().is_empty(), "{:?}", two_block().validate());
}

pub fn crossed_bounds_are_reported() {
    let mut lp = two_block();
    lp.blocks[1].lower[0] = 5.0;
    lp.blocks[1].upper[0] = 3.0;
    let v = lp.validate();
    assert_eq!(v.len(), 1);
    assert_eq!(v[0].to_string(), "crossed bounds at local(1),0");
}

pub fn eq_row_count_mismatch_is_reported() {
    let mut lp = two_block();
    lp.blocks[1].a = SparseRowMatrix::zeros(3, 1);
    lp.blocks[1].b = SparseRowMatrix::from_dense(1, &[&[2.0], &[1.0]]);
    lp.blocks[1].rhs_eq = vec![4.0, 1.0];
    let msgs: Vec<String> = lp.validate().iter().map(|v| v.message.clone()).collect();
    assert!(msgs.iter().any(|m| m == "eq row-count mismatch in block 1"), "{msgs:?}");
}

pub fn empty_lp_has_no_nonzeros() {
    assert_eq!(BlockLp::empty(2, 0).total_nnz(), 0);
}

pub fn sparse_block_counts_its_entries() {
    let mut lp = BlockLp::empty(1, 0);
    lp.blocks[1] = Block::empty(0, 2, 2, 0, 0, 0);
    lp.blocks[1].b = SparseRowMatrix::from_dense(2, &[&[2.0, 0.0], &[0.0, 3.0]]);
    lp.blocks[1].rhs_eq = vec![0.0; 2];
    assert_eq!(lp.total_nnz(), 2);
}

pub fn grouping_into_n_blocks_is_identity() {
    let lp = two_block();
    assert_eq!(lp.group_blocks(2).unwrap(), lp);
}

// ---------------------------------------------------------------- kernels

/// One block with local inequality rows `(lhs, dense row, rhs)`.
fn ineq_block(rows: &[(f64, &[f64], f64)], lower: &[f64], upper: &[f64]) -> (Replica, WorkBlock) {
    let n = lower.len();
    let mut lp = BlockLp::empty(1, 0);
    let mut blk = Block::empty(0, n, 0, rows.len(), 0, 0);
    let dense: Vec<&[f64]> = rows.iter().map(|r| r.1).collect();
    blk.d = SparseRowMatrix::from_dense(n, &dense);
    blk.lhs_ineq = rows.iter().map(|r| r.0).collect();
    blk.rhs_ineq = rows.iter().map(|r| r.2).collect();
    blk.lower = lower.to_vec();
    blk.upper = upper.to_vec();
    lp.blocks[1] = blk;
    assert!(lp.validate().is_empty(), "{:?}", lp.validate());
    let (replica, mut blocks) = decompose(&lp);
    (replica, blocks.remove(0))
}

/// One block with local equality rows `(dense row, rhs)`.
fn eq_block(rows: &[(&[f64], f64)], lower: &[f64], upper: &[f64]) -> (Replica, WorkBlock) {
    let n = lower.len();
    let mut lp = BlockLp::empty(1, 0);
    let mut blk = Block::empty(0, n, rows.len(), 0, 0, 0);
    let dense: Vec<&[f64]> = rows.iter().map(|r| r.0).collect();
    blk.b = SparseRowMatrix::from_dense(n, &dense);
    blk.rhs_eq = rows.iter().map(|r| r.1).collect();
    blk.lower = lower.to_vec();
    blk.upper = upper.to_vec();
    lp.blocks[1] = blk;
    assert!(lp.validate().is_empty(), "{:?}", lp.validate());
    let (replica, mut blocks) = decompose(&lp);
    (replica, blocks.remove(0))
}

type KernelFn = fn(&Scope<'_>, &KernelCtx<'_>) -> Result<KernelOutput, PresolveError>;

fn run_on(kernel: KernelFn, (replica, block): &(Replica, WorkBlock)) -> Result<KernelOutput, PresolveError> {
    let tol = Tolerances::default();
    let ctx = KernelCtx { tol: &tol, cached_global: &[], hash_seed: 0 };
    kernel(&Scope::of_block(replica, block), &ctx)
}

fn x(i: usize) -> ColRef {
    ColRef::Local { block: 1, index: i }
}

fn assert_same_set(mut got: Vec<LocalReduction>, mut want: Vec<LocalReduction>) {
    let key = |r: &LocalReduction| format!("{r:?}");
    got.sort_by_key(key);
    want.sort_by_key(key);
    assert_eq!(got, want);
}

pub fn redundant_row_is_deleted() {
    let out = run_on(model_cleanup, &ineq_block(&[(-INF, &[1.0, 1.0], 10.0)], &[0.0, 0.0], &[3.0, 3.0])).unwrap();
    assert_eq!(out.local, vec![LocalReduction::DeleteRow(RowRef::block(1, RowKind::Ineq, 0))]);
}

pub fn tiny_entry_is_deleted() {
    let out = run_on(model_cleanup, &ineq_block(&[(-INF, &[1.0, 1e-12, 1.0], 4.0)], &[0.0; 3], &[3.0; 3])).unwrap();
    assert_eq!(out.local, vec![LocalReduction::DeleteEntry(RowRef::block(1, RowKind::Ineq, 0), x(1))]);
}

pub fn unreachable_side_is_infeasible() {
    let err = run_on(model_cleanup, &ineq_block(&[(8.0, &[1.0, 1.0], INF)], &[0.0, 0.0], &[3.0, 3.0])).unwrap_err();
    assert!(matches!(err, PresolveError::Infeasible { .. }), "{err}");
}

pub fn equality_singleton_fixes_variable() {
    let out = run_on(singleton_rows, &eq_block(&[(&[3.0], 6.0)], &[0.0], &[10.0])).unwrap();
    assert_same_set(
        out.local,
        vec![LocalReduction::FixVariable(x(0), 2.0), LocalReduction::DeleteRow(RowRef::block(1, RowKind::Eq, 0))],
    );
    assert!(out.global.is_empty());
}

pub fn negative_singleton_flips_to_lower_bound() {
    let out = run_on(singleton_rows, &ineq_block(&[(-INF, &[-2.0], 4.0)], &[-INF], &[10.0])).unwrap();
    assert_same_set(
        out.local,
        vec![LocalReduction::TightenLower(x(0), -2.0), LocalReduction::DeleteRow(RowRef::block(1, RowKind::Ineq, 0))],
    );
}

pub fn sum_row_bounds_each_column() {
    let out = run_on(bound_tightening, &ineq_block(&[(-INF, &[1.0, 1.0], 4.0)], &[0.0, 0.0], &[INF, INF])).unwrap();
    assert_eq!(out.local, vec![LocalReduction::TightenUpper(x(0), 4.0), LocalReduction::TightenUpper(x(1), 4.0)]);
}

pub fn equality_is_solved_for_a_column() {
    // 2 x1 - x2 = 0 with 0 <= x2 <= 2
    let out = run_on(bound_tightening, &eq_block(&[(&[2.0, -1.0], 0.0)], &[-INF, 0.0], &[INF, 2.0])).unwrap();
    assert_eq!(out.local, vec![LocalReduction::TightenLower(x(0), 0.0), LocalReduction::TightenUpper(x(0), 1.0)]);
}

pub fn implied_parallel_row_is_deleted() {
    let blk = ineq_block(&[(-INF, &[1.0, 2.0], 4.0), (-INF, &[2.0, 4.0], 10.0)], &[0.0, 0.0], &[INF, INF]);
    let out = run_on(parallel_rows, &blk).unwrap();
    assert_eq!(out.local, vec![LocalReduction::DeleteRow(RowRef::block(1, RowKind::Ineq, 1))]);
}

pub fn inconsistent_parallel_equalities_are_infeasible() {
    let blk = eq_block(&[(&[1.0, 1.0], 3.0), (&[2.0, 2.0], 7.0)], &[0.0, 0.0], &[INF, INF]);
    assert!(matches!(run_on(parallel_rows, &blk), Err(PresolveError::Infeasible { .. })));
}

/// One block with the equality row `3 x0 + x2 = 12` and a linking eq row over all three columns.
fn block_with_link_row() -> WorkBlock {
    let mut lp = BlockLp::empty(1, 0);
    let mut blk = Block::empty(0, 3, 1, 0, 1, 0);
    blk.b = SparseRowMatrix::from_dense(3, &[&[3.0, 0.0, 1.0]]);
    blk.rhs_eq = vec![12.0];
    blk.f = SparseRowMatrix::from_dense(3, &[&[1.0, 1.0, 1.0]]);
    blk.upper = vec![10.0; 3];
    lp.blocks[1] = blk;
    lp.blocks[0].f = SparseRowMatrix::zeros(1, 0);
    lp.linking.rhs_eq = vec![5.0];
    assert!(lp.validate().is_empty(), "{:?}", lp.validate());
    decompose(&lp).1.remove(0)
}

pub fn fixing_shifts_rhs_and_removes_entry() {
    let mut block = block_with_link_row();
    let mut journal = JournalSink::default();
    apply_reductions(&mut block, &mut journal, &[LocalReduction::FixVariable(x(0), 2.0)]).unwrap();
    assert_eq!(block.rows[0].rhs, 6.0);
    assert_eq!(block.rows[0].coef(Col::Local(0)), None);
}

pub fn deleting_linking_slice_buffers_delta() {
    let mut block = block_with_link_row();
    let mut journal = JournalSink::default();
    let row = RowRef::linking(RowKind::Eq, 0);
    let deltas = apply_reductions(&mut block, &mut journal, &[LocalReduction::DeleteRow(row)]).unwrap();
    assert_eq!(deltas, vec![(0, -3)]);
    let mut counters = LinkCounters { local_count: vec![3], block0_count: vec![0], cached_global: vec![3], pending_delta: vec![0] };
    for (r, d) in deltas {
        counters.buffer_delta(r, d).unwrap();
    }
    assert_eq!(counters.pending_delta, vec![-3]);
}

pub fn empty_reduction_list_changes_nothing() {
    let mut block = block_with_link_row();
    let before = block.clone();
    let mut journal = JournalSink::default();
    assert!(apply_reductions(&mut block, &mut journal, &[]).unwrap().is_empty());
    assert_eq!(block, before);
    assert!(journal.entries.is_empty());
}

// ---------------------------------------------------------------- counters and sync

fn counters(local: i64, cached: i64) -> LinkCounters {
    LinkCounters { local_count: vec![local], block0_count: vec![0], cached_global: vec![cached], pending_delta: vec![0] }
}

pub fn buffered_deletions_update_local_count() {
    let mut c = counters(5, 5);
    c.buffer_delta(0, -3).unwrap();
    assert_eq!((c.pending_delta[0], c.local_count[0], c.cached_global[0]), (-3, 2, 5));
}

pub fn buffered_deletions_accumulate() {
    let mut c = counters(5, 5);
    c.buffer_delta(0, -1).unwrap();
    c.buffer_delta(0, -1).unwrap();
    assert_eq!(c.pending_delta[0], -2);
}

pub fn zero_delta_changes_nothing() {
    let mut c = counters(5, 5);
    let before = c.clone();
    c.buffer_delta(0, 0).unwrap();
    assert_eq!(c, before);
}

fn proposal(p: GlobalProposal) -> SyncBatch {
    let mut b = SyncBatch::default();
    b.add_proposal(&p);
    b
}

pub fn tightest_bound_wins() {
    let a = proposal(GlobalProposal::LinkBoundChange { col: 0, lower: -INF, upper: 5.0 });
    let b = proposal(GlobalProposal::LinkBoundChange { col: 0, lower: -INF, upper: 3.0 });
    assert_eq!(exchange(&[a, b], &Tolerances::default()).unwrap().bound_changes[&0].1, 3.0);
}

pub fn nearly_equal_fixings_merge() {
    let a = proposal(GlobalProposal::LinkVarFix { col: 0, value: 2.0 });
    let b = proposal(GlobalProposal::LinkVarFix { col: 0, value: 2.0 + 1e-12 });
    let m = exchange(&[a, b], &Tolerances::default()).unwrap();
    assert_eq!(m.fixings.len(), 1);
    assert_eq!(m.fixings[&0].0, 2.0);
}

pub fn conflicting_fixings_are_infeasible() {
    let a = proposal(GlobalProposal::LinkVarFix { col: 0, value: 1.0 });
    let b = proposal(GlobalProposal::LinkVarFix { col: 0, value: 2.0 });
    assert!(matches!(exchange(&[a, b], &Tolerances::default()), Err(PresolveError::Infeasible { .. })));
}

/// One block whose equality row `4 x0 + y = 10` holds linking column 0.
fn linked_block_lp() -> BlockLp {
    let mut lp = BlockLp::empty(1, 1);
    lp.blocks[0].f = SparseRowMatrix::zeros(1, 1);
    lp.blocks[0].upper = vec![10.0];
    lp.blocks[0].obj = vec![3.0];
    let mut blk = Block::empty(1, 1, 1, 0, 1, 0);
    blk.a = SparseRowMatrix::from_dense(1, &[&[4.0]]);
    blk.b = SparseRowMatrix::from_dense(1, &[&[1.0]]);
    blk.rhs_eq = vec![10.0];
    blk.f = SparseRowMatrix::from_dense(1, &[&[1.0]]);
    blk.upper = vec![10.0];
    lp.blocks[1] = blk;
    lp.linking.rhs_eq = vec![1.0];
    assert!(lp.validate().is_empty(), "{:?}", lp.validate());
    lp
}

fn settle(replica: &mut Replica, blocks: &mut [WorkBlock], counters: &mut LinkCounters, journal: &mut JournalSink) {
    let tol = Tolerances::default();
    let batch = build_batch(replica, blocks, counters, &[]);
    let merged = exchange(&[batch], &tol).unwrap();
    apply_sync(replica, blocks, counters, &merged, journal, true, &tol).unwrap();
}

pub fn merged_deltas_update_cached_count() {
    let (mut replica, mut blocks) = decompose(&linked_block_lp());
    let mut c = counters(2, 5);
    let mut merged = SyncBatch::default();
    merged.nnz_deltas.insert(RowRef::linking(RowKind::Eq, 0), -3);
    let mut journal = JournalSink::default();
    apply_sync(&mut replica, &mut blocks, &mut c, &merged, &mut journal, true, &Tolerances::default()).unwrap();
    assert_eq!(c.cached_global, vec![2]);
}

pub fn linking_fixing_substitutes_into_block_rows() {
    let (mut replica, mut blocks) = decompose(&linked_block_lp());
    let mut c = LinkCounters::new(&replica, &blocks);
    let mut journal = JournalSink::default();
    settle(&mut replica, &mut blocks, &mut c, &mut journal);
    let tol = Tolerances::default();
    let merged = exchange(&[proposal(GlobalProposal::LinkVarFix { col: 0, value: 2.0 })], &tol).unwrap();
    apply_sync(&mut replica, &mut blocks, &mut c, &merged, &mut journal, true, &tol).unwrap();
    assert_eq!(blocks[0].rows[0].rhs, 2.0);
    assert_eq!(blocks[0].rows[0].coef(Col::Link(0)), None);
    assert!(!replica.col_alive[0]);
    // the linking row never held column 0, so its count is untouched
    assert_eq!(c.cached_global, vec![1]);
    assert_eq!(c.pending_delta, vec![0]);
}

pub fn empty_merged_batch_changes_nothing() {
    let (mut replica, mut blocks) = decompose(&linked_block_lp());
    let mut c = LinkCounters::new(&replica, &blocks);
    let mut journal = JournalSink::default();
    settle(&mut replica, &mut blocks, &mut c, &mut journal);
    let state = (replica.clone(), blocks.clone(), c.clone(), journal.entries.len());
    let mut empty = JournalSink::default();
    apply_sync(&mut replica, &mut blocks, &mut c, &SyncBatch::default(), &mut empty, true, &Tolerances::default()).unwrap();
    assert_eq!((replica, blocks, c, journal.entries.len()), state);
    assert!(empty.entries.is_empty());
}

// ---------------------------------------------------------------- runtime

pub fn one_block_per_worker() {
    assert_eq!(distribute_weights(&[5, 5, 5, 5], 4).ranges, vec![1..2, 2..3, 3..4, 4..5]);
}

pub fn equal_blocks_split_in_halves() {
    assert_eq!(distribute_weights(&[5, 5, 5, 5], 2).ranges, vec![1..3, 3..5]);
}

// ---------------------------------------------------------------- reassembly

/// Two blocks, two linking columns, one block-0 row and one linking eq row.
fn reassembly_sample() -> BlockLp {
    let mut lp = BlockLp::empty(2, 2);
    lp.blocks[0].a = SparseRowMatrix::from_dense(2, &[&[1.0, 1.0]]);
    lp.blocks[0].b = SparseRowMatrix::zeros(1, 0);
    lp.blocks[0].rhs_eq = vec![1.0];
    lp.blocks[0].f = SparseRowMatrix::from_dense(2, &[&[0.0, 2.0]]);
    lp.linking.rhs_eq = vec![5.0];
    for i in 1..=2 {
        let mut blk = Block::empty(2, 2, 1, 1, 1, 0);
        blk.a = SparseRowMatrix::from_dense(2, &[&[1.0, 0.0]]);
        blk.b = SparseRowMatrix::from_dense(2, &[&[1.0, -1.0]]);
        blk.d = SparseRowMatrix::from_dense(2, &[&[3.0, 1.0]]);
        blk.f = SparseRowMatrix::from_dense(2, &[&[0.0, i as f64]]);
        blk.rhs_eq = vec![0.5];
        blk.rhs_ineq = vec![9.0];
        lp.blocks[i] = blk;
    }
    assert!(lp.validate().is_empty(), "{:?}", lp.validate());
    lp
}

pub fn nothing_deleted_gives_identity_mapping() {
    let lp = reassembly_sample();
    let (replica, blocks) = decompose(&lp);
    let (back, mapping) = reassemble(&replica, &blocks);
    assert_eq!(back, lp);
    assert_eq!(mapping, IndexMapping::identity(&lp));
}

pub fn deleted_row_is_reindexed() {
    let lp = reassembly_sample();
    let (replica, mut blocks) = decompose(&lp);
    blocks[1].rows[0].alive = false;
    let (back, mapping) = reassemble(&replica, &blocks);
    assert_eq!(back.blocks[2].n_eq(), 0);
    assert!(mapping.blocks[2].eq.is_empty());
    assert_eq!(mapping.blocks[2].ineq, vec![0]);
    assert_eq!(mapping.blocks[1].eq, vec![0]);
    assert!(back.validate().is_empty());
}

pub fn all_linking_rows_deleted() {
    let lp = reassembly_sample();
    let (mut replica, mut blocks) = decompose(&lp);
    replica.link_rows[0].alive = false;
    for b in &mut blocks {
        b.slices[0].clear();
    }
    let (back, _) = reassemble(&replica, &blocks);
    assert_eq!(back.n_linking_eq() + back.n_linking_ineq(), 0);
    assert!(back.blocks.iter().all(|b| b.f.n_rows() == 0 && b.g.n_rows() == 0));
    assert!(back.validate().is_empty());
}

// ---------------------------------------------------------------- postsolve

fn three_col_lp() -> BlockLp {
    let mut lp = BlockLp::empty(1, 0);
    let mut blk = Block::empty(0, 3, 1, 0, 0, 0);
    blk.b = SparseRowMatrix::from_dense(3, &[&[1.0, 1.0, 1.0]]);
    blk.rhs_eq = vec![8.0];
    blk.upper = vec![10.0; 3];
    lp.blocks[1] = blk;
    lp
}

pub fn empty_journal_postsolves_to_itself() {
    let j = ReductionJournal::identity(&three_col_lp());
    assert_eq!(postsolve(&j, &[1.0, 2.0, 3.0]).unwrap(), vec![1.0, 2.0, 3.0]);
}

pub fn fixed_column_is_spliced_back() {
    let mut j = ReductionJournal::identity(&three_col_lp());
    j.entries.push(JournalEntry {
        round: 1,
        step: 0,
        kernel: Kernel::Singleton,
        block: 1,
        seq: 0,
        op: JournalOp::FixVariable { col: x(1), value: 2.0, entries: vec![] },
    });
    j.mapping.blocks[1] = BlockMapping { eq: vec![0], ineq: vec![], cols: vec![0, 2] };
    assert_eq!(postsolve(&j, &[1.0, 5.0]).unwrap(), vec![1.0, 2.0, 5.0]);
}

// ---------------------------------------------------------------- io

fn random_two_block() -> BlockLp {
    let spec = GeneratorSpec { blocks: 2, cols_per_block: 6, linking_cols: 2, block0_ineq: 1, tiny_entries: 0.1, seed: 3, ..Default::default() };
    generate(&spec).unwrap().lp
}

pub fn write_then_read_is_identity() {
    let lp = random_two_block();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("lp.blp");
    io::write(&lp, &path).unwrap();
    assert_eq!(io::read(&path).unwrap(), lp);
}

pub fn duplicate_triplet_names_its_line() {
    let text = canonical(&random_two_block());
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let b = lines.iter().position(|l| l.starts_with("B ")).unwrap();
    let nnz: usize = lines[b][2..].parse().unwrap();
    lines[b] = format!("B {}", nnz + 1);
    let dup = lines[b + 1].clone();
    lines.insert(b + 2, dup);
    let err = io::format::from_str(&lines.join("\n")).unwrap_err();
    assert!(err.message.contains("duplicate triplet"), "{err}");
    // the header is line b+1 and the copy sits two lines below it
    assert_eq!(err.line, b + 3);
}

pub fn zero_blocks_are_rejected() {
    let err = io::format::from_str("BLOCKLP v1 N 0\nEND\n").unwrap_err();
    assert!(err.message.contains("at least one block required"), "{err}");
}

pub fn same_seed_gives_identical_files() {
    let spec = GeneratorSpec { blocks: 3, parallel_pairs: 0.2, singleton_rows: 0.1, seed: 17, ..Default::default() };
    assert_eq!(canonical(&generate(&spec).unwrap().lp), canonical(&generate(&spec).unwrap().lp));
}

// ---------------------------------------------------------------- command line

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_blockpresolve")).args(args).output().expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

fn save(dir: &Path, name: &str, lp: &BlockLp) -> PathBuf {
    let p = dir.join(name);
    io::write(lp, &p).unwrap();
    p
}

fn quiet_lp() -> BlockLp {
    let blk = DenseBlock {
        ineq: vec![(vec![], vec![1.0, 1.0], -INF, 15.0)],
        lower: vec![0.0; 2],
        upper: vec![10.0; 2],
        obj: vec![-1.0, -2.0],
        ..Default::default()
    };
    build_lp(vec![DenseBlock::default(), blk.clone(), blk], vec![], vec![])
}

fn oracle_point(lp: &BlockLp) -> Vec<f64> {
    match solve_reference(&flatten(lp).unwrap()).unwrap() {
        LpOutcome::Optimal { x, .. } => x,
        other => panic!("{other:?}"),
    }
}

pub fn cli_quiet_instance_reports_unchanged_nnz() {
    let dir = tempfile::tempdir().unwrap();
    let input = save(dir.path(), "in.blp", &quiet_lp());
    let o = bin(&["presolve", s(&input)]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
    assert!(text(&o.stdout).starts_with("nnz 4 -> 4 "), "{}", text(&o.stdout));
}

pub fn cli_contradictory_singletons_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let blk = DenseBlock {
        eq: vec![(vec![], vec![1.0, 0.0], 1.0), (vec![], vec![2.0, 0.0], 4.0)],
        lower: vec![0.0; 2],
        upper: vec![10.0; 2],
        ..Default::default()
    };
    let input = save(dir.path(), "in.blp", &build_lp(vec![DenseBlock::default(), blk], vec![], vec![]));
    let o = bin(&["presolve", s(&input)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o.stderr).contains("block(1),eq,"), "{}", text(&o.stderr));
}

pub fn cli_worker_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let spec = GeneratorSpec { blocks: 8, singleton_rows: 0.1, parallel_pairs: 0.1, redundant_rows: 0.1, tiny_entries: 0.02, ..Default::default() };
    let input = save(dir.path(), "in.blp", &generate(&spec).unwrap().lp);
    let (a, b) = (dir.path().join("a.blp"), dir.path().join("b.blp"));
    assert_eq!(bin(&["presolve", s(&input), "--workers", "1", "--out", s(&a)]).status.code(), Some(0));
    assert_eq!(bin(&["presolve", s(&input), "--workers", "8", "--out", s(&b)]).status.code(), Some(0));
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

/// Presolves a generated 20-variable instance; returns the original, the journal and an
/// oracle solution of the presolved problem.
fn presolve_and_solve(dir: &Path) -> (BlockLp, PathBuf, PathBuf, Vec<f64>) {
    let spec = GeneratorSpec {
        blocks: 2,
        cols_per_block: 8,
        eq_rows_per_block: 3,
        ineq_rows_per_block: 4,
        density: 0.4,
        linking_cols: 4,
        singleton_rows: 0.2,
        parallel_pairs: 0.3,
        ..Default::default()
    };
    let lp = generate(&spec).unwrap().lp;
    assert_eq!(lp.n_cols_total(), 20);
    let input = save(dir, "in.blp", &lp);
    let (out, journal) = (dir.join("out.blp"), dir.join("j.txt"));
    let o = bin(&["presolve", s(&input), "--out", s(&out), "--journal", s(&journal)]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
    let x = oracle_point(&io::read(&out).unwrap());
    (lp, input, journal, x)
}

pub fn cli_oracle_solution_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let (_, input, journal, x) = presolve_and_solve(dir.path());
    let sol = dir.path().join("x.txt");
    write_solution(&sol, &x).unwrap();
    let o = bin(&["verify", s(&input), "--journal", s(&journal), "--solution", s(&sol)]);
    assert_eq!(o.status.code(), Some(0), "{}{}", text(&o.stdout), text(&o.stderr));
}

pub fn cli_perturbed_solution_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let (_, input, journal, mut x) = presolve_and_solve(dir.path());
    // the first column of a presolved equality row still appears in that original row,
    // so moving it by one breaks the row
    let presolved = io::read(&dir.path().join("out.blp")).unwrap();
    let blk = (1..=presolved.n_blocks()).find(|&b| presolved.blocks[b].b.nnz() > 0).expect("an equality row survives");
    let r = (0..presolved.blocks[blk].n_eq()).find(|&r| !presolved.blocks[blk].b.row(r).is_empty()).unwrap();
    let k = presolved.blocks[blk].b.row(r)[0].0;
    x[presolved.col_offset(blk) + k] += 1.0;
    let sol = dir.path().join("x.txt");
    write_solution(&sol, &x).unwrap();
    let o = bin(&["verify", s(&input), "--journal", s(&journal), "--solution", s(&sol)]);
    assert_eq!(o.status.code(), Some(2), "{}", text(&o.stdout));
    let violation: f64 = text(&o.stdout).split_whitespace().nth(1).unwrap().parse().unwrap();
    assert!(violation > 0.0);
}

pub fn cli_empty_journal_verifies_original_solution() {
    let dir = tempfile::tempdir().unwrap();
    let lp = quiet_lp();
    let input = save(dir.path(), "in.blp", &lp);
    let journal = dir.path().join("j.txt");
    let mut args = vec!["presolve", s(&input), "--journal", s(&journal)];
    for k in Kernel::ALL {
        args.extend(["--disable", k.name()]);
    }
    assert_eq!(bin(&args).status.code(), Some(0));
    assert!(io::journal::read(&journal).unwrap().is_empty());
    let sol = dir.path().join("x.txt");
    write_solution(&sol, &oracle_point(&lp)).unwrap();
    let o = bin(&["verify", s(&input), "--journal", s(&journal), "--solution", s(&sol)]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
}

// ---------------------------------------------------------------- oracle

pub fn single_block_flattens_to_its_matrix() {
    let mut lp = BlockLp::empty(1, 0);
    let mut blk = Block::empty(0, 2, 2, 0, 0, 0);
    blk.b = SparseRowMatrix::from_dense(2, &[&[2.0, 0.0], &[1.0, 3.0]]);
    blk.rhs_eq = vec![1.0, 2.0];
    lp.blocks[1] = blk;
    let d = flatten(&lp).unwrap();
    assert_eq!(d.rows, vec![vec![2.0, 0.0], vec![1.0, 3.0]]);
    assert_eq!((d.lhs, d.rhs), (vec![1.0, 2.0], vec![1.0, 2.0]));
}

pub fn two_blocks_flatten_block_diagonally() {
    let mut lp = BlockLp::empty(2, 1);
    lp.blocks[0].upper = vec![1.0];
    lp.blocks[0].g = SparseRowMatrix::from_dense(1, &[&[5.0]]);
    for i in 1..=2 {
        let mut b = Block::empty(1, 1, 1, 0, 0, 1);
        b.a = SparseRowMatrix::from_dense(1, &[&[i as f64]]);
        b.b = SparseRowMatrix::from_dense(1, &[&[10.0 * i as f64]]);
        b.g = SparseRowMatrix::from_dense(1, &[&[1.0]]);
        b.rhs_eq = vec![0.0];
        b.upper = vec![INF];
        lp.blocks[i] = b;
    }
    lp.linking = LinkingSides { rhs_eq: vec![], lhs_ineq: vec![-INF], rhs_ineq: vec![7.0] };
    assert!(lp.validate().is_empty(), "{:?}", lp.validate());
    let d = flatten(&lp).unwrap();
    assert_eq!(d.rows, vec![vec![1.0, 10.0, 0.0], vec![2.0, 0.0, 20.0], vec![5.0, 1.0, 1.0]]);
    assert_eq!(d.rhs, vec![0.0, 0.0, 7.0]);
}

fn dense(c: Vec<f64>, rows: Vec<Vec<f64>>, lhs: Vec<f64>, rhs: Vec<f64>, n: usize) -> DenseLp {
    DenseLp { c, offset: 0.0, rows, lhs, rhs, lower: vec![0.0; n], upper: vec![INF; n] }
}

pub fn lower_bound_is_the_optimum() {
    // min x s.t. x >= 3
    let lp = dense(vec![1.0], vec![vec![1.0]], vec![3.0], vec![INF], 1);
    assert_eq!(solve_reference(&lp).unwrap().value(), Some(3.0));
}

pub fn equality_sum_optimum() {
    let lp = dense(vec![1.0, 1.0], vec![vec![1.0, 1.0]], vec![2.0], vec![2.0], 2);
    assert_eq!(solve_reference(&lp).unwrap().value(), Some(2.0));
}

// ---------------------------------------------------------------- derived examples

fn only(kernels: &[Kernel]) -> KernelToggles {
    let mut t = KernelToggles::default();
    for k in Kernel::ALL {
        t.set(k, kernels.contains(&k));
    }
    t
}

fn flat_index(lp: &BlockLp, c: ColRef) -> usize {
    match c {
        ColRef::Linking(j) => j,
        ColRef::Local { block, index } => lp.col_offset(block) + index,
    }
}

fn fixings(lp: &BlockLp, cfg: &PresolveConfig) -> Vec<(usize, f64)> {
    let p = run_presolve(lp, cfg).unwrap();
    let mut out: Vec<(usize, f64)> = p
        .journal
        .entries
        .iter()
        .filter_map(|e| match &e.op {
            JournalOp::FixVariable { col, value, .. } => Some((flat_index(lp, *col), *value)),
            _ => None,
        })
        .collect();
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

/// Sequential dense singleton elimination: repeatedly fixes the column of an equality row
/// with one remaining nonzero and substitutes it everywhere.
fn reference_singletons(d: &DenseLp) -> Vec<(usize, f64)> {
    let mut rows = d.rows.clone();
    let mut rhs = d.rhs.clone();
    let mut lhs = d.lhs.clone();
    let mut alive = vec![true; rows.len()];
    let mut fixed = Vec::new();
    loop {
        let hit = (0..rows.len()).find(|&r| {
            alive[r] && lhs[r] == rhs[r] && rows[r].iter().filter(|v| **v != 0.0).count() == 1
        });
        let Some(r) = hit else { break };
        let c = rows[r].iter().position(|v| *v != 0.0).unwrap();
        let v = rhs[r] / rows[r][c];
        alive[r] = false;
        for q in 0..rows.len() {
            let a = rows[q][c];
            if a != 0.0 {
                lhs[q] -= a * v;
                rhs[q] -= a * v;
                rows[q][c] = 0.0;
            }
        }
        fixed.push((c, v));
    }
    fixed.sort_by(|a, b| a.0.cmp(&b.0));
    fixed
}

fn three_block_singletons() -> BlockLp {
    // each block: 2 x1 = 2i (fixes x1 = i) and x1 + x2 + x3 <= 20, bounds [0, 10]
    let blk = |i: f64| DenseBlock {
        eq: vec![(vec![], vec![2.0, 0.0, 0.0], 2.0 * i)],
        ineq: vec![(vec![], vec![1.0, 1.0, 1.0], -INF, 20.0)],
        lower: vec![0.0; 3],
        upper: vec![10.0; 3],
        obj: vec![1.0, -1.0, 0.5],
        ..Default::default()
    };
    build_lp(vec![DenseBlock::default(), blk(1.0), blk(2.0), blk(3.0)], vec![], vec![])
}

pub fn singleton_equality_per_block_fixes_three_columns() {
    let lp = three_block_singletons();
    let p = run_presolve(&lp, &PresolveConfig::default()).unwrap();
    // hand count: each block keeps the inequality without x1 (2 entries)
    assert_eq!(p.stats.nnz_before, 12);
    assert_eq!(p.stats.nnz_after, 6);
    assert_eq!(p.stats.total_cols_deleted(), 3);
    assert_eq!(p.stats.total_rows_deleted(), 3);
    assert_eq!(fixings(&lp, &PresolveConfig::default()), vec![(0, 1.0), (3, 2.0), (6, 3.0)]);
    let three = run_presolve(&lp, &PresolveConfig { workers: 3, ..Default::default() }).unwrap();
    assert_eq!(canonical(&three.lp), canonical(&p.lp));
}

pub fn linking_singletons_match_sequential_reference() {
    // linking eq 0: 5 x0 = 10 (block-0 slice only); linking eq 1: 4 y(2,1) = 8 (block 2 only)
    let b0 = DenseBlock {
        f: vec![vec![5.0, 0.0], vec![0.0, 0.0]],
        lower: vec![0.0, 0.0],
        upper: vec![10.0, 10.0],
        ..Default::default()
    };
    let blk = |with_slice: bool| DenseBlock {
        eq: vec![(vec![1.0, 1.0], vec![1.0, -1.0], 3.0)],
        ineq: vec![(vec![0.0, 1.0], vec![1.0, 1.0], -INF, 25.0)],
        f: vec![vec![0.0, 0.0], if with_slice { vec![0.0, 4.0] } else { vec![0.0, 0.0] }],
        lower: vec![0.0; 2],
        upper: vec![10.0; 2],
        ..Default::default()
    };
    let lp = build_lp(vec![b0, blk(false), blk(true), blk(false)], vec![10.0, 8.0], vec![]);
    let reference = reference_singletons(&flatten(&lp).unwrap());
    assert_eq!(reference, vec![(0, 2.0), (5, 2.0)]);
    for workers in [1, 3] {
        let cfg = PresolveConfig { workers, kernels: only(&[Kernel::Singleton]), ..Default::default() };
        assert_eq!(fixings(&lp, &cfg), reference, "workers {workers}");
        let p = run_presolve(&lp, &cfg).unwrap();
        assert_eq!(p.lp.n_linking_eq(), 0);
    }
}

pub fn linking_sum_row_bounds_agree_across_workers() {
    // x(1,0) + x(2,0) + x(3,0) <= 4, all x >= 0 with no upper bound
    let blk = DenseBlock {
        ineq: vec![(vec![], vec![1.0, -1.0], -INF, 50.0)],
        g: vec![vec![1.0, 0.0]],
        lower: vec![0.0; 2],
        upper: vec![INF; 2],
        ..Default::default()
    };
    let lp = build_lp(vec![DenseBlock::default(), blk.clone(), blk.clone(), blk], vec![], vec![(-INF, 4.0)]);
    // reference: 4 minus the minimum activity of the other two terms
    let expected_upper = 4.0 - 0.0 - 0.0;
    let cfg = |w| PresolveConfig { workers: w, kernels: only(&[Kernel::BoundTightening]), ..Default::default() };
    let one = run_presolve(&lp, &cfg(1)).unwrap();
    for b in 1..=3 {
        assert_eq!(one.lp.blocks[b].upper[0], expected_upper);
    }
    let three = run_presolve(&lp, &cfg(3)).unwrap();
    assert_eq!(canonical(&three.lp), canonical(&one.lp));
}

pub fn planted_parallel_pairs_are_deleted() {
    let spec = GeneratorSpec {
        blocks: 1,
        cols_per_block: 60,
        eq_rows_per_block: 70,
        ineq_rows_per_block: 100,
        density: 0.1,
        linking_cols: 0,
        linking_eq: 0,
        linking_ineq: 0,
        parallel_pairs: 30.0 / 170.0,
        seed: 11,
        ..Default::default()
    };
    let g = generate(&spec).unwrap();
    assert_eq!(g.lp.n_rows_total(), 200);
    let planted = g.plants.iter().filter(|p| p.kind == blockpresolve::io::PlantKind::Parallel).count();
    assert_eq!(planted, 30);
    let cfg = PresolveConfig { kernels: only(&[Kernel::Parallel]), ..Default::default() };
    let p = run_presolve(&g.lp, &cfg).unwrap();
    let deletions = p.journal.entries.iter().filter(|e| matches!(e.op, JournalOp::DeleteRow { .. })).count();
    assert!(deletions >= 30, "{deletions}");
}

pub fn uneven_blocks_split_by_enumerated_cut() {
    let w = [100usize, 1, 1];
    // both contiguous cuts of three blocks into two parts
    let best = (1..3).min_by_key(|&cut| w[..cut].iter().sum::<usize>().max(w[cut..].iter().sum())).unwrap();
    assert_eq!(best, 1);
    assert_eq!(distribute_weights(&w, 2).ranges, vec![1..best + 1, best + 1..4]);
    assert_eq!(distribute_weights(&w, 2).ranges, vec![1..2, 2..4]);
}

fn grid_feasible(lp: &BlockLp, levels: &[f64]) -> Vec<bool> {
    let n = lp.n_cols_total();
    let mut out = Vec::new();
    let mut idx = vec![0usize; n];
    loop {
        let x: Vec<f64> = idx.iter().map(|&i| levels[i]).collect();
        out.push(evaluate(lp, &x).unwrap().max_violation <= 1e-12);
        let mut k = 0;
        while k < n {
            idx[k] += 1;
            if idx[k] < levels.len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == n {
            return out;
        }
    }
}

fn six_variable_lp() -> BlockLp {
    let b0 = DenseBlock { lower: vec![0.0; 2], upper: vec![2.0; 2], g: vec![vec![1.0, 1.0]], ..Default::default() };
    let blk = |a: f64| DenseBlock {
        ineq: vec![(vec![a, -1.0], vec![1.0], -1.0, 2.0)],
        g: vec![vec![1.0]],
        lower: vec![0.0],
        upper: vec![2.0],
        obj: vec![-a],
        ..Default::default()
    };
    build_lp(vec![b0, blk(1.0), blk(-1.0), blk(1.0), blk(2.0)], vec![], vec![(-INF, 5.0)])
}

pub fn grouping_preserves_nnz_and_feasible_points() {
    let lp = six_variable_lp();
    assert_eq!(lp.n_cols_total(), 6);
    let grouped = lp.group_blocks(2).unwrap();
    assert_eq!(grouped.n_blocks(), 2);
    assert!(grouped.blocks[1..].iter().all(|b| b.n_cols() == 2));
    assert_eq!(grouped.total_nnz(), lp.total_nnz());
    let levels = [0.0, 1.0, 2.0];
    let before = grid_feasible(&lp, &levels);
    assert!(before.iter().any(|f| *f) && before.iter().any(|f| !*f));
    assert_eq!(grid_feasible(&grouped, &levels), before);
}

pub fn grouping_to_one_block_gives_same_presolved_size() {
    let spec = GeneratorSpec { blocks: 4, singleton_rows: 0.1, parallel_pairs: 0.1, redundant_rows: 0.1, ..Default::default() };
    let lp = generate(&spec).unwrap().lp;
    let one = lp.group_blocks(1).unwrap();
    let a = run_presolve(&lp, &PresolveConfig::default()).unwrap();
    let b = run_presolve(&one, &PresolveConfig::default()).unwrap();
    assert_eq!(a.stats.nnz_after, b.stats.nnz_after);
}

pub fn grouped_flattening_has_same_optimum() {
    let spec = GeneratorSpec { blocks: 3, cols_per_block: 8, eq_rows_per_block: 2, ineq_rows_per_block: 4, density: 0.4, ..Default::default() };
    let lp = generate(&spec).unwrap().lp;
    let a = solve_reference(&flatten(&lp).unwrap()).unwrap().value().unwrap();
    let b = solve_reference(&flatten(&lp.group_blocks(1).unwrap()).unwrap()).unwrap().value().unwrap();
    assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0), "{a} {b}");
}

pub fn requested_entry_count_is_emitted() {
    let spec = GeneratorSpec {
        blocks: 10,
        cols_per_block: 100,
        eq_rows_per_block: 40,
        ineq_rows_per_block: 60,
        density: 0.1,
        linking_cols: 0,
        linking_eq: 0,
        linking_ineq: 0,
        ..Default::default()
    };
    let lp = generate(&spec).unwrap().lp;
    let text = canonical(&lp);
    // triplet lines are the only lines of three tokens starting with an index
    let triplets = text
        .lines()
        .filter(|l| l.split_whitespace().count() == 3 && l.split_whitespace().next().unwrap().parse::<usize>().is_ok())
        .count();
    assert_eq!(triplets, 10_000);
    assert_eq!(lp.total_nnz(), 10_000);
}

pub fn unplanted_instance_loses_at_most_one_percent() {
    let spec = GeneratorSpec { blocks: 8, cols_per_block: 300, eq_rows_per_block: 100, ineq_rows_per_block: 150, density: 0.02, ..Default::default() };
    let lp = generate(&spec).unwrap().lp;
    let p = run_presolve(&lp, &PresolveConfig::default()).unwrap();
    let removed = (p.stats.nnz_before - p.stats.nnz_after) as f64 / p.stats.nnz_before as f64;
    assert!(removed <= 0.01, "{removed}");
}

pub fn no_reduction_instance_is_a_fixpoint() {
    let blk = DenseBlock {
        ineq: vec![(vec![], vec![1.0, 1.0], -INF, 15.0), (vec![], vec![1.0, -1.0], -5.0, INF)],
        g: vec![vec![1.0, 0.0]],
        lower: vec![0.0; 2],
        upper: vec![10.0; 2],
        obj: vec![1.0, 2.0],
        ..Default::default()
    };
    let lp = build_lp(vec![DenseBlock::default(), blk.clone(), blk], vec![], vec![(-INF, 15.0)]);
    let p = run_presolve(&lp, &PresolveConfig::default()).unwrap();
    assert_eq!(canonical(&p.lp), canonical(&lp));
    assert_eq!(p.stats.rounds, 1);
    assert!(p.journal.is_empty());
}

pub fn twenty_variable_instance_postsolves_feasibly() {
    let spec = GeneratorSpec {
        blocks: 2,
        cols_per_block: 8,
        eq_rows_per_block: 2,
        ineq_rows_per_block: 4,
        density: 0.4,
        linking_cols: 4,
        singleton_rows: 0.3,
        parallel_pairs: 0.3,
        redundant_rows: 0.2,
        ..Default::default()
    };
    let lp = generate(&spec).unwrap().lp;
    assert_eq!(lp.n_cols_total(), 20);
    let p = run_presolve(&lp, &PresolveConfig::default()).unwrap();
    assert!(!p.journal.is_empty());
    let LpOutcome::Optimal { x, value } = solve_reference(&flatten(&p.lp).unwrap()).unwrap() else { panic!("feasible by construction") };
    let lifted = postsolve(&p.journal, &x).unwrap();
    let report = evaluate(&lp, &lifted).unwrap();
    assert!(report.max_violation <= 1e-8, "{report:?}");
    assert!((report.objective - value).abs() <= 1e-9 * value.abs().max(1.0));
}

/// Minimum of `c·x` over the vertices of `{A x <= b, 0 <= x <= u}` by enumerating every
/// choice of `n` tight constraints.
fn vertex_enumeration(c: &[f64], a: &[Vec<f64>], b: &[f64], u: &[f64]) -> Option<f64> {
    let n = c.len();
    let mut planes: Vec<(Vec<f64>, f64)> = a.iter().cloned().zip(b.iter().copied()).collect();
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        planes.push((e.clone(), 0.0));
        planes.push((e, u[j]));
    }
    let m = planes.len();
    let mut best: Option<f64> = None;
    let mut pick: Vec<usize> = (0..n).collect();
    loop {
        // solve the n x n system by Gaussian elimination with partial pivoting
        let mut mat: Vec<Vec<f64>> = pick.iter().map(|&i| {
            let mut r = planes[i].0.clone();
            r.push(planes[i].1);
            r
        }).collect();
        let mut ok = true;
        for col in 0..n {
            let p = (col..n).max_by(|&x, &y| mat[x][col].abs().total_cmp(&mat[y][col].abs())).unwrap();
            if mat[p][col].abs() < 1e-12 {
                ok = false;
                break;
            }
            mat.swap(col, p);
            for r in 0..n {
                if r != col {
                    let f = mat[r][col] / mat[col][col];
                    for k in col..=n {
                        mat[r][k] -= f * mat[col][k];
                    }
                }
            }
        }
        if ok {
            let x: Vec<f64> = (0..n).map(|i| mat[i][n] / mat[i][i]).collect();
            let feasible = x.iter().zip(u).all(|(v, u)| *v >= -1e-9 && *v <= u + 1e-9)
                && a.iter().zip(b).all(|(row, b)| row.iter().zip(&x).map(|(p, q)| p * q).sum::<f64>() <= b + 1e-9);
            if feasible {
                let v: f64 = c.iter().zip(&x).map(|(p, q)| p * q).sum();
                best = Some(best.map_or(v, |b: f64| b.min(v)));
            }
        }
        // next combination
        let mut i = n;
        while i > 0 && pick[i - 1] == m - n + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return best;
        }
        pick[i - 1] += 1;
        for k in i..n {
            pick[k] = pick[k - 1] + 1;
        }
    }
}

pub fn simplex_matches_vertex_enumeration() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let n = 5;
        let rows = 4;
        let c: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let a: Vec<Vec<f64>> = (0..rows).map(|_| (0..n).map(|_| rng.gen_range(-1.0..2.0)).collect()).collect();
        let b: Vec<f64> = (0..rows).map(|_| rng.gen_range(1.0..6.0)).collect();
        let u = vec![3.0; n];
        let expected = vertex_enumeration(&c, &a, &b, &u).expect("origin is feasible");
        let lp = DenseLp {
            c: c.clone(),
            offset: 0.0,
            rows: a.clone(),
            lhs: vec![-INF; rows],
            rhs: b.clone(),
            lower: vec![0.0; n],
            upper: u.clone(),
        };
        let got = solve_reference(&lp).unwrap().value().unwrap();
        assert!((got - expected).abs() <= 1e-9 * expected.abs().max(1.0), "{got} {expected}");
    }
}

pub fn thirty_variable_instance_is_solved_at_a_feasible_point() {
    let spec = GeneratorSpec { blocks: 3, cols_per_block: 9, linking_cols: 3, eq_rows_per_block: 3, ineq_rows_per_block: 5, density: 0.4, ..Default::default() };
    let lp = generate(&spec).unwrap().lp;
    assert_eq!(lp.n_cols_total(), 30);
    let LpOutcome::Optimal { x, value } = solve_reference(&flatten(&lp).unwrap()).unwrap() else { panic!() };
    let report = evaluate(&lp, &x).unwrap();
    assert!(report.max_violation <= 1e-9);
    assert!((report.objective - value).abs() <= 1e-9 * value.abs().max(1.0));
}
