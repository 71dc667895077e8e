//! Flat `key = value` documents for presolve statistics and problem summaries.

use std::fmt::Write as _;

use crate::blocklp::BlockLp;
use crate::kernels::Kernel;
use crate::runtime::PresolveStats;

fn secs(d: std::time::Duration) -> String {
    format!("{:.6}", d.as_secs_f64())
}

/// Statistics of one presolve run. Sync lines read
/// `sync.<n> = <round> <kernel> <payload bytes> <seconds>`.
pub fn presolve_doc(instance: &str, s: &PresolveStats) -> String {
    let mut out = String::new();
    let mut kv = |k: &str, v: String| writeln!(out, "{k} = {v}").unwrap();
    kv("instance", instance.to_string());
    kv("blocks", s.n_blocks.to_string());
    kv("workers_requested", s.workers_requested.to_string());
    kv("workers", s.workers.to_string());
    kv("nnz_before", s.nnz_before.to_string());
    kv("nnz_after", s.nnz_after.to_string());
    let pct = if s.nnz_before == 0 { 0.0 } else { 100.0 * (s.nnz_before - s.nnz_after) as f64 / s.nnz_before as f64 };
    kv("nnz_removed_pct", format!("{pct:.3}"));
    kv("rows_before", s.rows_before.to_string());
    kv("rows_after", s.rows_after.to_string());
    kv("cols_before", s.cols_before.to_string());
    kv("cols_after", s.cols_after.to_string());
    kv("rounds", s.rounds.to_string());
    for k in Kernel::ALL {
        let get = |m: &std::collections::BTreeMap<Kernel, usize>| m.get(&k).copied().unwrap_or(0).to_string();
        kv(&format!("reductions.{k}"), get(&s.reductions));
        kv(&format!("rows_deleted.{k}"), get(&s.rows_deleted));
        kv(&format!("cols_deleted.{k}"), get(&s.cols_deleted));
        kv(&format!("entries_deleted.{k}"), get(&s.entries_deleted));
        kv(&format!("bound_changes.{k}"), get(&s.bound_changes));
    }
    kv("time_total", secs(s.wall));
    for k in Kernel::ALL {
        kv(&format!("time.{k}"), secs(s.kernel_time(k)));
    }
    kv("time.sync", secs(s.sync_time()));
    kv("time.critical_path", secs(s.critical_path()));
    kv("time.total_work", secs(s.total_work()));
    for p in s.phases.iter().filter(|p| !p.sync) {
        kv(&format!("round.{}.{}", p.round, p.kernel), secs(p.wall));
    }
    kv("syncs", s.syncs.to_string());
    kv("sync_payload_bytes", s.sync_payload_bytes.to_string());
    for (i, p) in s.phases.iter().filter(|p| p.sync).enumerate() {
        kv(&format!("sync.{i}"), format!("{} {} {} {}", p.round, p.kernel, p.payload_bytes, secs(p.wall)));
    }
    for w in &s.warnings {
        kv("warning", w.clone());
    }
    out
}

/// Size summary of a problem.
pub fn problem_doc(instance: &str, lp: &BlockLp) -> String {
    let mut out = String::new();
    let mut kv = |k: &str, v: String| writeln!(out, "{k} = {v}").unwrap();
    kv("instance", instance.to_string());
    kv("blocks", lp.n_blocks().to_string());
    kv("nnz", lp.total_nnz().to_string());
    kv("rows", lp.n_rows_total().to_string());
    kv("cols", lp.n_cols_total().to_string());
    kv("linking_cols", lp.n_linking_cols().to_string());
    kv("linking_eq", lp.n_linking_eq().to_string());
    kv("linking_ineq", lp.n_linking_ineq().to_string());
    let link_nnz: usize = lp.blocks.iter().map(|b| b.f.nnz() + b.g.nnz()).sum();
    kv("linking_row_nnz", link_nnz.to_string());
    for (i, n) in lp.block_nnz().iter().enumerate() {
        kv(&format!("block.{i}.nnz"), n.to_string());
    }
    out
}
