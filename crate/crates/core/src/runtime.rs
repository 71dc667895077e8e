//! Orchestration of logical workers through the presolve schedule.
//!
//! Each worker owns a contiguous range of blocks and a replica of block 0. Kernels run per
//! block, so a block's reductions depend only on its own data and the synchronized replica,
//! never on which other blocks share its worker. That makes the result independent of the
//! worker count.

use std::collections::BTreeMap;
use std::ops::Range;
use std::thread;
use std::time::{Duration, Instant};

use crate::blocklp::BlockLp;
use crate::error::PresolveError;
use crate::kernels::{apply_reductions, GlobalProposal, Kernel, KernelCtx, Scope};
use crate::postsolve::{JournalOp, JournalSink, OriginalDims, ReductionJournal};
use crate::sync::{apply_sync, build_batch, exchange, LinkCounters, SyncBatch, Tolerances};
use crate::work::{decompose, reassemble, Replica, WorkBlock};

/// Kernel passes per block and phase before the block yields to the next sync.
const LOCAL_PASSES: usize = 16;

/// Order of kernel runs within one round.
pub const SCHEDULE: [Kernel; 5] =
    [Kernel::Cleanup, Kernel::Singleton, Kernel::BoundTightening, Kernel::Parallel, Kernel::Cleanup];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KernelToggles {
    enabled: [bool; 4],
}

impl Default for KernelToggles {
    fn default() -> Self {
        KernelToggles { enabled: [true; 4] }
    }
}

impl KernelToggles {
    fn slot(k: Kernel) -> usize {
        Kernel::ALL.iter().position(|&x| x == k).expect("kernel listed in ALL")
    }

    pub fn is_enabled(&self, k: Kernel) -> bool {
        self.enabled[Self::slot(k)]
    }

    pub fn set(&mut self, k: Kernel, on: bool) {
        self.enabled[Self::slot(k)] = on;
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PresolveConfig {
    pub workers: usize,
    pub max_rounds: usize,
    pub tolerances: Tolerances,
    pub kernels: KernelToggles,
    /// Seed for row hashing.
    pub seed: u64,
    /// Run workers on OS threads when more than one core is available.
    pub threads: bool,
}

impl Default for PresolveConfig {
    fn default() -> Self {
        PresolveConfig {
            workers: 1,
            max_rounds: 5,
            tolerances: Tolerances::default(),
            kernels: KernelToggles::default(),
            seed: 0,
            threads: true,
        }
    }
}

impl PresolveConfig {
    pub fn validate(&self) -> Result<(), PresolveError> {
        if self.workers == 0 {
            return Err(PresolveError::InvalidConfig("at least one worker required".into()));
        }
        if self.max_rounds == 0 {
            return Err(PresolveError::InvalidConfig("at least one round required".into()));
        }
        self.tolerances.validate().map_err(PresolveError::InvalidConfig)
    }
}

/// Timing of one kernel phase or sync.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseRecord {
    pub round: u32,
    pub kernel: Kernel,
    pub sync: bool,
    pub wall: Duration,
    /// Busy time of the slowest worker (the phase's critical path).
    pub max_worker: Duration,
    pub total_worker: Duration,
    /// Bytes sent to and from the exchange (sync records only).
    pub payload_bytes: usize,
    pub journal_entries: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PresolveStats {
    pub n_blocks: usize,
    pub workers_requested: usize,
    pub workers: usize,
    pub warnings: Vec<String>,
    pub nnz_before: usize,
    pub nnz_after: usize,
    pub rows_before: usize,
    pub rows_after: usize,
    pub cols_before: usize,
    pub cols_after: usize,
    pub rounds: usize,
    /// Journal entries per kernel.
    pub reductions: BTreeMap<Kernel, usize>,
    pub rows_deleted: BTreeMap<Kernel, usize>,
    pub cols_deleted: BTreeMap<Kernel, usize>,
    pub entries_deleted: BTreeMap<Kernel, usize>,
    pub bound_changes: BTreeMap<Kernel, usize>,
    pub phases: Vec<PhaseRecord>,
    pub syncs: usize,
    pub sync_payload_bytes: usize,
    pub wall: Duration,
}

impl PresolveStats {
    pub fn total_rows_deleted(&self) -> usize {
        self.rows_deleted.values().sum()
    }

    pub fn total_cols_deleted(&self) -> usize {
        self.cols_deleted.values().sum()
    }

    pub fn total_bound_changes(&self) -> usize {
        self.bound_changes.values().sum()
    }

    /// Sum over phases of the slowest worker: the wall time with one core per worker.
    pub fn critical_path(&self) -> Duration {
        self.phases.iter().map(|p| p.max_worker).sum()
    }

    /// Sum of all worker busy time: the wall time of a sequential run.
    pub fn total_work(&self) -> Duration {
        self.phases.iter().map(|p| p.total_worker).sum()
    }

    pub fn kernel_time(&self, kernel: Kernel) -> Duration {
        self.phases.iter().filter(|p| !p.sync && p.kernel == kernel).map(|p| p.wall).sum()
    }

    pub fn sync_time(&self) -> Duration {
        self.phases.iter().filter(|p| p.sync).map(|p| p.wall).sum()
    }
}

/// Blocks (1-based, contiguous) handled by each worker.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Assignment {
    pub ranges: Vec<Range<usize>>,
    /// Set when more workers were requested than there are blocks.
    pub reduced_from: Option<usize>,
}

/// Splits the blocks of `lp` into contiguous ranges, one per worker.
pub fn distribute(lp: &BlockLp, workers: usize) -> Assignment {
    let nnz = lp.block_nnz();
    distribute_weights(&nnz[1..], workers)
}

/// Contiguous split of blocks with the given weights, minimizing the heaviest range.
///
/// Equal weights give ranges whose sizes differ by at most one, earlier ranges taking the
/// extra blocks.
pub fn distribute_weights(weights: &[usize], workers: usize) -> Assignment {
    let n = weights.len();
    let reduced_from = (workers > n).then_some(workers);
    let k = workers.clamp(1, n.max(1));
    if n == 0 {
        return Assignment { ranges: vec![1..1], reduced_from };
    }
    if weights.iter().all(|&w| w == weights[0]) {
        return Assignment { ranges: crate::blocklp::even_ranges(n, k), reduced_from };
    }
    let parts = |cap: usize| -> Option<Vec<Range<usize>>> {
        let mut out = Vec::new();
        let mut start = 0;
        let mut load = 0;
        for (i, &w) in weights.iter().enumerate() {
            if w > cap {
                return None;
            }
            if load + w > cap {
                out.push(start..i);
                start = i;
                load = 0;
            }
            load += w;
        }
        out.push(start..n);
        (out.len() <= k).then_some(out)
    };
    let (mut lo, mut hi) = (*weights.iter().max().unwrap(), weights.iter().sum::<usize>());
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if parts(mid).is_some() {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let mut ranges = parts(lo).expect("total weight is always feasible");
    while ranges.len() < k {
        // split the longest range; its pieces cannot exceed the optimum
        let (i, _) = ranges.iter().enumerate().max_by_key(|(i, r)| (r.len(), usize::MAX - i)).unwrap();
        let r = ranges[i].clone();
        ranges[i] = r.start..r.end - 1;
        ranges.insert(i + 1, r.end - 1..r.end);
    }
    Assignment { ranges: ranges.into_iter().map(|r| r.start + 1..r.end + 1).collect(), reduced_from }
}

struct Worker {
    id: usize,
    replica: Replica,
    blocks: Vec<WorkBlock>,
    counters: LinkCounters,
    journal: JournalSink,
    outbox: Vec<GlobalProposal>,
    /// Block-0 proposals await a sync; block 0 is not reexamined until then.
    block0_pending: bool,
}

impl Worker {
    fn run_kernel(&mut self, kernel: Kernel, cfg: &PresolveConfig) -> Result<(), PresolveError> {
        let tol = &cfg.tolerances;
        if self.id == 0 && !self.block0_pending {
            let ctx = KernelCtx { tol, cached_global: &self.counters.cached_global, hash_seed: cfg.seed };
            let out = kernel.run(&Scope::of_linking(&self.replica), &ctx)?;
            debug_assert!(out.local.is_empty());
            self.block0_pending = !out.global.is_empty();
            self.outbox.extend(out.global);
        }
        for bi in 0..self.blocks.len() {
            for _ in 0..LOCAL_PASSES {
                let ctx = KernelCtx { tol, cached_global: &self.counters.cached_global, hash_seed: cfg.seed };
                let out = kernel.run(&Scope::of_block(&self.replica, &self.blocks[bi]), &ctx)?;
                self.outbox.extend(out.global);
                if out.local.is_empty() {
                    break;
                }
                let deltas = apply_reductions(&mut self.blocks[bi], &mut self.journal, &out.local)?;
                for (row, d) in deltas {
                    self.counters.buffer_delta(row, d)?;
                }
            }
        }
        Ok(())
    }

    fn batch(&mut self) -> SyncBatch {
        let batch = build_batch(&self.replica, &mut self.blocks, &self.counters, &self.outbox);
        self.outbox.clear();
        batch
    }

    fn apply(&mut self, merged: &SyncBatch, tol: &Tolerances) -> Result<(), PresolveError> {
        self.block0_pending = false;
        apply_sync(&mut self.replica, &mut self.blocks, &mut self.counters, merged, &mut self.journal, self.id == 0, tol)
    }
}

/// Stepwise presolve driver. [`run_presolve`] runs the full schedule; tests may drive
/// kernels and syncs in other orders.
pub struct Presolver {
    cfg: PresolveConfig,
    workers: Vec<Worker>,
    dims: OriginalDims,
    stats: PresolveStats,
    threaded: bool,
    round: u32,
    step: u32,
    last_kernel: Kernel,
    start: Instant,
    last_batches: Vec<SyncBatch>,
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let out = f();
    (out, t.elapsed())
}

impl Presolver {
    pub fn new(lp: &BlockLp, cfg: PresolveConfig) -> Result<Self, PresolveError> {
        let start = Instant::now();
        cfg.validate()?;
        if let Some(v) = lp.validate().first() {
            return Err(PresolveError::InvalidModel(v.to_string()));
        }
        let assignment = distribute(lp, cfg.workers);
        let mut stats = PresolveStats {
            n_blocks: lp.n_blocks(),
            workers_requested: cfg.workers,
            workers: assignment.ranges.len(),
            nnz_before: lp.total_nnz(),
            rows_before: lp.n_rows_total(),
            cols_before: lp.n_cols_total(),
            ..Default::default()
        };
        if let Some(w) = assignment.reduced_from {
            stats.warnings.push(format!("{w} workers requested for {} blocks; using {}", lp.n_blocks(), stats.workers));
        }
        let (replica, blocks) = decompose(lp);
        let mut blocks = blocks.into_iter();
        let workers = assignment
            .ranges
            .iter()
            .enumerate()
            .map(|(id, r)| {
                let owned: Vec<WorkBlock> = blocks.by_ref().take(r.len()).collect();
                Worker {
                    id,
                    counters: LinkCounters::new(&replica, &owned),
                    replica: replica.clone(),
                    blocks: owned,
                    journal: JournalSink::default(),
                    outbox: Vec::new(),
                    block0_pending: false,
                }
            })
            .collect::<Vec<_>>();
        let cores = thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
        let threaded = cfg.threads && workers.len() > 1 && cores > 1;
        let mut p = Presolver {
            cfg,
            workers,
            dims: OriginalDims::of(lp),
            stats,
            threaded,
            round: 0,
            step: 0,
            last_kernel: Kernel::Cleanup,
            start,
            last_batches: Vec::new(),
        };
        // establishes global counts and activities
        p.sync()?;
        Ok(p)
    }

    pub fn n_workers(&self) -> usize {
        self.workers.len()
    }

    pub fn stats(&self) -> &PresolveStats {
        &self.stats
    }

    /// Batches the workers sent in the most recent sync, in worker order.
    pub fn last_batches(&self) -> &[SyncBatch] {
        &self.last_batches
    }

    /// The remaining problem as currently held by the workers.
    pub fn snapshot(&self) -> BlockLp {
        reassemble(&self.workers[0].replica, self.workers.iter().flat_map(|w| w.blocks.iter())).0
    }

    pub fn total_nnz(&self) -> usize {
        self.workers[0].replica.nnz() + self.workers.iter().flat_map(|w| &w.blocks).map(WorkBlock::nnz).sum::<usize>()
    }

    fn journal_len(&self) -> usize {
        self.workers.iter().map(|w| w.journal.entries.len()).sum()
    }

    /// Runs `f` on every worker, on threads when enabled. Returns per-worker results and
    /// busy times in worker order.
    fn each_worker<R: Send>(&mut self, f: impl Fn(&mut Worker) -> R + Sync) -> Vec<(R, Duration)> {
        if self.threaded {
            let f = &f;
            thread::scope(|s| {
                let handles: Vec<_> = self.workers.iter_mut().map(|w| s.spawn(move || timed(|| f(w)))).collect();
                handles.into_iter().map(|h| h.join().expect("worker thread panicked")).collect()
            })
        } else {
            self.workers.iter_mut().map(|w| timed(|| f(w))).collect()
        }
    }

    fn record(&mut self, kernel: Kernel, sync: bool, wall: Duration, times: &[Duration], payload: usize, entries: usize) {
        self.stats.phases.push(PhaseRecord {
            round: self.round,
            kernel,
            sync,
            wall,
            max_worker: times.iter().copied().max().unwrap_or_default(),
            total_worker: times.iter().sum(),
            payload_bytes: payload,
            journal_entries: entries,
        });
    }

    /// First error in block order; worker 0 also owns block 0, which comes first.
    fn first_error<R>(results: Vec<(Result<R, PresolveError>, Duration)>) -> Result<Vec<Duration>, PresolveError> {
        let mut times = Vec::with_capacity(results.len());
        for (r, t) in results {
            r?;
            times.push(t);
        }
        Ok(times)
    }

    /// Runs one kernel on every worker. Returns the number of journal entries it produced.
    pub fn run_kernel(&mut self, kernel: Kernel) -> Result<usize, PresolveError> {
        let before = self.journal_len();
        self.step += 1;
        self.last_kernel = kernel;
        let (round, step) = (self.round, self.step);
        let t = Instant::now();
        let cfg = self.cfg.clone();
        let results = self.each_worker(|w| {
            w.journal.set_step(round, step, kernel);
            w.run_kernel(kernel, &cfg)
        });
        let wall = t.elapsed();
        let times = Self::first_error(results)?;
        let entries = self.journal_len() - before;
        self.record(kernel, false, wall, &times, 0, entries);
        Ok(entries)
    }

    /// Runs one kernel on a single worker only (for exercising unusual interleavings).
    pub fn run_kernel_on(&mut self, worker: usize, kernel: Kernel) -> Result<usize, PresolveError> {
        let before = self.journal_len();
        self.step += 1;
        self.last_kernel = kernel;
        let cfg = self.cfg.clone();
        let w = &mut self.workers[worker];
        w.journal.set_step(self.round, self.step, kernel);
        w.run_kernel(kernel, &cfg)?;
        Ok(self.journal_len() - before)
    }

    /// Collective exchange plus application on every worker. Returns the journal entries
    /// the sync produced.
    pub fn sync(&mut self) -> Result<usize, PresolveError> {
        let before = self.journal_len();
        let t = Instant::now();
        let batches = self.each_worker(|w| w.batch());
        self.last_batches = batches.iter().map(|(b, _)| b.clone()).collect();
        let (merged, merge_time) = timed(|| exchange(&self.last_batches, &self.cfg.tolerances));
        let merged = merged?;
        let sent: usize = batches.iter().map(|(b, _)| b.payload_bytes()).sum();
        let payload = sent + merged.payload_bytes() * self.workers.len();
        self.step += 1;
        let (round, step, kernel) = (self.round, self.step, self.last_kernel);
        let tol = self.cfg.tolerances;
        let applied = self.each_worker(|w| {
            w.journal.set_step(round, step, kernel);
            w.apply(&merged, &tol)
        });
        let wall = t.elapsed();
        let mut times: Vec<Duration> = batches.iter().map(|(_, d)| *d).collect();
        for (t, d) in times.iter_mut().zip(Self::first_error(applied)?) {
            *t += d + merge_time;
        }
        let entries = self.journal_len() - before;
        self.stats.syncs += 1;
        self.stats.sync_payload_bytes += payload;
        self.record(kernel, true, wall, &times, payload, entries);
        Ok(entries)
    }

    /// Runs one round of the schedule, syncing after every kernel.
    pub fn run_round(&mut self) -> Result<usize, PresolveError> {
        self.round += 1;
        self.step = 0;
        self.stats.rounds += 1;
        let mut reductions = 0;
        for kernel in SCHEDULE {
            if !self.cfg.kernels.is_enabled(kernel) {
                continue;
            }
            reductions += self.run_kernel(kernel)?;
            reductions += self.sync()?;
        }
        Ok(reductions)
    }

    /// Checks the counter invariants on every worker; `after_sync` also demands exactness.
    pub fn check_counters(&self, after_sync: bool) -> Result<(), String> {
        let n = self.workers[0].replica.n_link_rows();
        let mut truth = vec![0i64; n];
        for w in &self.workers {
            for b in &w.blocks {
                for (r, s) in b.slices.iter().enumerate() {
                    truth[r] += s.len() as i64;
                }
            }
        }
        let replica = &self.workers[0].replica;
        for (r, lr) in replica.link_rows.iter().enumerate() {
            truth[r] += if lr.alive { lr.slice.len() as i64 } else { 0 };
        }
        for w in &self.workers {
            let c = &w.counters;
            for r in 0..n {
                let own: i64 = w.blocks.iter().map(|b| b.slices[r].len() as i64).sum();
                if replica.link_rows[r].alive && c.local_count[r] != own {
                    return Err(format!("worker {}: local count of row {r} is {} but slices hold {own}", w.id, c.local_count[r]));
                }
                if c.cached_global[r] < truth[r] {
                    return Err(format!("worker {}: cached count {} of row {r} below true {}", w.id, c.cached_global[r], truth[r]));
                }
                if c.cached_global[r] + c.pending_delta[r] < truth[r] {
                    return Err(format!("worker {}: cached count plus pending below true count on row {r}", w.id));
                }
                if after_sync {
                    if c.cached_global[r] != truth[r] {
                        return Err(format!("worker {}: cached count {} of row {r} differs from true {}", w.id, c.cached_global[r], truth[r]));
                    }
                    if c.pending_delta[r] != 0 {
                        return Err(format!("worker {}: pending delta left on row {r}", w.id));
                    }
                }
            }
            if after_sync && w.replica != *replica {
                return Err(format!("worker {} replica differs from worker 0", w.id));
            }
        }
        Ok(())
    }

    /// Reassembles the remaining problem and the globally ordered journal.
    pub fn finish(mut self) -> (BlockLp, ReductionJournal, PresolveStats) {
        let mut entries: Vec<_> = self.workers.iter_mut().flat_map(|w| std::mem::take(&mut w.journal.entries)).collect();
        entries.sort_by_key(|e| e.key());
        let (lp, mapping) = reassemble(&self.workers[0].replica, self.workers.iter().flat_map(|w| w.blocks.iter()));
        let journal = ReductionJournal { entries, dims: self.dims, mapping };
        let mut stats = self.stats;
        stats.nnz_after = lp.total_nnz();
        stats.rows_after = lp.n_rows_total();
        stats.cols_after = lp.n_cols_total();
        for k in Kernel::ALL {
            for map in [&mut stats.reductions, &mut stats.rows_deleted, &mut stats.cols_deleted, &mut stats.entries_deleted, &mut stats.bound_changes] {
                map.insert(k, 0);
            }
        }
        for e in &journal.entries {
            *stats.reductions.get_mut(&e.kernel).unwrap() += 1;
            let map = match e.op {
                JournalOp::DeleteRow { .. } => &mut stats.rows_deleted,
                JournalOp::FixVariable { .. } => &mut stats.cols_deleted,
                JournalOp::DeleteEntry { .. } => &mut stats.entries_deleted,
                JournalOp::SetBounds { .. } => &mut stats.bound_changes,
                _ => continue,
            };
            *map.get_mut(&e.kernel).unwrap() += 1;
        }
        stats.wall = self.start.elapsed();
        (lp, journal, stats)
    }
}

/// Output of a completed presolve.
#[derive(Clone, Debug)]
pub struct Presolved {
    pub lp: BlockLp,
    pub journal: ReductionJournal,
    pub stats: PresolveStats,
}

/// Presolves `lp`: rounds of the kernel schedule until a round changes nothing or
/// `cfg.max_rounds` is reached.
pub fn run_presolve(lp: &BlockLp, cfg: &PresolveConfig) -> Result<Presolved, PresolveError> {
    let mut p = Presolver::new(lp, cfg.clone())?;
    for _ in 0..cfg.max_rounds {
        if p.run_round()? == 0 {
            break;
        }
    }
    let (lp, journal, stats) = p.finish();
    Ok(Presolved { lp, journal, stats })
}
