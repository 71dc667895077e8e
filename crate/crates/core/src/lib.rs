//! Structure-preserving parallel presolve for block-diagonal linear programs with linking
//! variables and linking constraints.
//!
//! A [`BlockLp`] is split across workers block by block; linking data is replicated and kept
//! consistent through buffered synchronization. Every reduction is journaled so the presolved
//! problem can be replayed exactly and solutions lifted back with [`postsolve()`].

pub mod blocklp;
pub mod cli;
pub mod error;
pub mod io;
pub mod kernels;
pub mod oracle;
pub mod postsolve;
pub mod runtime;
pub mod sync;
pub mod work;

pub use blocklp::{Block, BlockLp, ColRef, Location, RowKind, RowRef, SparseRowMatrix};
pub use error::PresolveError;
pub use kernels::Kernel;
pub use postsolve::{postsolve, replay, ReductionJournal};
pub use runtime::{run_presolve, PresolveConfig, PresolveStats, Presolved, Presolver};
pub use sync::Tolerances;
