//! Drivers for the manufactured convergence study and the Barry–Mercer benchmark.

pub mod barry_mercer;
pub mod checks;
pub mod config;
pub mod convergence;
pub mod export;
pub mod manufactured;

pub use convergence::{eoc, run_convergence, run_level, run_level_observed, run_time_convergence, ErrorRecord, RunOptions, TauRule};
pub use manufactured::Manufactured;
pub use barry_mercer::{run_barry_mercer, BarryMercer, BarryMercerOptions};
