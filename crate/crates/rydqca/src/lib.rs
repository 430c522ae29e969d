//! Experiment harness around `rydqca-core`: TOML configs, seeded parallel
//! trajectory runs, CSV/JSON/shot-file output and run comparison.

pub use rydqca_core as core;

pub mod compare;
pub mod config;
pub mod engine;
pub mod error;
pub mod experiments;
pub mod io;
pub mod ops;
pub mod run;

/// Size the global rayon pool from `RYDQCA_THREADS` when set. Results do
/// not depend on the thread count.
pub fn init_threads() -> error::Result<()> {
    let Ok(v) = std::env::var("RYDQCA_THREADS") else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| error::HarnessError::InvalidArgument(format!("RYDQCA_THREADS={v} is not a thread count")))?;
    // A second initialization (e.g. from tests) is harmless.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}
