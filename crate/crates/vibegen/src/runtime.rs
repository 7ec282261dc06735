//! Process-wide thread budget for the kernels.
//!
//! `VIBEGEN_THREADS=0` (the default) selects strict single-threaded
//! execution. Kernel results are bit-identical for every thread count by
//! construction, so the setting only affects wall time — and log timestamps,
//! which are suppressed in deterministic mode (see the training module).

use std::sync::OnceLock;

static THREADS: OnceLock<usize> = OnceLock::new();

/// Set the thread budget once, before any kernel runs. Later calls lose.
pub fn set_threads(n: usize) {
    let _ = THREADS.set(n);
}

/// Current thread budget; 0 and 1 both mean serial execution.
pub fn threads() -> usize {
    *THREADS.get_or_init(|| 0)
}

/// True when running in strict deterministic mode (`VIBEGEN_THREADS=0`).
pub fn deterministic() -> bool {
    threads() == 0
}

/// Parse the `VIBEGEN_THREADS` environment variable (used by the CLI).
pub fn threads_from_env() -> Result<usize, String> {
    match std::env::var("VIBEGEN_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| format!("VIBEGEN_THREADS must be a non-negative integer, got {v:?}")),
        Err(_) => Ok(0),
    }
}
