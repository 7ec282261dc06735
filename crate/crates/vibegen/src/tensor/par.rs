//! Deterministic work splitting for the heavy kernels.
//!
//! Each parallel dimension is chosen so that every output element is written
//! by exactly one task and every reduction runs in a fixed serial order
//! inside its task. Results are therefore bit-identical for any thread
//! count, including 1.

/// Split `items` equal-sized chunks of `data` across up to `threads` OS
/// threads and call `f(item_index, chunk)` for each.
///
/// `data.len()` must equal `items * chunk_len`. With `threads <= 1` this
/// degenerates to a plain loop.
pub fn for_each_chunk<P, F>(threads: usize, data: &mut [P], items: usize, f: F)
where
    P: Send,
    F: Fn(usize, &mut [P]) + Sync,
{
    if items == 0 {
        return;
    }
    let chunk_len = data.len() / items;
    debug_assert_eq!(chunk_len * items, data.len());

    if threads <= 1 || items == 1 {
        for (i, chunk) in data.chunks_mut(chunk_len).enumerate() {
            f(i, chunk);
        }
        return;
    }

    let mut jobs: Vec<(usize, &mut [P])> = data.chunks_mut(chunk_len).enumerate().collect();
    let per_thread = jobs.len().div_ceil(threads.min(jobs.len()));
    std::thread::scope(|scope| {
        while !jobs.is_empty() {
            let take = per_thread.min(jobs.len());
            let group: Vec<(usize, &mut [P])> = jobs.drain(..take).collect();
            let f = &f;
            scope.spawn(move || {
                for (i, chunk) in group {
                    f(i, chunk);
                }
            });
        }
    });
}
