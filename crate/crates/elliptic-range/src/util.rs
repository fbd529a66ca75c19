//! Small shared helpers: deterministic parallel sweeps.

/// Number of worker threads for angle sweeps. `ELLIPTIC_RANGE_THREADS`
/// caps parallelism; 0 or unset means auto.
pub(crate) fn sweep_threads() -> usize {
    let configured = std::env::var("ELLIPTIC_RANGE_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .unwrap_or(0);
    if configured == 0 {
        std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)
    } else {
        configured
    }
}

/// Evaluate `f(0), ..., f(n-1)` into a Vec, splitting the index range over
/// worker threads. Outputs land by index, so the result is identical to the
/// sequential evaluation.
pub(crate) fn par_map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let threads = sweep_threads().min(n.max(1));
    if threads <= 1 || n < 64 {
        return (0..n).map(f).collect();
    }
    let mut out: Vec<Option<T>> = (0..n).map(|_| None).collect();
    let chunk = n.div_ceil(threads);
    std::thread::scope(|scope| {
        for (t, slot) in out.chunks_mut(chunk).enumerate() {
            let f = &f;
            scope.spawn(move || {
                for (off, cell) in slot.iter_mut().enumerate() {
                    *cell = Some(f(t * chunk + off));
                }
            });
        }
    });
    out.into_iter().map(|x| x.expect("filled by worker")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn par_map_matches_sequential() {
        let seq: Vec<usize> = (0..1000).map(|i| i * i).collect();
        let par = par_map_indexed(1000, |i| i * i);
        assert_eq!(seq, par);
    }
}
