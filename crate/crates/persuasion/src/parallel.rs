//! Order-preserving parallel map over scoped threads. Work is split into
//! contiguous chunks, so results do not depend on the number of workers.

use persuasion_core::{Belief, ObjectiveSpec, Result};

pub fn par_map<T, R, F>(items: &[T], jobs: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    let jobs = jobs.max(1).min(items.len().max(1));
    if jobs == 1 {
        return items.iter().map(f).collect();
    }
    let chunk = items.len().div_ceil(jobs);
    let f = &f;
    std::thread::scope(|s| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|part| s.spawn(move || part.iter().map(f).collect::<Vec<R>>()))
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect()
    })
}

/// V at every belief; the first failure in input order wins.
pub fn evaluate(obj: &ObjectiveSpec, beliefs: &[Belief], jobs: usize) -> Result<Vec<f64>> {
    par_map(beliefs, jobs, |b| obj.eval(b)).into_iter().collect()
}
