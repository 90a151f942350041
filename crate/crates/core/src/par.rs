//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (on by default) the [`Parallelism::Rayon`]
//! mode runs on the rayon thread pool. Without it, every mode runs
//! sequentially on the calling thread.

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Parallelism {
    Sequential,
    #[default]
    Rayon,
}

impl Parallelism {
    /// Whether this mode actually runs in parallel in the current build.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Parallelism::Rayon
    }
}

pub fn join<A, B, RA, RB>(mode: Parallelism, a: A, b: B) -> (RA, RB)
where
    A: FnOnce() -> RA + Send,
    B: FnOnce() -> RB + Send,
    RA: Send,
    RB: Send,
{
    #[cfg(feature = "parallel")]
    if mode.is_parallel() {
        return rayon::join(a, b);
    }
    let _ = mode;
    (a(), b())
}

pub fn join3<A, B, C, RA, RB, RC>(mode: Parallelism, a: A, b: B, c: C) -> (RA, RB, RC)
where
    A: FnOnce() -> RA + Send,
    B: FnOnce() -> RB + Send,
    C: FnOnce() -> RC + Send,
    RA: Send,
    RB: Send,
    RC: Send,
{
    let (ra, (rb, rc)) = join(mode, a, || join(mode, b, c));
    (ra, rb, rc)
}

/// Maps `f` over `items`, preserving order.
pub fn map<T, U, F>(mode: Parallelism, items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if mode.is_parallel() {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    let _ = mode;
    items.iter().map(f).collect()
}
