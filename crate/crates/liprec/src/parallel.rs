//! Thread pool sized by `LIPREC_THREADS` (default: all hardware threads).

use rayon::{ThreadPool, ThreadPoolBuilder};

pub const THREADS_ENV: &str = "LIPREC_THREADS";

pub fn thread_count() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

pub fn pool() -> ThreadPool {
    let mut builder = ThreadPoolBuilder::new();
    if let Some(n) = thread_count() {
        builder = builder.num_threads(n);
    }
    builder.build().expect("thread pool")
}
