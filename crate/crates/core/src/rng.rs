//! Counter-based per-replica random streams and the parallel replica driver.
//!
//! Replica `k` of a run seeded with `s` always draws from ChaCha8 key `s`,
//! stream `k`, so results never depend on how replicas are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub type StreamRng = ChaCha8Rng;

/// Independent stream families keyed by a 64-bit seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Streams {
    seed: u64,
}

impl Streams {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Stream owned by replica `index`.
    pub fn replica(&self, index: u64) -> StreamRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        rng
    }

    /// A separate family for a named purpose (e.g. the second sample of a
    /// two-sample test), independent of every stream of `self`.
    pub fn derive(&self, tag: u64) -> Self {
        Self {
            seed: splitmix64(self.seed ^ splitmix64(tag.wrapping_add(0x9E37_79B9_7F4A_7C15))),
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Runs `f(index, rng)` for every replica and returns results in index order.
///
/// `workers = None` uses the global rayon pool; `Some(k)` a dedicated pool of
/// `k` threads. The output is identical either way.
pub fn run_replicas<R, F>(streams: Streams, count: usize, workers: Option<usize>, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(u64, &mut StreamRng) -> R + Send + Sync,
{
    let job = || {
        (0..count as u64)
            .into_par_iter()
            .map(|k| {
                let mut rng = streams.replica(k);
                f(k, &mut rng)
            })
            .collect::<Vec<R>>()
    };
    match workers {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k.max(1))
            .build()
            .expect("thread pool")
            .install(job),
        None => job(),
    }
}
