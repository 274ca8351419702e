//! Reproducible per-path random streams and ordered parallel ensembles.
//!
//! Every path draws from its own ChaCha stream, keyed by the master seed
//! and a scenario tag and selected by the path index, so results do not
//! depend on how paths are scheduled across workers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub type PathRng = ChaCha8Rng;

/// FNV-1a hash of a scenario name.
pub fn scenario_tag(name: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// The random stream of path `path` in scenario `tag`.
pub fn path_rng(master_seed: u64, tag: u64, path: u64) -> PathRng {
    let mut state = master_seed ^ tag.rotate_left(29);
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(seed);
    rng.set_stream(path);
    rng
}

/// Evaluates `job(i)` for `i in 0..n` on `workers` threads and returns the
/// results in index order.
pub fn run_ensemble<T, F>(n: u64, workers: usize, job: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    if workers <= 1 {
        return (0..n).map(job).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .expect("failed to start worker pool");
    pool.install(|| (0..n).into_par_iter().map(job).collect())
}
