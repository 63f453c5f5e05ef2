//! Seeded, counter-based random streams.
//!
//! A [`SeedSpec`] names a ChaCha8 key (`master_seed`, `stream_id`). Every
//! value drawn from it is a pure function of the key and its position in the
//! keystream, so results never depend on how work is scheduled across
//! threads. Large jobs split a stream into blocks with [`SeedSpec::block_rng`],
//! which selects ChaCha's 64-bit nonce.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub type StreamRng = ChaCha8Rng;

#[derive(Deserialize)]
#[serde(untagged)]
enum SeedRepr {
    Master(u64),
    Full {
        master_seed: u64,
        #[serde(default)]
        stream_id: u64,
    },
}

impl From<SeedRepr> for SeedSpec {
    fn from(r: SeedRepr) -> Self {
        match r {
            SeedRepr::Master(m) => SeedSpec::from_master(m),
            SeedRepr::Full { master_seed, stream_id } => SeedSpec::new(master_seed, stream_id),
        }
    }
}

/// Deserializes from `{"master_seed": .., "stream_id": ..}` or a bare
/// integer master seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "SeedRepr")]
pub struct SeedSpec {
    pub master_seed: u64,
    pub stream_id: u64,
}

impl SeedSpec {
    pub const fn new(master_seed: u64, stream_id: u64) -> Self {
        Self { master_seed, stream_id }
    }

    pub fn from_master(master_seed: u64) -> Self {
        Self::new(master_seed, 0)
    }

    /// Same master seed, different stream. Replicate `k` of a simulation uses
    /// `with_stream(k)`.
    pub fn with_stream(&self, stream_id: u64) -> Self {
        Self::new(self.master_seed, stream_id)
    }

    /// A seed family that is unrelated to `self` but still determined by it.
    /// Used to keep auxiliary draws (law sampling, p-values) off the
    /// replicate streams.
    pub fn derive(&self, tag: u64) -> Self {
        Self::new(splitmix64(self.master_seed ^ splitmix64(tag)), self.stream_id)
    }

    fn key(&self) -> [u8; 32] {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.master_seed.to_le_bytes());
        key[8..16].copy_from_slice(&self.stream_id.to_le_bytes());
        key
    }

    pub fn rng(&self) -> StreamRng {
        self.block_rng(0)
    }

    pub fn block_rng(&self, block: u64) -> StreamRng {
        let mut rng = ChaCha8Rng::from_seed(self.key());
        rng.set_stream(block);
        rng
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Maps `f` over `0..len`, in parallel when the `parallel` feature is on.
/// Output order is always index order.
pub(crate) fn map_indexed<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..len).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..len).map(f).collect()
    }
}

/// Runs `f` with at most `workers` threads for the library's parallel
/// loops. Results never depend on the worker count.
pub fn with_workers<T, F>(workers: usize, f: F) -> T
where
    T: Send,
    F: FnOnce() -> T + Send,
{
    #[cfg(feature = "parallel")]
    {
        match rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = workers;
        f()
    }
}

/// Replicates per random block; fixed so results do not depend on threads.
pub(crate) const MC_BLOCK: usize = 4096;

/// Runs `f(rng, count)` over fixed-size blocks of `reps` replicates, block b
/// drawing from `seed.block_rng(b)`, and concatenates the results in order.
pub(crate) fn mc_blocks<T, F>(reps: usize, seed: SeedSpec, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut StreamRng, usize) -> Vec<T> + Sync + Send,
{
    let n_blocks = reps.div_ceil(MC_BLOCK);
    map_indexed(n_blocks, |b| {
        let count = MC_BLOCK.min(reps - b * MC_BLOCK);
        f(&mut seed.block_rng(b as u64), count)
    })
    .into_iter()
    .flatten()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn same_seed_same_stream() {
        let s = SeedSpec::new(7, 3);
        let a: Vec<u64> = (0..16).map(|_| s.rng().random()).collect();
        let mut r = s.rng();
        let first: u64 = r.random();
        assert!(a.iter().all(|&x| x == first));
    }

    #[test]
    fn streams_and_blocks_differ() {
        let s = SeedSpec::new(7, 3);
        let x: u64 = s.rng().random();
        let y: u64 = s.with_stream(4).rng().random();
        let z: u64 = s.block_rng(1).random();
        let w: u64 = s.derive(1).rng().random();
        assert_ne!(x, y);
        assert_ne!(x, z);
        assert_ne!(x, w);
    }

    #[test]
    fn seed_json_forms() {
        let a: SeedSpec = serde_json::from_str("42").unwrap();
        let b: SeedSpec = serde_json::from_str(r#"{"master_seed": 42}"#).unwrap();
        let c: SeedSpec = serde_json::from_str(r#"{"master_seed": 42, "stream_id": 3}"#).unwrap();
        assert_eq!(a, SeedSpec::new(42, 0));
        assert_eq!(a, b);
        assert_eq!(c, SeedSpec::new(42, 3));
        let round: SeedSpec = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(round, c);
    }

    #[test]
    fn blocks_independent_of_workers() {
        let f = || {
            mc_blocks(10_000, SeedSpec::new(2, 2), |rng, count| {
                (0..count).map(|_| rng.random::<u64>()).collect::<Vec<_>>()
            })
        };
        assert_eq!(with_workers(1, f), with_workers(4, f));
    }
}
