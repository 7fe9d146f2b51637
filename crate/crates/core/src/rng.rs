//! Deterministic randomness.
//!
//! Every random quantity in the crate flows from a single 64-bit master
//! seed. A [`Seed`] is split into labelled children with a SplitMix64
//! finalizer, and Monte Carlo loops draw chunk `i` from ChaCha8 stream `i`
//! of the child seed. Chunk boundaries are fixed ([`CHUNK`]), so the output
//! of a parallel loop never depends on the number of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Samples per Monte Carlo chunk.
pub const CHUNK: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct Seed(pub u64);

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl Seed {
    /// Child seed for the given label.
    pub fn derive(self, label: u64) -> Seed {
        Seed(splitmix64(self.0 ^ splitmix64(label)))
    }

    /// Child seed for a string label (FNV-1a of the bytes).
    pub fn derive_str(self, label: &str) -> Seed {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in label.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01B3);
        }
        self.derive(h)
    }

    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }

    /// Independent ChaCha stream `index` under this seed.
    pub fn stream(self, index: u64) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.0);
        r.set_stream(index);
        r
    }
}

impl From<u64> for Seed {
    fn from(v: u64) -> Self {
        Seed(v)
    }
}

/// Runs `f(rng, count)` over fixed-size chunks covering `total` draws and
/// concatenates the results in chunk order.
pub fn chunked<O, F>(seed: Seed, total: usize, f: F) -> Vec<O>
where
    O: Send,
    F: Fn(&mut ChaCha8Rng, usize) -> Vec<O> + Sync,
{
    let chunks = total.div_ceil(CHUNK);
    let parts: Vec<Vec<O>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let count = CHUNK.min(total - c * CHUNK);
            let mut rng = seed.stream(c as u64);
            f(&mut rng, count)
        })
        .collect();
    let mut out = Vec::with_capacity(total);
    for p in parts {
        out.extend(p);
    }
    out
}

/// [`chunked`] with one call of `f` per draw.
pub fn samples<O, F>(seed: Seed, total: usize, f: F) -> Vec<O>
where
    O: Send,
    F: Fn(&mut ChaCha8Rng) -> O + Sync,
{
    chunked(seed, total, |rng, count| (0..count).map(|_| f(rng)).collect())
}

/// Like [`chunked`] for work items indexed `0..total`: item `i` receives the
/// RNG of stream `i`.
pub fn per_item<O, F>(seed: Seed, total: usize, f: F) -> Vec<O>
where
    O: Send,
    F: Fn(usize, &mut ChaCha8Rng) -> O + Sync,
{
    (0..total)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed.stream(i as u64);
            f(i, &mut rng)
        })
        .collect()
}
