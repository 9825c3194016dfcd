//! Deterministic randomness streams.
//!
//! A single 64-bit master seed derives a tree of independent substreams.
//! Every replicate, grid point and pool slot gets its own path in that tree,
//! so results do not depend on thread count or scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// The concrete generator behind every stream in this crate.
pub type Stream = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A node in the seed hierarchy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SeedPath(u64);

impl SeedPath {
    pub fn new(master: u64) -> Self {
        SeedPath(splitmix64(master))
    }

    /// Derives the substream keyed by `key`.
    pub fn child(self, key: u64) -> Self {
        SeedPath(splitmix64(self.0 ^ splitmix64(key.wrapping_mul(GOLDEN) ^ 0x5851_F42D_4C95_7F2D)))
    }

    /// Derives a substream keyed by a string label (FNV-1a of the bytes).
    pub fn label(self, tag: &str) -> Self {
        let mut h: u64 = 0xCBF2_9CE4_8422_2325;
        for b in tag.bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0100_0000_01B3);
        }
        self.child(h)
    }

    pub fn value(self) -> u64 {
        self.0
    }

    pub fn stream(self) -> Stream {
        Stream::seed_from_u64(self.0)
    }
}

/// Convenience: a stream straight from a master seed.
pub fn stream_from_seed(seed: u64) -> Stream {
    SeedPath::new(seed).stream()
}

/// Slots per substream in [`par_draws`].
pub const CHUNK: usize = 4096;

/// `count` draws of `f`, slot `i` taken from substream `seed.child(i / CHUNK)`.
///
/// Chunks run in parallel; the result is the same for any thread count.
pub fn par_draws<T, F>(count: usize, seed: SeedPath, f: F) -> Vec<T>
where
    T: Send + Default + Clone,
    F: Fn(&mut Stream) -> T + Sync,
{
    let mut out = vec![T::default(); count];
    out.par_chunks_mut(CHUNK).enumerate().for_each(|(c, chunk)| {
        let mut rng = seed.child(c as u64).stream();
        for slot in chunk {
            *slot = f(&mut rng);
        }
    });
    out
}
