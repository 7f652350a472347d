//! Counter-based random streams.
//!
//! Every stream is identified by a master seed and a path of integer ids
//! (for example `[replication, row]`). Output `k` of a stream is a pure
//! function of `(key, k)`, so results never depend on which thread draws
//! them or in which order streams are visited.

use rand_core::RngCore;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// `log2` of the number of outputs reserved for each [`CounterRng::block`].
pub const BLOCK_BITS: u32 = 20;

/// SplitMix64 finalizer (Stafford variant 13).
#[inline(always)]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives the key of the substream addressed by `path` under `master_seed`.
#[inline]
pub fn derive_key(master_seed: u64, path: &[u64]) -> u64 {
    let mut key = mix64(master_seed ^ 0x6a09_e667_f3bc_c909);
    for (depth, &id) in path.iter().enumerate() {
        key = child_key(key, id, depth);
    }
    key
}

/// Extends a derived key by one path component at position `depth`.
#[inline(always)]
pub fn child_key(parent: u64, id: u64, depth: usize) -> u64 {
    mix64(parent ^ mix64(id.wrapping_add(GOLDEN.wrapping_mul(depth as u64 + 1))))
}

/// A keyed counter stream: output `k` is `mix64(key + (k + 1) * GOLDEN)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

impl CounterRng {
    pub fn new(master_seed: u64, path: &[u64]) -> Self {
        Self::from_key(derive_key(master_seed, path))
    }

    #[inline]
    pub fn from_key(key: u64) -> Self {
        CounterRng { key, counter: 0 }
    }

    /// The substream owning outputs `block * BLOCK_LEN ..` of stream `key`.
    #[inline(always)]
    pub fn block(key: u64, block: u64) -> Self {
        CounterRng { key, counter: block << BLOCK_BITS }
    }

    /// Random access to output `index` without advancing the stream.
    #[inline]
    pub fn at(&self, index: u64) -> u64 {
        mix64(self.key.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN)))
    }

    /// Number of outputs drawn so far.
    pub fn position(&self) -> u64 {
        self.counter
    }
}

impl RngCore for CounterRng {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    #[inline(always)]
    fn next_u64(&mut self) -> u64 {
        let out = self.at(self.counter);
        self.counter = self.counter.wrapping_add(1);
        out
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        rand_core::impls::fill_bytes_via_next(self, dst)
    }
}
