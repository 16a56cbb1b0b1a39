//! Seeded, splittable random streams.
//!
//! A stream is identified by its root seed and the path of child labels used
//! to reach it. Deriving a child never consumes randomness from the parent.

use std::hash::{DefaultHasher, Hash, Hasher};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The identity of a stream: equal keys give equal output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StreamKey(pub [u64; 4]);

impl StreamKey {
    pub fn from_seed(seed: u64) -> Self {
        let mut key = [0u64; 4];
        let mut state = seed;
        for word in &mut key {
            state = mix(state);
            *word = state;
        }
        StreamKey(key)
    }

    pub fn child(self, label: u64) -> Self {
        let h = mix(label ^ 0xD6E8_FEB8_6659_FD93);
        let k = self.0;
        let mut out = [0u64; 4];
        for j in 0..4 {
            let salt = mix(h.wrapping_add((j as u64).wrapping_mul(GOLDEN)));
            out[j] = mix(k[j] ^ salt ^ k[(j + 1) % 4].rotate_left(17));
        }
        StreamKey(out)
    }

    fn seed_bytes(self) -> [u8; 32] {
        let mut bytes = [0u8; 32];
        for (chunk, word) in bytes.chunks_exact_mut(8).zip(self.0) {
            chunk.copy_from_slice(&word.to_le_bytes());
        }
        bytes
    }
}

#[derive(Debug, Clone)]
pub struct RandomStream {
    key: StreamKey,
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        Self::from_key(StreamKey::from_seed(seed))
    }

    pub fn from_key(key: StreamKey) -> Self {
        RandomStream { key, rng: ChaCha8Rng::from_seed(key.seed_bytes()) }
    }

    pub fn key(&self) -> StreamKey {
        self.key
    }

    /// Independent child stream; does not advance `self`.
    pub fn child(&self, label: u64) -> Self {
        Self::from_key(self.key.child(label))
    }

    /// Child labeled by the hash of a value.
    pub fn child_hashed<T: Hash + ?Sized>(&self, value: &T) -> Self {
        let mut hasher = DefaultHasher::new();
        value.hash(&mut hasher);
        self.child(hasher.finish())
    }
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.rng.try_fill_bytes(dest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{any, prop_assert_eq, prop_assert_ne, prop_assume, proptest};
    use rand::Rng;

    fn draw(s: &mut RandomStream, n: usize) -> Vec<u64> {
        (0..n).map(|_| s.next_u64()).collect()
    }

    #[test]
    fn same_path_same_output() {
        let mut a = RandomStream::new(42).child(3).child(9);
        let mut b = RandomStream::new(42).child(3).child(9);
        assert_eq!(draw(&mut a, 16), draw(&mut b, 16));
    }

    #[test]
    fn child_does_not_depend_on_parent_position() {
        let mut parent = RandomStream::new(1);
        let before = parent.child(5).next_u64();
        parent.next_u64();
        parent.next_u64();
        assert_eq!(parent.child(5).next_u64(), before);
    }

    #[test]
    fn siblings_differ() {
        let root = RandomStream::new(0);
        assert_ne!(draw(&mut root.child(0), 4), draw(&mut root.child(1), 4));
        assert_ne!(draw(&mut root.child(0), 4), draw(&mut root.child(0).child(0), 4));
    }

    #[test]
    fn uniform_draws_look_uniform() {
        let mut s = RandomStream::new(11);
        let mean: f64 = (0..50_000).map(|_| s.gen::<f64>()).sum::<f64>() / 50_000.0;
        assert!((mean - 0.5).abs() < 0.01);
    }

    proptest! {
        #[test]
        fn hashed_children_are_reproducible(seed in any::<u64>(), x in any::<(u32, i64)>()) {
            let mut a = RandomStream::new(seed).child_hashed(&x);
            let mut b = RandomStream::new(seed).child_hashed(&x);
            prop_assert_eq!(a.next_u64(), b.next_u64());
        }

        #[test]
        fn distinct_labels_give_distinct_keys(seed in any::<u64>(), a in any::<u64>(), b in any::<u64>()) {
            prop_assume!(a != b);
            let root = StreamKey::from_seed(seed);
            prop_assert_ne!(root.child(a), root.child(b));
        }
    }
}
