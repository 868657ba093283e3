//! Splittable, path-keyed random streams.
//!
//! A stream is identified by a root seed plus the path of child indices that
//! leads to it in the search tree. The generator for a node depends on nothing
//! else, so subtrees can be explored in any order or on any thread.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RngStream {
    seed: u64,
    path: Vec<u64>,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            path: Vec::new(),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn path(&self) -> &[u64] {
        &self.path
    }

    pub fn child(&self, index: u64) -> Self {
        let mut path = Vec::with_capacity(self.path.len() + 1);
        path.extend_from_slice(&self.path);
        path.push(index);
        Self {
            seed: self.seed,
            path,
        }
    }

    /// Fresh generator for this node. Calling twice yields identical sequences.
    pub fn rng(&self) -> ChaCha8Rng {
        // Mix the seed, then fold each path element (offset by one so that
        // [] and [0] differ) and the path length into the state.
        let mut state = self.seed;
        let mut acc = splitmix64(&mut state);
        for &step in &self.path {
            state ^= acc.rotate_left(17) ^ step.wrapping_add(1);
            acc = splitmix64(&mut state);
        }
        state ^= self.path.len() as u64;
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        ChaCha8Rng::from_seed(key)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn draw(s: &RngStream) -> Vec<u64> {
        let mut r = s.rng();
        (0..8).map(|_| r.random()).collect()
    }

    #[test]
    fn same_path_same_sequence() {
        let a = RngStream::new(7).child(3).child(1);
        let b = RngStream::new(7).child(3).child(1);
        assert_eq!(draw(&a), draw(&b));
    }

    #[test]
    fn distinct_paths_diverge() {
        let root = RngStream::new(7);
        let streams = [
            root.clone(),
            root.child(0),
            root.child(1),
            root.child(0).child(0),
            root.child(1).child(0),
            root.child(0).child(1),
            RngStream::new(8),
        ];
        for (i, a) in streams.iter().enumerate() {
            for b in &streams[i + 1..] {
                assert_ne!(draw(a), draw(b), "{:?} vs {:?}", a.path(), b.path());
            }
        }
    }
}
