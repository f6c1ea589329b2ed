//! Named random streams derived from a master seed.
//!
//! Every measurement draws from its own stream, keyed by
//! `(master seed, label, shot index)`. The key is a ChaCha8 seed expanded
//! from the master seed with SplitMix64; the ChaCha stream id is the
//! SplitMix64 mix of the label's FNV-1a hash and the shot index. Adding or
//! removing an unrelated measurement therefore never shifts another
//! label's draws, and shots can be executed in any order or on any number
//! of workers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// The stream for measurement `label` in shot `shot` of a run seeded with
/// `master_seed`.
pub fn stream(master_seed: u64, label: &str, shot: u64) -> StreamRng {
    let mut state = master_seed;
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    let mut id = fnv1a(label.as_bytes()) ^ shot.rotate_left(32);
    rng.set_stream(splitmix64(&mut id));
    rng
}
