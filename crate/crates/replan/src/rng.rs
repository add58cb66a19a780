use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Deterministic stream derivation: every consumer of randomness gets its own
/// generator keyed by (run seed, purpose, indices), so adding or removing
/// draws in one subsystem never shifts another subsystem's stream.
pub fn derive(seed: u64, tags: &[u64]) -> ChaCha8Rng {
    let mut state = splitmix(seed ^ 0x9e37_79b9_7f4a_7c15);
    for &t in tags {
        state = splitmix(state ^ splitmix(t));
    }
    let mut key = [0u8; 32];
    let mut s = state;
    for chunk in key.chunks_exact_mut(8) {
        s = splitmix(s);
        chunk.copy_from_slice(&s.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Mix a seed and tags down to a single u64, for deriving episode seeds.
pub fn mix(seed: u64, tags: &[u64]) -> u64 {
    let mut state = splitmix(seed ^ 0x9e37_79b9_7f4a_7c15);
    for &t in tags {
        state = splitmix(state ^ splitmix(t));
    }
    state
}

/// Stable tag for a named purpose (FNV-1a over the bytes).
pub fn tag(name: &str) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for b in name.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100_0000_01b3);
    }
    h
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Standard normal via Box-Muller; two uniform draws per sample.
pub fn randn<R: Rng>(rng: &mut R) -> f32 {
    let u1: f64 = rng.random::<f64>().max(1e-12);
    let u2: f64 = rng.random();
    ((-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()) as f32
}
