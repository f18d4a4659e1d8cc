use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Lane reserved for the per-trial receive-antenna selection draw.
pub const LANE_SELECTION: u16 = 0xFFFF;
/// Lane reserved for pilot and receiver noise.
pub const LANE_NOISE: u16 = 0xFFFE;
/// Lane reserved for auxiliary per-trial draws (e.g. random test inputs).
pub const LANE_AUX: u16 = 0xFFFD;
/// User lanes must stay below this value.
pub const MAX_USERS: usize = 0xFF00;

/// Counter-based RNG derivation: a ChaCha key expanded from the master seed,
/// with `(trial, lane)` packed into the stream id. Any stream can be rebuilt
/// independently of all others.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedStream {
    master: u64,
    key: [u8; 32],
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl SeedStream {
    pub fn new(master: u64) -> Self {
        let mut state = master;
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        Self { master, key }
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    /// Stream for `(trial, lane)`. Trials must be below `2^48`.
    pub fn rng(&self, trial: u64, lane: u16) -> ChaCha8Rng {
        debug_assert!(trial < 1 << 48);
        let mut rng = ChaCha8Rng::from_seed(self.key);
        rng.set_stream((trial << 16) | lane as u64);
        rng
    }

    /// Stream carrying user `user`'s path draws in `trial`.
    pub fn user(&self, trial: u64, user: usize) -> ChaCha8Rng {
        assert!(user < MAX_USERS, "user index {user} exceeds the lane budget");
        self.rng(trial, user as u16)
    }

    /// Fresh 64-bit value from a lane, for seeding auxiliary generators.
    pub fn derive(&self, trial: u64, lane: u16) -> u64 {
        self.rng(trial, lane).next_u64()
    }
}

/// Independent, reproducible RNG for `(master_seed, trial, user)`.
pub fn seed_stream(master_seed: u64, trial: u64, user: usize) -> ChaCha8Rng {
    SeedStream::new(master_seed).user(trial, user)
}
