//! Counter-based random streams keyed by a master seed.
//!
//! Every consumer of randomness asks for `stream(master, domain, index)`.
//! The key is derived from `(master, domain)` and the index selects an
//! independent ChaCha stream, so results never depend on execution order.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

pub type StreamRng = ChaCha12Rng;

/// Independent purposes that draw from the same master seed.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Domain {
    Omega,
    Circuit,
    Observable,
    Test,
}

impl Domain {
    fn tag(self) -> u64 {
        match self {
            Domain::Omega => 0x6f6d_6567_6100_0001,
            Domain::Circuit => 0x6369_7263_7569_0002,
            Domain::Observable => 0x6f62_7365_7276_0003,
            Domain::Test => 0x7465_7374_0000_0004,
        }
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn stream(master: u64, domain: Domain, index: u64) -> StreamRng {
    let mut key = [0u8; 32];
    let mut state = master ^ domain.tag();
    for chunk in key.chunks_mut(8) {
        state = splitmix(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    let mut rng = ChaCha12Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

/// Stream index for a `(time point, sample)` pair.
pub fn task_index(point: usize, sample: usize) -> u64 {
    ((point as u64) << 32) | sample as u64
}
