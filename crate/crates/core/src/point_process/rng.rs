use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Reproducible random stream labelled by `(master_seed, stream_index)`.
///
/// The generator is ChaCha8 keyed by a hash of the master seed, with the
/// stream index selecting the ChaCha stream, so distinct labels give
/// non-overlapping sequences and a label always replays the same sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub master_seed: u64,
    pub stream_index: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        Self {
            master_seed,
            stream_index,
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        let mut state = self.master_seed;
        for chunk in key.chunks_mut(8) {
            state = splitmix64(state);
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(self.stream_index);
        rng
    }

    /// Stream for replicate `index` under the same master seed.
    pub fn replicate(&self, index: u64) -> Self {
        Self::new(self.master_seed, index)
    }

    /// Independent sub-stream tagged by `tag`, keeping the stream index.
    pub fn child(&self, tag: u64) -> Self {
        let mixed =
            splitmix64(self.master_seed ^ splitmix64(tag.wrapping_add(0x5DEE_CE66_D1CE_4E5B)));
        Self::new(mixed, self.stream_index)
    }
}
