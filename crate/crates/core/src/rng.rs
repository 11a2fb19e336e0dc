//! Seeded, serializable random number generator.
//!
//! Every stochastic component (starter draw, random turn fallback, exploration,
//! replay sampling) draws from a [`SeededRng`]. Its state is the seed plus the
//! ChaCha word position, so it can be written into JSON and restored exactly.

use rand::{Error, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Clone, Debug)]
pub struct SeededRng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of 32-bit words consumed from the stream so far.
    pub fn word_pos(&self) -> u128 {
        self.inner.get_word_pos()
    }

    pub fn from_parts(seed: u64, word_pos: u128) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_word_pos(word_pos);
        Self { seed, inner }
    }
}

impl PartialEq for SeededRng {
    fn eq(&self, other: &Self) -> bool {
        self.seed == other.seed && self.word_pos() == other.word_pos()
    }
}

impl Eq for SeededRng {}

impl RngCore for SeededRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), Error> {
        self.inner.try_fill_bytes(dest)
    }
}

// Word positions are written as u64; a stream would need 2^64 draws to overflow.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RngRepr {
    seed: u64,
    word_pos: u64,
}

impl Serialize for SeededRng {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let word_pos = u64::try_from(self.word_pos()).map_err(serde::ser::Error::custom)?;
        RngRepr {
            seed: self.seed,
            word_pos,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SeededRng {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = RngRepr::deserialize(deserializer)?;
        Ok(SeededRng::from_parts(repr.seed, u128::from(repr.word_pos)))
    }
}
