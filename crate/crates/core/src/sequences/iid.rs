use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{to_unit, FRACTION_BITS};

pub(super) const CAPACITY: u64 = 1 << 48;

/// Counter-addressable IID uniforms: point `i` reads words `2*d*i ..` of one
/// ChaCha8 keystream.
#[derive(Debug, Clone)]
pub(super) struct IidGenerator {
    dimension: usize,
    seed: u64,
}

impl IidGenerator {
    pub(super) fn new(dimension: usize, seed: u64) -> Self {
        Self { dimension, seed }
    }

    pub(super) fn fill_block(&self, first: u64, out: &mut [f64]) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_word_pos(2 * first as u128 * self.dimension as u128);
        for x in out.iter_mut() {
            // Odd 53-bit numerator keeps the value strictly inside (0, 1).
            *x = to_unit((rng.next_u64() >> (64 - FRACTION_BITS)) | 1);
        }
    }
}
