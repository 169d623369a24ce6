//! Multiplicative-weights learners: dense, amortized and sliding-buffer.

mod mw1;
mod mw2;
mod mw3;

pub use mw1::Mw1;
pub use mw2::Mw2;
pub use mw3::{Activation, EstimatorScale, Mw3, SlidingBuffer};

/// Memo of `exp(rate * loss)` for a fixed `rate`; losses drawn from a finite
/// game or a 0/1 table repeat constantly.
#[derive(Clone, Debug)]
pub(crate) struct ExpCache {
    rate: f64,
    keys: [u64; 16],
    values: [f64; 16],
}

impl ExpCache {
    // a NaN pattern; cached losses are always validated finite first
    const EMPTY: u64 = u64::MAX;

    pub(crate) fn new(rate: f64) -> Self {
        ExpCache {
            rate,
            keys: [Self::EMPTY; 16],
            values: [0.0; 16],
        }
    }

    #[inline]
    pub(crate) fn get(&mut self, loss: f64) -> f64 {
        let bits = loss.to_bits();
        let slot = (bits.wrapping_mul(0x9e37_79b9_7f4a_7c15) >> 60) as usize;
        if self.keys[slot] != bits {
            self.keys[slot] = bits;
            self.values[slot] = (self.rate * loss).exp();
        }
        self.values[slot]
    }
}
