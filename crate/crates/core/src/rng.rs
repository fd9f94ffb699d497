//! Counter-based random streams.
//!
//! Every random draw in the simulator is taken from a short stream keyed on
//! `(seed, frame, row, col, tag)`. Streams do not share state, so results do
//! not depend on the order (or thread) in which pixels are evaluated.

use rand_core::RngCore;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Purpose of a draw. Each tag selects an independent stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum DrawTag {
    PnuGaussian = 1,
    DarkGaussian = 2,
    HotPixelScore = 3,
    FpnOffset = 4,
    PhotoElectrons = 5,
    DarkElectrons = 6,
    ReadNoise = 7,
}

/// A stream of 64-bit words `mix(key ^ mix(counter))`, counter starting at 0.
#[derive(Debug, Clone)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

impl CounterRng {
    pub fn new(seed: u64, frame: u64, row: usize, col: usize, tag: DrawTag) -> Self {
        let mut key = mix64(seed);
        key = mix64(key ^ frame);
        key = mix64(key ^ (((row as u64) << 32) | col as u64));
        key = mix64(key ^ (tag as u64).wrapping_mul(GOLDEN));
        Self { key, counter: 0 }
    }
}

impl RngCore for CounterRng {
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        let c = self.counter;
        self.counter = self.counter.wrapping_add(1);
        mix64(self.key ^ mix64(c))
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        for chunk in dst.chunks_mut(8) {
            let bytes = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&bytes[..chunk.len()]);
        }
    }
}
