//! SplitMix64, the stream generator behind every dataset and sampler.
//!
//! Stream `i` of a run seeded with `master_seed` starts from the state
//! `mix(master_seed + i * GOLDEN_GAMMA)`, i.e. the first output of a plain
//! generator at that state. Samples can be produced in any order or on any
//! number of threads and still land on identical bytes.
//!
//! Using `master_seed + i * GOLDEN_GAMMA` directly as the state would make
//! stream `i + 1` equal to stream `i` shifted by one draw, since each draw
//! advances the state by the same gamma.

pub const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(state: u64) -> Self {
        SplitMix64 { state }
    }

    /// Independent stream number `index` under `master_seed`.
    pub fn stream(master_seed: u64, index: u64) -> Self {
        let origin = master_seed.wrapping_add(index.wrapping_mul(GOLDEN_GAMMA));
        SplitMix64::new(SplitMix64::new(origin).next_u64())
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform word of `mask`'s width (low bits of the next output).
    #[inline]
    pub fn next_word(&mut self, mask: u64) -> u64 {
        self.next_u64() & mask
    }

    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}
