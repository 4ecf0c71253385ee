//! Derivation of per-stage chain seeds from one base seed.
//!
//! `derive_seed(base, stage, index)` is
//! `splitmix64(base ^ fnv1a64(stage) ^ splitmix64(index))`, where `fnv1a64`
//! is the 64-bit FNV-1a hash of the stage name's UTF-8 bytes and
//! `splitmix64` is the SplitMix64 output function. The mapping is fixed so
//! that runs reproduce across platforms and releases.

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_seed(base: u64, stage: &str, index: u64) -> u64 {
    splitmix64(base ^ fnv1a64(stage.as_bytes()) ^ splitmix64(index))
}
