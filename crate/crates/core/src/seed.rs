//! Deterministic seed derivation.
//!
//! A master seed is split into independent per-trial seeds through a
//! splitmix64 finalizer chain, so any single trial can be reproduced in
//! isolation from `(master, stream, index)` without replaying the run.

/// splitmix64 finalizer.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for item `index` of stream `stream` under `master`.
pub fn derive_seed(master: u64, stream: u64, index: u64) -> u64 {
    mix(master ^ mix(stream ^ mix(index)))
}

/// Stream identifiers, fixed so reports stay reproducible across versions.
pub mod streams {
    /// Per-setting POVMs inside one measurement assignment.
    pub const POVM_SETTING: u64 = 0x01;
    /// Per-(step, setting) instruments inside one sequential assignment.
    pub const INSTRUMENT_STEP: u64 = 0x02;
    /// Alice's side of a scenario.
    pub const ALICE: u64 = 0x0A;
    /// Bob's side of a scenario.
    pub const BOB: u64 = 0x0B;
    pub const DUALITY: u64 = 0x10;
    pub const BEHAVIOR: u64 = 0x11;
    pub const SEQUENTIAL: u64 = 0x12;
    pub const MULTICOPY: u64 = 0x13;
}
