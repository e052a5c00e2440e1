//! Seed derivation. Every stream is a SplitMix64 fold of its parts, so any
//! run can be replayed from `(master_seed, instance_index, arm, aug_seed)`.

const SALT: u64 = 0x5245_505f_4f50_5431; // "REP_OPT1"

pub const ARM_BASE: u64 = 0x6261_7365; // "base"
pub const ARM_AUG: u64 = 0x0061_7567; // "aug"

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn hash64(parts: &[u64]) -> u64 {
    parts.iter().fold(SALT, |h, &p| splitmix64(h ^ p))
}

pub fn instance_seed(master_seed: u64, instance_index: u64) -> u64 {
    hash64(&[master_seed, instance_index])
}

pub fn arm_seed(instance_seed: u64, arm: u64, aug_seed: u64) -> u64 {
    hash64(&[instance_seed, arm, aug_seed])
}
