//! Counter-based Gaussian stream for reproducible parallel Monte Carlo.
//!
//! Every normal pair is a pure function of (seed, path, step, component), so
//! paths can be generated in any order and on any number of threads with
//! bit-identical results, and coarse/fine lattices built from the same key
//! agree without jump-ahead bookkeeping.

/// Philox 2x64 round constant and Weyl key increment.
const PHILOX_M: u64 = 0xD2B7_4407_B1CE_6E93;
const PHILOX_W: u64 = 0x9E37_79B9_7F4A_7C15;
const ROUNDS: u32 = 10;

/// Philox 2x64-10 block: bijective mix of a 128-bit counter under a 64-bit key.
pub fn philox2x64(counter: [u64; 2], key: u64) -> [u64; 2] {
    let [mut x0, mut x1] = counter;
    let mut k = key;
    for _ in 0..ROUNDS {
        let prod = (x0 as u128) * (PHILOX_M as u128);
        let hi = (prod >> 64) as u64;
        let lo = prod as u64;
        x0 = hi ^ k ^ x1;
        x1 = lo;
        k = k.wrapping_add(PHILOX_W);
    }
    [x0, x1]
}

#[inline]
fn to_open01(bits: u64) -> f64 {
    // 53-bit mantissa mapped into (0, 1]; never zero so ln() is safe.
    ((bits >> 11) as f64 + 1.0) * (1.0 / (1u64 << 53) as f64)
}

#[inline]
fn to_half_open01(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Two independent standard normals keyed by (seed, path, step, component),
/// via one Philox block and the Box-Muller transform.
///
/// The step index must fit in 48 bits and the component index in 16.
pub fn normal_pair(seed: u64, path: u64, step: u64, component: u32) -> (f64, f64) {
    debug_assert!(step < 1 << 48);
    debug_assert!(component < 1 << 16);
    let ctr = [path, (step << 16) | component as u64];
    let [a, b] = philox2x64(ctr, seed);
    let u1 = to_open01(a);
    let u2 = to_half_open01(b);
    let r = (-2.0 * u1.ln()).sqrt();
    let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
    (r * c, r * s)
}
