//! Straight-line reference implementations, written from the cipher
//! definitions without touching the crate's internals.
#![allow(dead_code)]

use std::collections::BTreeMap;

pub const Z0: &str = "11111010001001010110000111001101111101000100101011000011100110";
pub const Z3: &str = "11011011101011000110010111100000010010001010011100110100001111";

pub fn rol(x: u64, r: u32, n: u32) -> u64 {
    let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let r = r % n;
    if r == 0 {
        return x & mask;
    }
    ((x << r) | (x >> (n - r))) & mask
}

pub fn ror(x: u64, r: u32, n: u32) -> u64 {
    rol(x, n - r % n, n)
}

pub fn f(x: u64, n: u32, (a, b, c): (u32, u32, u32)) -> u64 {
    (rol(x, a, n) & rol(x, b, n)) ^ rol(x, c, n)
}

/// Round keys of SIMON with four key words; `master` is `(k3, k2, k1, k0)`.
pub fn simon_keys(master: [u64; 4], n: u32, z: &str, rounds: usize) -> Vec<u64> {
    let mask = (1u64 << n) - 1;
    let z = z.as_bytes();
    let mut k = vec![master[3], master[2], master[1], master[0]];
    for i in 4..rounds {
        let mut t = ror(k[i - 1], 3, n) ^ k[i - 3];
        t ^= ror(t, 1, n);
        let zb = (z[(i - 4) % 62] - b'0') as u64;
        k.push((!k[i - 4] & mask) ^ t ^ zb ^ 3);
    }
    k.truncate(rounds);
    k
}

pub fn simeck_keys(master: [u64; 4], n: u32, seq: u64, rounds: usize) -> Vec<u64> {
    let mask = (1u64 << n) - 1;
    let (mut k, mut t0, mut t1, mut t2) = (master[3], master[2], master[1], master[0]);
    let mut out = Vec::new();
    for i in 0..rounds {
        out.push(k);
        let nk = k ^ f(t0, n, (5, 0, 1)) ^ (mask ^ 3) ^ ((seq >> i) & 1);
        (k, t0, t1, t2) = (t0, t1, t2, nk);
    }
    out
}

pub fn encrypt(pt: (u64, u64), keys: &[u64], n: u32, abc: (u32, u32, u32)) -> (u64, u64) {
    let (mut l, mut r) = pt;
    for &k in keys {
        let t = r ^ f(l, n, abc) ^ k;
        r = l;
        l = t;
    }
    (l, r)
}

/// Full DDT row of the round function for input difference `alpha` over
/// `n`-bit words: output difference -> number of inputs.
pub fn ddt_row(alpha: u64, n: u32, abc: (u32, u32, u32)) -> BTreeMap<u64, u64> {
    let mut row = BTreeMap::new();
    for x in 0..(1u64 << n) {
        *row.entry(f(x, n, abc) ^ f(x ^ alpha, n, abc)).or_insert(0) += 1;
    }
    row
}

/// Weight of a DDT entry, which must be a power of two.
pub fn ddt_weight(count: u64, n: u32) -> u32 {
    assert!(count.is_power_of_two());
    n - count.trailing_zeros()
}
