//! Parametric SIMON-like Feistel ciphers.
//!
//! Every variant in scope shares the round structure
//!
//! ```text
//! L' = R ^ f(L) ^ k,   R' = L,   f(x) = (x <<< a & x <<< b) ^ x <<< c
//! ```
//!
//! and differs only in word size, rotation amounts and key schedule. Words
//! live in `u64` containers with explicit masking so one code path covers
//! every word size. Bit `n - 1` is the most significant bit of a word.
//!
//! Key schedule constants follow the designers' published specifications:
//!
//! * SIMON with `m = 4` key words uses
//!   `k[i] = !k[i-4] ^ t ^ (t >>> 1) ^ z[(i-4) % 62] ^ 3` where
//!   `t = (k[i-1] >>> 3) ^ k[i-3]`. SIMON32/64 uses the sequence `z0`,
//!   SIMON64/128 uses `z3` (see [`Z_SEQUENCES`]).
//! * SIMECK runs its own round function over the key state
//!   `(t2, t1, t0, k0)` with round constant `2^n - 4 ^ z_i`, where `z_i` is
//!   bit `i` of an m-sequence (`x^5 + x^2 + 1` for 32/64, `x^6 + x + 1` for
//!   64/128, both seeded with all ones).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A `(left, right)` pair of words: a plaintext, ciphertext or round state.
pub type Block = (u64, u64);

/// SIMON `z` sequences, leftmost bit first.
pub const Z_SEQUENCES: [&str; 5] = [
    "11111010001001010110000111001101111101000100101011000011100110",
    "10001110111110010011000010110101000111011111001001100001011010",
    "10101111011100000011010010011000101000010001111110010110110011",
    "11011011101011000110010111100000010010001010011100110100001111",
    "11010001111001101011011000100000010111000011001010010011101111",
];

/// SIMECK32/64 round-constant bits, LSB is round 0.
pub const SIMECK32_SEQUENCE: u64 = 0x9A42_BB1F;
/// SIMECK64/128 round-constant bits, LSB is round 0.
pub const SIMECK64_SEQUENCE: u64 = 0x938_BCA3_083F;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Schedule {
    SimonLinear,
    SimeckReuse,
}

/// The four variants with a stable numeric id (the dataset header uses it).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CipherId {
    Simon32_64 = 0,
    Simon64_128 = 1,
    Simeck32_64 = 2,
    Simeck64_128 = 3,
}

impl CipherId {
    pub const ALL: [CipherId; 4] = [
        CipherId::Simon32_64,
        CipherId::Simon64_128,
        CipherId::Simeck32_64,
        CipherId::Simeck64_128,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Result<Self> {
        Self::ALL
            .get(code as usize)
            .copied()
            .ok_or_else(|| Error::Parse(format!("unknown cipher id {code}")))
    }

    pub fn name(self) -> &'static str {
        match self {
            CipherId::Simon32_64 => "simon32/64",
            CipherId::Simon64_128 => "simon64/128",
            CipherId::Simeck32_64 => "simeck32/64",
            CipherId::Simeck64_128 => "simeck64/128",
        }
    }

    pub fn spec(self) -> CipherSpec {
        match self {
            CipherId::Simon32_64 => CipherSpec {
                id: self,
                n: 16,
                a: 8,
                b: 1,
                c: 2,
                m: 4,
                total_rounds: 32,
                schedule: Schedule::SimonLinear,
            },
            CipherId::Simon64_128 => CipherSpec {
                id: self,
                n: 32,
                a: 8,
                b: 1,
                c: 2,
                m: 4,
                total_rounds: 44,
                schedule: Schedule::SimonLinear,
            },
            CipherId::Simeck32_64 => CipherSpec {
                id: self,
                n: 16,
                a: 5,
                b: 0,
                c: 1,
                m: 4,
                total_rounds: 32,
                schedule: Schedule::SimeckReuse,
            },
            CipherId::Simeck64_128 => CipherSpec {
                id: self,
                n: 32,
                a: 5,
                b: 0,
                c: 1,
                m: 4,
                total_rounds: 44,
                schedule: Schedule::SimeckReuse,
            },
        }
    }
}

impl fmt::Display for CipherId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CipherId {
    type Err = Error;

    /// Accepts `simon32`, `simon32/64`, `simon32_64` and friends, case-insensitive.
    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s
            .to_ascii_lowercase()
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect();
        match norm.as_str() {
            "simon32" | "simon3264" => Ok(CipherId::Simon32_64),
            "simon64" | "simon64128" => Ok(CipherId::Simon64_128),
            "simeck32" | "simeck3264" => Ok(CipherId::Simeck32_64),
            "simeck64" | "simeck64128" => Ok(CipherId::Simeck64_128),
            _ => Err(Error::Parse(format!("unknown cipher '{s}'"))),
        }
    }
}

impl Serialize for CipherId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for CipherId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Parameters of one SIMON-like variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CipherSpec {
    pub id: CipherId,
    /// Word size in bits.
    pub n: u32,
    pub a: u32,
    pub b: u32,
    pub c: u32,
    /// Number of master key words.
    pub m: usize,
    pub total_rounds: usize,
    pub schedule: Schedule,
}

impl CipherSpec {
    pub fn simon32_64() -> Self {
        CipherId::Simon32_64.spec()
    }

    pub fn simon64_128() -> Self {
        CipherId::Simon64_128.spec()
    }

    pub fn simeck32_64() -> Self {
        CipherId::Simeck32_64.spec()
    }

    pub fn simeck64_128() -> Self {
        CipherId::Simeck64_128.spec()
    }

    pub fn name(&self) -> &'static str {
        self.id.name()
    }

    #[inline]
    pub fn mask(&self) -> u64 {
        word_mask(self.n)
    }

    #[inline]
    pub fn rotl(&self, x: u64, amount: i64) -> u64 {
        rotl(x, amount, self.n)
    }

    /// The round function `(x <<< a & x <<< b) ^ x <<< c`.
    #[inline]
    pub fn f(&self, x: u64) -> u64 {
        let (a, b, c) = (self.a, self.b, self.c);
        match self.n {
            16 => {
                let x = x as u16;
                ((x.rotate_left(a) & x.rotate_left(b)) ^ x.rotate_left(c)) as u64
            }
            32 => {
                let x = x as u32;
                ((x.rotate_left(a) & x.rotate_left(b)) ^ x.rotate_left(c)) as u64
            }
            64 => (x.rotate_left(a) & x.rotate_left(b)) ^ x.rotate_left(c),
            n => (rotl_u(x, a, n) & rotl_u(x, b, n)) ^ rotl_u(x, c, n),
        }
    }

    /// Checks the structural invariants every in-scope variant satisfies.
    pub fn validate(&self) -> Result<()> {
        if !(1..=64).contains(&self.n) {
            return Err(Error::UnsupportedSpec(format!("word size {}", self.n)));
        }
        if self.a >= self.n || self.b >= self.n || self.c >= self.n || self.a == self.b {
            return Err(Error::UnsupportedSpec(format!(
                "rotations ({},{},{}) for n = {}",
                self.a, self.b, self.c, self.n
            )));
        }
        Ok(())
    }

    pub fn check_word(&self, w: u64) -> Result<u64> {
        if w & !self.mask() != 0 {
            return Err(Error::Shape(format!(
                "word {w:#x} does not fit in {} bits",
                self.n
            )));
        }
        Ok(w)
    }

    /// Expands `master` (given as `(k_{m-1}, ..., k_0)`, the order test
    /// vectors are printed in) into `rounds` round keys.
    pub fn expand_key(&self, master: &[u64], rounds: usize) -> Result<RoundKeys> {
        if master.len() != self.m {
            return Err(Error::Shape(format!(
                "{} expects {} key words, got {}",
                self.name(),
                self.m,
                master.len()
            )));
        }
        if rounds > self.total_rounds {
            return Err(Error::Range(format!(
                "{} has {} rounds, {rounds} requested",
                self.name(),
                self.total_rounds
            )));
        }
        for &w in master {
            self.check_word(w)?;
        }
        // k_0 first
        let words: Vec<u64> = master.iter().rev().copied().collect();
        Ok(RoundKeys {
            keys: match self.schedule {
                Schedule::SimonLinear => self.simon_schedule(&words, rounds),
                Schedule::SimeckReuse => self.simeck_schedule(&words, rounds),
            },
        })
    }

    fn simon_schedule(&self, words: &[u64], rounds: usize) -> Vec<u64> {
        let z = Z_SEQUENCES[self.simon_z_index()].as_bytes();
        let mask = self.mask();
        let m = self.m;
        let mut k: Vec<u64> = words.iter().take(rounds).copied().collect();
        for i in m..rounds {
            let mut t = self.rotl(k[i - 1], -3);
            if m == 4 {
                t ^= k[i - 3];
            }
            t ^= self.rotl(t, -1);
            let zbit = (z[(i - m) % 62] - b'0') as u64;
            k.push((!k[i - m] & mask) ^ t ^ zbit ^ 3);
        }
        k
    }

    fn simon_z_index(&self) -> usize {
        match (self.n, self.m) {
            (16, 4) | (24, 3) => 0,
            (24, 4) => 1,
            (32, 3) | (48, 2) | (64, 2) => 2,
            (32, 4) | (48, 3) | (64, 3) => 3,
            _ => 4,
        }
    }

    fn simeck_schedule(&self, words: &[u64], rounds: usize) -> Vec<u64> {
        let seq = if self.n == 16 {
            SIMECK32_SEQUENCE
        } else {
            SIMECK64_SEQUENCE
        };
        let constant = self.mask() ^ 3;
        // state = (k_i, t0, t1, t2)
        let mut state = [words[0], words[1], words[2], words[3]];
        let mut keys = Vec::with_capacity(rounds);
        for i in 0..rounds {
            keys.push(state[0]);
            let next = state[0] ^ self.f(state[1]) ^ constant ^ ((seq >> i) & 1);
            state = [state[1], state[2], state[3], next];
        }
        keys
    }

    #[inline]
    fn round(&self, (l, r): Block, k: u64) -> Block {
        (r ^ self.f(l) ^ k, l)
    }

    #[inline]
    fn unround(&self, (l, r): Block, k: u64) -> Block {
        (r, l ^ self.f(r) ^ k)
    }

    fn check_rounds(&self, rks: &RoundKeys, rounds: usize) -> Result<()> {
        if rks.len() != rounds {
            return Err(Error::Shape(format!(
                "{} round keys supplied for {rounds} rounds",
                rks.len()
            )));
        }
        Ok(())
    }

    pub fn encrypt(&self, pt: Block, rks: &RoundKeys, rounds: usize) -> Result<Block> {
        self.check_rounds(rks, rounds)?;
        Ok(self.encrypt_with(pt, rks.as_slice()))
    }

    pub fn decrypt(&self, ct: Block, rks: &RoundKeys, rounds: usize) -> Result<Block> {
        self.check_rounds(rks, rounds)?;
        Ok(rks.keys.iter().rev().fold(ct, |s, &k| self.unround(s, k)))
    }

    /// Encrypts with every key in `keys`, one round each. Unchecked hot
    /// path: words must already fit in `n` bits.
    #[inline]
    pub fn encrypt_with(&self, pt: Block, keys: &[u64]) -> Block {
        let (a, b, c) = (self.a, self.b, self.c);
        macro_rules! native {
            ($t:ty) => {{
                let (mut l, mut r) = (pt.0 as $t, pt.1 as $t);
                for &k in keys {
                    let f = (l.rotate_left(a) & l.rotate_left(b)) ^ l.rotate_left(c);
                    (l, r) = (r ^ f ^ k as $t, l);
                }
                (l as u64, r as u64)
            }};
        }
        match self.n {
            16 => native!(u16),
            32 => native!(u32),
            64 => native!(u64),
            _ => keys.iter().fold(pt, |s, &k| self.round(s, k)),
        }
    }

    pub fn trace(&self, pt: Block, rks: &RoundKeys, rounds: usize) -> Result<StateTrace> {
        self.check_rounds(rks, rounds)?;
        let mut states = Vec::with_capacity(rounds + 1);
        states.push(pt);
        let mut s = pt;
        for &k in &rks.keys {
            s = self.round(s, k);
            states.push(s);
        }
        Ok(StateTrace { states })
    }
}

/// Round keys; index 0 is used in the first round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundKeys {
    keys: Vec<u64>,
}

impl RoundKeys {
    pub fn from_vec(keys: Vec<u64>) -> Self {
        RoundKeys { keys }
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.keys
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }
}

/// Round states of one encryption; entry `i` is the state after `i` rounds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateTrace {
    pub states: Vec<Block>,
}

impl StateTrace {
    pub fn output(&self) -> Block {
        *self.states.last().expect("trace always holds the plaintext")
    }
}

#[inline]
pub fn word_mask(n: u32) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

#[inline]
fn rotl_u(x: u64, amount: u32, n: u32) -> u64 {
    let amount = amount % n;
    if amount == 0 {
        return x;
    }
    ((x << amount) | (x >> (n - amount))) & word_mask(n)
}

/// Circular left shift of an `n`-bit word. Negative amounts rotate right.
#[inline]
pub fn rotl(x: u64, amount: i64, n: u32) -> u64 {
    rotl_u(x & word_mask(n), amount.rem_euclid(n as i64) as u32, n)
}
