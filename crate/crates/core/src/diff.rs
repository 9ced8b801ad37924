//! XOR differences on blocks and keys, written `(0x0000,0x0040)` everywhere.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cipher::{rotl, Block};
use crate::error::{Error, Result};

/// Difference of a `(left, right)` block pair. Also used as the state of a
/// differential characteristic at a round boundary.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Difference {
    pub dl: u64,
    pub dr: u64,
}

/// A difference at a round boundary inside a characteristic.
pub type DiffState = Difference;

impl Difference {
    pub const ZERO: Difference = Difference { dl: 0, dr: 0 };

    pub const fn new(dl: u64, dr: u64) -> Self {
        Difference { dl, dr }
    }

    pub fn of(x: Block, y: Block) -> Self {
        Difference::new(x.0 ^ y.0, x.1 ^ y.1)
    }

    pub fn is_zero(&self) -> bool {
        self.dl == 0 && self.dr == 0
    }

    pub fn apply(&self, x: Block) -> Block {
        (x.0 ^ self.dl, x.1 ^ self.dr)
    }

    pub fn hamming_weight(&self) -> u32 {
        self.dl.count_ones() + self.dr.count_ones()
    }

    /// Rotates both words left by `i` positions.
    pub fn rotate(&self, i: i64, n: u32) -> Self {
        Difference::new(rotl(self.dl, i, n), rotl(self.dr, i, n))
    }

    pub fn fits(&self, n: u32) -> bool {
        let mask = crate::cipher::word_mask(n);
        self.dl & !mask == 0 && self.dr & !mask == 0
    }

    /// `(0x....,0x....)` with `n / 4` hex digits per word.
    pub fn display(&self, n: u32) -> String {
        let w = (n as usize).div_ceil(4);
        format!("(0x{:0w$x},0x{:0w$x})", self.dl, self.dr, w = w)
    }
}

impl fmt::Display for Difference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(0x{:04x},0x{:04x})", self.dl, self.dr)
    }
}

pub fn parse_hex_word(s: &str) -> Result<u64> {
    let t = s.trim();
    let digits = t
        .strip_prefix("0x")
        .or_else(|| t.strip_prefix("0X"))
        .unwrap_or(t);
    if digits.is_empty() {
        return Err(Error::Parse(format!("empty word in '{s}'")));
    }
    u64::from_str_radix(&digits.replace('_', ""), 16)
        .map_err(|e| Error::Parse(format!("bad hex word '{s}': {e}")))
}

fn split_words(s: &str) -> Vec<&str> {
    s.trim()
        .trim_start_matches(['(', '['])
        .trim_end_matches([')', ']'])
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|p| !p.is_empty())
        .collect()
}

impl FromStr for Difference {
    type Err = Error;

    /// Accepts `(0x0000,0x0040)`, `0x0000,0x0040` or `0 40`. Words are hex.
    fn from_str(s: &str) -> Result<Self> {
        match split_words(s).as_slice() {
            [l, r] => Ok(Difference::new(parse_hex_word(l)?, parse_hex_word(r)?)),
            _ => Err(Error::Parse(format!("expected two hex words, got '{s}'"))),
        }
    }
}

impl Serialize for Difference {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Difference {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

/// Master-key difference, words ordered like the master key `(k_{m-1}, ..., k_0)`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct KeyDifference {
    pub words: Vec<u64>,
}

impl KeyDifference {
    pub fn zero(m: usize) -> Self {
        KeyDifference { words: vec![0; m] }
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn apply(&self, key: &[u64]) -> Vec<u64> {
        key.iter().zip(&self.words).map(|(k, d)| k ^ d).collect()
    }
}

impl fmt::Display for KeyDifference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, w) in self.words.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "0x{w:04x}")?;
        }
        f.write_str(")")
    }
}

impl FromStr for KeyDifference {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let words = split_words(s)
            .into_iter()
            .map(parse_hex_word)
            .collect::<Result<Vec<_>>>()?;
        if words.is_empty() {
            return Err(Error::Parse(format!("empty key difference '{s}'")));
        }
        Ok(KeyDifference { words })
    }
}

impl Serialize for KeyDifference {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for KeyDifference {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}
