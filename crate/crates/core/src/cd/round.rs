//! Exact XOR-differential behaviour of `f(x) = (x <<< a & x <<< b) ^ x <<< c`.
//!
//! For an input difference `α` the set of reachable output differences is an
//! affine space `rotl(α, c) ^ D(α)` where `D(α)` is the linear span described
//! by two masks:
//!
//! * `varibits = rotl(α, a) | rotl(α, b)`: AND-term bits that can flip;
//! * `doublebits = rotl(α, b) & !rotl(α, a) & rotl(α, 2a - b)`: bits that
//!   must equal the bit `a - b` positions below them.
//!
//! Every reachable output is equally likely with weight
//! `hw(varibits ^ doublebits)`. When `α` is all ones, the reachable set is
//! every even-weight `δ` instead, with weight `n - 1`. This needs
//! `gcd(n, a - b) = 1`, which holds for every SIMON and SIMECK word size.

use serde::{Deserialize, Serialize};

use crate::cipher::CipherSpec;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DpResult {
    pub valid: bool,
    /// `-log2` of the transition probability; meaningful when `valid`.
    pub weight: u32,
}

impl DpResult {
    pub const INVALID: DpResult = DpResult {
        valid: false,
        weight: 0,
    };

    pub fn probability(&self) -> f64 {
        if self.valid {
            (-(self.weight as f64)).exp2()
        } else {
            0.0
        }
    }
}

fn gcd(mut x: u32, mut y: u32) -> u32 {
    while y != 0 {
        (x, y) = (y, x % y);
    }
    x
}

/// Round-function differential model for one cipher.
#[derive(Debug, Clone, Copy)]
pub struct RoundModel {
    spec: CipherSpec,
    /// `(a - b) mod n`
    shift: u32,
}

/// Output space of one input difference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OutputSpace {
    pub alpha: u64,
    /// `rotl(α, c)`: the linear part, always present.
    pub offset: u64,
    pub varibits: u64,
    pub doublebits: u64,
    pub weight: u32,
    all_ones: bool,
}

impl OutputSpace {
    /// Number of reachable outputs, `2^weight`.
    pub fn len(&self) -> u64 {
        1u64 << self.weight
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl RoundModel {
    pub fn new(spec: &CipherSpec) -> Result<Self> {
        spec.validate()?;
        let shift = (spec.a + spec.n - spec.b) % spec.n;
        if gcd(spec.n, shift) != 1 {
            return Err(Error::UnsupportedSpec(format!(
                "gcd(n, a - b) = gcd({}, {shift}) != 1",
                spec.n
            )));
        }
        Ok(RoundModel { spec: *spec, shift })
    }

    pub fn spec(&self) -> &CipherSpec {
        &self.spec
    }

    #[inline]
    pub fn space(&self, alpha: u64) -> OutputSpace {
        let s = &self.spec;
        let mask = s.mask();
        let (a, b) = (s.a as i64, s.b as i64);
        let offset = s.rotl(alpha, s.c as i64);
        if alpha == mask {
            return OutputSpace {
                alpha,
                offset,
                varibits: mask,
                doublebits: 0,
                weight: s.n - 1,
                all_ones: true,
            };
        }
        let ra = s.rotl(alpha, a);
        let rb = s.rotl(alpha, b);
        let varibits = ra | rb;
        let doublebits = rb & !ra & s.rotl(alpha, 2 * a - b);
        OutputSpace {
            alpha,
            offset,
            varibits,
            doublebits,
            weight: (varibits ^ doublebits).count_ones(),
            all_ones: false,
        }
    }

    /// Probability of `α -> β` through the round function.
    #[inline]
    pub fn dp(&self, alpha: u64, beta: u64) -> DpResult {
        let sp = self.space(alpha);
        let delta = beta ^ sp.offset;
        let valid = if sp.all_ones {
            delta.count_ones().is_multiple_of(2)
        } else {
            delta & !sp.varibits == 0
                && (delta ^ self.spec.rotl(delta, self.shift as i64)) & sp.doublebits == 0
        };
        if valid {
            DpResult {
                valid,
                weight: sp.weight,
            }
        } else {
            DpResult::INVALID
        }
    }

    /// A basis of the linear part of the output space, one vector per free bit.
    pub fn basis(&self, sp: &OutputSpace) -> Vec<u64> {
        let n = self.spec.n;
        if sp.all_ones {
            return (0..n - 1)
                .map(|i| self.spec.rotl(0b11, i as i64))
                .collect();
        }
        let free = sp.varibits & !sp.doublebits;
        let mut basis = Vec::with_capacity(sp.weight as usize);
        for i in 0..n {
            if free >> i & 1 == 0 {
                continue;
            }
            // a doubled bit copies the bit `shift` positions below it
            let mut v = 1u64 << i;
            let mut k = (i + self.shift) % n;
            while sp.doublebits >> k & 1 == 1 {
                v |= 1u64 << k;
                k = (k + self.shift) % n;
            }
            basis.push(v);
        }
        basis
    }

    /// Calls `visit(β)` for every reachable output of `α` (Gray-code order).
    #[inline]
    pub fn for_each_output(&self, sp: &OutputSpace, mut visit: impl FnMut(u64)) {
        let basis = self.basis(sp);
        let mut beta = sp.offset;
        visit(beta);
        for g in 1u64..(1u64 << basis.len()) {
            beta ^= basis[g.trailing_zeros() as usize];
            visit(beta);
        }
    }

    /// Every `(β, weight)` reachable from `α` with weight at most `cap`,
    /// sorted by `β`.
    pub fn enumerate_outputs(&self, alpha: u64, cap: u32) -> Vec<(u64, u32)> {
        let sp = self.space(alpha);
        if sp.weight > cap {
            return Vec::new();
        }
        let mut out = Vec::with_capacity(sp.len() as usize);
        self.for_each_output(&sp, |b| out.push((b, sp.weight)));
        out.sort_unstable();
        out
    }
}

/// Closed-form `Pr[f(x) ^ f(x ^ α) = β]`.
pub fn round_dp(spec: &CipherSpec, alpha: u64, beta: u64) -> Result<DpResult> {
    Ok(RoundModel::new(spec)?.dp(alpha, beta))
}

pub fn enumerate_outputs(spec: &CipherSpec, alpha: u64, cap: u32) -> Result<Vec<(u64, u32)>> {
    Ok(RoundModel::new(spec)?.enumerate_outputs(alpha, cap))
}
