//! `verify`: designers' test vectors plus quick self-checks against
//! brute-force references.

use std::collections::BTreeMap;

use sha2::{Digest, Sha256};
use simonnd_core::dataset::generate;
use simonnd_core::dataset::DatasetHeader;
use simonnd_core::sweep::{canonical_representatives, enum_differences};
use simonnd_core::{
    delta_r_prev, partial_delta_r2, round_dp, search_characteristics, CipherId, Constraint,
    DatasetParams, DiffState, Difference, SplitMix64,
};

type Vector = (CipherId, [u64; 4], (u64, u64), (u64, u64));

const K32: [u64; 4] = [0x1918, 0x1110, 0x0908, 0x0100];
const K64: [u64; 4] = [0x1b1a1918, 0x13121110, 0x0b0a0908, 0x03020100];

pub const TEST_VECTORS: [Vector; 4] = [
    (CipherId::Simon32_64, K32, (0x6565, 0x6877), (0xc69b, 0xe9bb)),
    (CipherId::Simon64_128, K64, (0x656b696c, 0x20646e75), (0x44c8fc20, 0xb9dfa07a)),
    (CipherId::Simeck32_64, K32, (0x6565, 0x6877), (0x770d, 0x2c76)),
    (CipherId::Simeck64_128, K64, (0x656b696c, 0x20646e75), (0x45ce6902, 0x5f7ab7ed)),
];

/// SIMON32/64, 9 rounds, Δp (0x0000,0x0040), 8 pairs, format 3, 100 samples, seed 42.
const GOLDEN_DIGEST: &str = "47ea386f75db91e2724385b7dcf01488a875016de091541e9abe0438cabd8dc9";

fn report(name: &str, res: Result<String, String>) -> bool {
    match res {
        Ok(d) => {
            println!("PASS {name}: {d}");
            true
        }
        Err(d) => {
            println!("FAIL {name}: {d}");
            false
        }
    }
}

fn vector((id, key, pt, ct): Vector) -> Result<String, String> {
    let s = id.spec();
    let rk = s.expand_key(&key, s.total_rounds).map_err(|e| e.to_string())?;
    let got = s.encrypt(pt, &rk, s.total_rounds).map_err(|e| e.to_string())?;
    let back = s.decrypt(ct, &rk, s.total_rounds).map_err(|e| e.to_string())?;
    let w = s.n as usize / 4;
    let hex = |(l, r): (u64, u64)| format!("{l:0w$x} {r:0w$x}");
    if got != ct {
        return Err(format!("got {}, want {}", hex(got), hex(ct)));
    }
    if back != pt {
        return Err(format!("decryption gave {}", hex(back)));
    }
    Ok(hex(got))
}

fn features() -> Result<String, String> {
    for id in CipherId::ALL {
        let s = id.spec();
        let mut rng = SplitMix64::new(id.code() as u64);
        for _ in 0..2000 {
            let key: Vec<u64> = (0..s.m).map(|_| rng.next_word(s.mask())).collect();
            let rounds = 2 + (rng.next_u64() % (s.total_rounds as u64 - 1)) as usize;
            let rk = s.expand_key(&key, rounds).map_err(|e| e.to_string())?;
            let p = (rng.next_word(s.mask()), rng.next_word(s.mask()));
            let p2 = (rng.next_word(s.mask()), rng.next_word(s.mask()));
            let t = s.trace(p, &rk, rounds).map_err(|e| e.to_string())?;
            let t2 = s.trace(p2, &rk, rounds).map_err(|e| e.to_string())?;
            let (c, c2) = (t.output(), t2.output());
            let (v, m) = partial_delta_r2(&s, c, c2);
            let r1 = t.states[rounds - 1].1 ^ t2.states[rounds - 1].1;
            let r2 = t.states[rounds - 2].1 ^ t2.states[rounds - 2].1;
            if delta_r_prev(&s, c, c2) != r1 || v != r2 & m {
                return Err(format!("{id}: mismatch at {rounds} rounds"));
            }
        }
    }
    Ok("2000 traces per variant".into())
}

fn round_dp_vs_ddt() -> Result<String, String> {
    let mut rng = SplitMix64::new(9);
    for id in [CipherId::Simon32_64, CipherId::Simeck32_64] {
        let s = id.spec();
        for _ in 0..16 {
            let alpha = rng.next_word(0xffff);
            let mut row = BTreeMap::<u64, u32>::new();
            for x in 0..1u64 << 16 {
                *row.entry(s.f(x) ^ s.f(x ^ alpha)).or_default() += 1;
            }
            for beta in 0..1u64 << 16 {
                let dp = round_dp(&s, alpha, beta).map_err(|e| e.to_string())?;
                let want = row.get(&beta).map(|&c| 16 - c.trailing_zeros());
                if dp.valid.then_some(dp.weight) != want {
                    return Err(format!("{id} α={alpha:#06x} β={beta:#06x}"));
                }
            }
        }
    }
    Ok("16 random α per 16-bit variant, all 2^16 β".into())
}

fn enumeration() -> Result<String, String> {
    let counts: Vec<usize> = (1..=3)
        .map(|k| enum_differences(k, 32).map(|v| v.len()))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let classes = canonical_representatives(&enum_differences(1, 32).unwrap(), 16).len();
    if counts != [32, 528, 5488] || classes != 2 {
        return Err(format!("counts {counts:?}, single-bit classes {classes}"));
    }
    Ok("32 / 528 / 5488, 2 single-bit classes".into())
}

fn search() -> Result<String, String> {
    let s = CipherId::Simon32_64.spec();
    let r = search_characteristics(&s, 3, Constraint::Output(DiffState::new(0, 1)), 8)
        .map_err(|e| e.to_string())?;
    if r.counts != BTreeMap::from([(8, 20)]) {
        return Err(format!("{:?}", r.counts));
    }
    Ok("3-round SIMON32 into (0x0000,0x0001): 20 at 2^-8".into())
}

fn golden() -> Result<String, String> {
    let p = DatasetParams::new(CipherId::Simon32_64, 9, Difference::new(0, 0x40));
    let h = DatasetHeader::for_params(&p, 42, 100);
    let mut bytes = h.encode();
    for s in generate(&p, 100, 42).map_err(|e| e.to_string())? {
        for w in s.words {
            bytes.extend_from_slice(&w.to_le_bytes());
        }
        bytes.push(s.label);
    }
    let d = format!("{:x}", Sha256::digest(&bytes));
    if d != GOLDEN_DIGEST {
        return Err(format!("digest {d}"));
    }
    Ok("golden dataset digest".into())
}

pub fn run(test_vectors: bool, oracles: bool) -> bool {
    let all = !test_vectors && !oracles;
    let mut ok = true;
    if test_vectors || all {
        for v in TEST_VECTORS {
            ok &= report(&format!("test vector {}", v.0), vector(v));
        }
    }
    if oracles || all {
        ok &= report("derived features vs trace", features());
        ok &= report("round_dp vs exhaustive DDT", round_dp_vs_ddt());
        ok &= report("difference enumeration", enumeration());
        ok &= report("characteristic search", search());
        ok &= report("dataset determinism", golden());
    }
    ok
}
