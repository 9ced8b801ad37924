//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

mod common;

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use common::*;
use sha2::{Digest, Sha256};
use simonnd_core::dataset::generate_to_file;
use simonnd_core::sweep::enum_differences;
use simonnd_core::{
    delta_r_prev, enumerate_outputs, most_likely_output, partial_delta_r2, round_dp,
    search_characteristics, CipherId, CipherSpec, Constraint, DatasetParams, DiffState,
    Difference, SplitMix64,
};

type Check = Result<String, String>;

fn criterion(name: &str, budget: Option<Duration>, run: impl FnOnce() -> Check) -> bool {
    let t = Instant::now();
    let res = run();
    let took = t.elapsed();
    let (ok, detail) = match (res, budget) {
        (Ok(d), Some(b)) if took > b => (false, format!("{d}; over budget {b:?}")),
        (Ok(d), _) => (true, d),
        (Err(d), _) => (false, d),
    };
    println!(
        "{} {name} ({:.2}s): {detail}",
        if ok { "PASS" } else { "FAIL" },
        took.as_secs_f64()
    );
    ok
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn cipher_conformance() -> Check {
    const K32: [u64; 4] = [0x1918, 0x1110, 0x0908, 0x0100];
    const K64: [u64; 4] = [0x1b1a1918, 0x13121110, 0x0b0a0908, 0x03020100];
    let vectors = [
        (CipherId::Simon32_64, K32, (0x6565, 0x6877), (0xc69b, 0xe9bb)),
        (CipherId::Simon64_128, K64, (0x656b696c, 0x20646e75), (0x44c8fc20, 0xb9dfa07a)),
        (CipherId::Simeck32_64, K32, (0x6565, 0x6877), (0x770d, 0x2c76)),
        (CipherId::Simeck64_128, K64, (0x656b696c, 0x20646e75), (0x45ce6902, 0x5f7ab7ed)),
    ];
    for (id, key, pt, ct) in vectors {
        let s = id.spec();
        let rk = s.expand_key(&key, s.total_rounds).map_err(|e| e.to_string())?;
        let got = s.encrypt(pt, &rk, s.total_rounds).map_err(|e| e.to_string())?;
        ensure(got == ct, || format!("{id}: got {got:x?}, want {ct:x?}"))?;
        // the straight-line oracle agrees too
        let ks = match id {
            CipherId::Simon32_64 => simon_keys(key, 16, Z0, 32),
            CipherId::Simon64_128 => simon_keys(key, 32, Z3, 44),
            CipherId::Simeck32_64 => simeck_keys(key, 16, 0x9A42BB1F, 32),
            CipherId::Simeck64_128 => simeck_keys(key, 32, 0x938BCA3083F, 44),
        };
        ensure(encrypt(pt, &ks, s.n, (s.a, s.b, s.c)) == ct, || format!("{id}: oracle disagrees"))?;
    }
    for id in CipherId::ALL {
        let s = id.spec();
        let mut rng = SplitMix64::new(100 + id.code() as u64);
        for _ in 0..10_000 {
            let key: Vec<u64> = (0..s.m).map(|_| rng.next_word(s.mask())).collect();
            let rounds = 1 + (rng.next_u64() % s.total_rounds as u64) as usize;
            let rk = s.expand_key(&key, rounds).map_err(|e| e.to_string())?;
            let p = (rng.next_word(s.mask()), rng.next_word(s.mask()));
            let c = s.encrypt(p, &rk, rounds).map_err(|e| e.to_string())?;
            let back = s.decrypt(c, &rk, rounds).map_err(|e| e.to_string())?;
            ensure(back == p, || format!("{id}: round trip failed for {p:x?}"))?;
        }
    }
    Ok("4/4 vectors, 4 x 10^4 round trips".into())
}

fn derived_features() -> Check {
    let mut failures = 0;
    for id in CipherId::ALL {
        let s = id.spec();
        let mut rng = SplitMix64::new(200 + id.code() as u64);
        for _ in 0..10_000 {
            let key: Vec<u64> = (0..s.m).map(|_| rng.next_word(s.mask())).collect();
            let rounds = 2 + (rng.next_u64() % (s.total_rounds as u64 - 1)) as usize;
            let rk = s.expand_key(&key, rounds).map_err(|e| e.to_string())?;
            let p = (rng.next_word(s.mask()), rng.next_word(s.mask()));
            let p2 = (rng.next_word(s.mask()), rng.next_word(s.mask()));
            let t = s.trace(p, &rk, rounds).map_err(|e| e.to_string())?;
            let t2 = s.trace(p2, &rk, rounds).map_err(|e| e.to_string())?;
            let (c, c2) = (t.output(), t2.output());
            let r1 = t.states[rounds - 1].1 ^ t2.states[rounds - 1].1;
            let r2 = t.states[rounds - 2].1 ^ t2.states[rounds - 2].1;
            let (v, m) = partial_delta_r2(&s, c, c2);
            if delta_r_prev(&s, c, c2) != r1 || v != r2 & m || v & !m != 0 {
                failures += 1;
            }
        }
    }
    ensure(failures == 0, || format!("{failures} mismatches"))?;
    Ok("4 x 10^4 trials, 0 mismatches".into())
}

fn round_dp_exactness() -> Check {
    let mut rng = SplitMix64::new(300);
    let alphas: Vec<u64> = (0..200).map(|_| rng.next_word(0xffff)).collect();
    for id in [CipherId::Simon32_64, CipherId::Simeck32_64] {
        let s = id.spec();
        for &alpha in &alphas {
            let row = ddt_row(alpha, 16, (s.a, s.b, s.c));
            let outs = enumerate_outputs(&s, alpha, 16).map_err(|e| e.to_string())?;
            let listed: BTreeMap<u64, u32> = outs.into_iter().collect();
            let mut mass = 0.0;
            for beta in 0..1u64 << 16 {
                let dp = round_dp(&s, alpha, beta).map_err(|e| e.to_string())?;
                let want = row.get(&beta).map(|&c| ddt_weight(c, 16));
                let got = dp.valid.then_some(dp.weight);
                ensure(got == want, || format!("{id} α={alpha:#06x} β={beta:#06x}: {got:?} vs {want:?}"))?;
                ensure(listed.get(&beta).copied() == want, || format!("{id} α={alpha:#06x}: enumeration differs at β={beta:#06x}"))?;
                mass += dp.probability();
            }
            ensure(mass == 1.0, || format!("{id} α={alpha:#06x}: Σ = {mass}"))?;
        }
    }
    Ok("2 ciphers x 200 α x 2^16 β exact".into())
}

/// (input, cap, [(weight, count)])
type CountRow = ((u64, u64), u32, &'static [(u32, u64)]);

fn reference_counts() -> Check {
    let s = CipherSpec::simon32_64();
    let rows: [CountRow; 5] = [
        ((0x0000, 0x0001), 11, &[(8, 20), (9, 4), (10, 232), (11, 352)]),
        ((0x0001, 0x0004), 11, &[(8, 4), (9, 10), (10, 72), (11, 124)]),
        ((0x0001, 0x0104), 13, &[(10, 4), (11, 48), (12, 80), (13, 620)]),
        ((0x0001, 0x0006), 13, &[(10, 4), (11, 8), (12, 72), (13, 296)]),
        ((0x0001, 0x4004), 14, &[(12, 80), (13, 344), (14, 1072)]),
    ];
    let mut bad = Vec::new();
    for ((dl, dr), cap, want) in rows {
        let out = DiffState::new(dl, dr);
        let r = search_characteristics(&s, 3, Constraint::Output(out), cap)
            .map_err(|e| e.to_string())?;
        let want: BTreeMap<u32, u64> = want.iter().copied().collect();
        if r.counts != want {
            let diffs: Vec<String> = want
                .keys()
                .chain(r.counts.keys())
                .collect::<std::collections::BTreeSet<_>>()
                .into_iter()
                .filter(|w| r.counts.get(w) != want.get(w))
                .map(|w| {
                    format!(
                        "2^-{w}: got {}, want {}",
                        r.counts.get(w).unwrap_or(&0),
                        want.get(w).unwrap_or(&0)
                    )
                })
                .collect();
            bad.push(format!("{out} [{}]", diffs.join(", ")));
        }
    }
    ensure(bad.is_empty(), || bad.join("; "))?;
    Ok("5/5 rows exact".into())
}

fn simeck_most_likely() -> Check {
    let s = CipherSpec::simeck32_64();
    let r = most_likely_output(&s, 3, DiffState::new(0, 0x40), 1 << 22, 12, 0x51ec)
        .map_err(|e| e.to_string())?;
    let p = r.estimate.probability;
    ensure(r.output == DiffState::new(0x0140, 0x0080), || {
        format!("most likely output {} (p = 2^{:.3})", r.output, p.log2())
    })?;
    ensure((-4.5f64).exp2() <= p && p <= (-3.5f64).exp2(), || {
        format!("p = 2^{:.3} outside [2^-4.5, 2^-3.5]", p.log2())
    })?;
    Ok(format!("{} with p = 2^{:.3} over 2^22 trials", r.output, p.log2()))
}

fn enumeration() -> Check {
    let n = enum_differences(3, 32).map_err(|e| e.to_string())?.len();
    ensure(n == 5488, || format!("{n} entries"))?;
    Ok("5488 entries".into())
}

const GOLDEN: &str = "47ea386f75db91e2724385b7dcf01488a875016de091541e9abe0438cabd8dc9";

fn dataset_determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let p = DatasetParams::new(CipherId::Simon32_64, 9, Difference::new(0, 0x40));
    for (run, threads) in [1usize, 4, 4, 2].into_iter().enumerate() {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| e.to_string())?;
        let path = dir.path().join(format!("{run}.nds"));
        pool.install(|| generate_to_file(&path, &p, 100, 42))
            .map_err(|e| e.to_string())?;
        let bytes = std::fs::read(&path).map_err(|e| e.to_string())?;
        let digest = format!("{:x}", Sha256::digest(&bytes));
        ensure(digest == GOLDEN, || format!("run {run} on {threads} threads: {digest}"))?;
    }
    Ok("golden digest on 1, 2 and 4 threads, repeated runs".into())
}

fn main() {
    let secs = Duration::from_secs;
    let results = [
        criterion("cipher conformance", Some(secs(5)), cipher_conformance),
        criterion("derived-feature correctness", Some(secs(30)), derived_features),
        criterion("round-DP exactness", Some(secs(120)), round_dp_exactness),
        criterion("reference characteristic counts", Some(secs(300)), reference_counts),
        criterion("SIMECK most likely 3-round output", Some(secs(120)), simeck_most_likely),
        criterion("difference enumeration", None, enumeration),
        criterion("dataset determinism", None, dataset_determinism),
    ];
    let failed = results.iter().filter(|&&ok| !ok).count();
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
