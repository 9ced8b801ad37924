mod common;

use std::collections::{BTreeMap, HashMap};

use common::*;
use proptest::prelude::*;
use simonnd_core::cd::{trails_between, RoundModel};
use simonnd_core::{
    empirical_dp, enumerate_outputs, most_likely_output, round_dp, search_characteristics,
    CipherId, CipherSpec, Constraint, DiffState, SplitMix64,
};

fn abc(s: &CipherSpec) -> (u32, u32, u32) {
    (s.a, s.b, s.c)
}

/// Closed form against the full 2^16-input DDT row, for both 16-bit variants.
#[test]
fn round_dp_matches_exhaustive_ddt() {
    let mut rng = SplitMix64::new(2024);
    let mut alphas: Vec<u64> = (0..256).map(|_| rng.next_word(0xffff)).collect();
    alphas.extend([0, 1, 0x8000, 0xffff, 0x7fff, 0x5555, 0x0101, 0x4004]);
    for id in [CipherId::Simon32_64, CipherId::Simeck32_64] {
        let s = id.spec();
        for &alpha in &alphas {
            let row = ddt_row(alpha, 16, abc(&s));
            let outs = enumerate_outputs(&s, alpha, 16).unwrap();
            assert_eq!(outs.len(), row.len(), "{id} α={alpha:#06x}");
            let mut total = 0.0;
            for (&beta, &count) in &row {
                let dp = round_dp(&s, alpha, beta).unwrap();
                assert!(dp.valid, "{id} α={alpha:#06x} β={beta:#06x}");
                assert_eq!(dp.weight, ddt_weight(count, 16));
                total += dp.probability();
            }
            assert_eq!(total, 1.0);
            for &(beta, w) in &outs {
                assert_eq!(row.get(&beta).map(|&c| ddt_weight(c, 16)), Some(w));
            }
            // and everything outside the row is impossible
            for _ in 0..256 {
                let beta = rng.next_word(0xffff);
                assert_eq!(round_dp(&s, alpha, beta).unwrap().valid, row.contains_key(&beta));
            }
        }
    }
}

/// On 32-bit words every sampled transition must be valid, and the number of
/// inputs hitting a fixed β must match its probability.
#[test]
fn round_dp_on_wide_words() {
    let mut rng = SplitMix64::new(3);
    for id in [CipherId::Simon64_128, CipherId::Simeck64_128] {
        let s = id.spec();
        for _ in 0..200 {
            let alpha = rng.next_word(s.mask());
            let x = rng.next_word(s.mask());
            let beta = s.f(x) ^ s.f(x ^ alpha);
            assert!(round_dp(&s, alpha, beta).unwrap().valid);
        }
        // sparse α: count hits exactly over a 2^20 slice of inputs is not
        // exhaustive, so compare against the probability within 5σ
        let alpha = 0x0000_1001;
        let beta = s.rotl(alpha, s.c as i64);
        let p = round_dp(&s, alpha, beta).unwrap().probability();
        let trials = 1u64 << 18;
        let hits = (0..trials)
            .filter(|_| {
                let x = rng.next_word(s.mask());
                s.f(x) ^ s.f(x ^ alpha) == beta
            })
            .count() as f64;
        let sigma = (trials as f64 * p * (1.0 - p)).sqrt();
        assert!((hits - trials as f64 * p).abs() < 5.0 * sigma, "{id}");
    }
}

/// Brute-force characteristic enumeration built only on DDT rows.
struct Brute {
    n: u32,
    abc: (u32, u32, u32),
    rows: HashMap<u64, BTreeMap<u64, u64>>,
}

impl Brute {
    fn row(&mut self, alpha: u64) -> Vec<(u64, u32)> {
        let (n, abc) = (self.n, self.abc);
        self.rows
            .entry(alpha)
            .or_insert_with(|| ddt_row(alpha, n, abc))
            .iter()
            .map(|(&b, &c)| (b, ddt_weight(c, n)))
            .collect()
    }

    /// Forward from `input`: next state is `(ΔR ^ β, ΔL)`, β from DDT(ΔL).
    fn forward(
        &mut self,
        s: DiffState,
        rounds: usize,
        cap: u32,
        w: u32,
        out: &mut BTreeMap<DiffState, BTreeMap<u32, u64>>,
    ) {
        if rounds == 0 {
            *out.entry(s).or_default().entry(w).or_default() += 1;
            return;
        }
        for (beta, bw) in self.row(s.dl) {
            if w + bw <= cap {
                self.forward(DiffState::new(s.dr ^ beta, s.dl), rounds - 1, cap, w + bw, out);
            }
        }
    }

    /// Backward from `out`: previous state is `(ΔR, ΔL ^ β)`, β from DDT(ΔR).
    fn backward(&mut self, out: DiffState, rounds: usize, cap: u32, w: u32, hist: &mut BTreeMap<u32, u64>) {
        if rounds == 0 {
            *hist.entry(w).or_default() += 1;
            return;
        }
        for (beta, bw) in self.row(out.dr) {
            if w + bw <= cap {
                self.backward(DiffState::new(out.dr, out.dl ^ beta), rounds - 1, cap, w + bw, hist);
            }
        }
    }
}

#[test]
fn search_matches_brute_force_enumeration() {
    for id in [CipherId::Simon32_64, CipherId::Simeck32_64] {
        let s = id.spec();
        let mut brute = Brute {
            n: 16,
            abc: abc(&s),
            rows: HashMap::new(),
        };
        for (out, rounds, cap) in [
            (DiffState::new(0, 1), 2, 8),
            (DiffState::new(0x0440, 0x0100), 2, 10),
            (DiffState::new(1, 4), 3, 9),
            (DiffState::new(0, 1), 3, 10),
        ] {
            let mut hist = BTreeMap::new();
            brute.backward(out, rounds, cap, 0, &mut hist);
            let r = search_characteristics(&s, rounds, Constraint::Output(out), cap).unwrap();
            assert_eq!(r.counts, hist, "{id} {out} r={rounds}");
        }
    }
}

/// `trails_between` agrees with a brute-force forward enumeration for every
/// reachable output.
#[test]
fn trails_between_matches_brute_force() {
    let s = CipherSpec::simon32_64();
    let mut brute = Brute {
        n: 16,
        abc: abc(&s),
        rows: HashMap::new(),
    };
    let input = DiffState::new(0, 0x40);
    let mut by_output = BTreeMap::new();
    brute.forward(input, 3, 8, 0, &mut by_output);
    assert!(by_output.len() > 10);
    for (out, hist) in &by_output {
        assert_eq!(&trails_between(&s, 3, input, *out, 8).unwrap(), hist, "{out}");
    }
    let fwd = search_characteristics(&s, 3, Constraint::Input(input), 8).unwrap();
    let mut total = BTreeMap::new();
    for hist in by_output.values() {
        for (&w, &c) in hist {
            *total.entry(w).or_insert(0) += c;
        }
    }
    assert_eq!(fwd.counts, total);
    assert_eq!(fwd.min_weight, Some(4));
}

/// Exact two-round differential probability. The first two round keys are
/// independent master-key words, so the Markov product is exact:
/// `(l, r) -> (r ^ β1, l) -> (l ^ β2, r ^ β1)`.
fn exact_two_round(s: &CipherSpec, input: DiffState, output: DiffState) -> f64 {
    let m = RoundModel::new(s).unwrap();
    let beta1 = output.dr ^ input.dr;
    let beta2 = output.dl ^ input.dl;
    m.dp(input.dl, beta1).probability() * m.dp(output.dr, beta2).probability()
}

#[test]
fn empirical_dp_within_three_sigma() {
    let s = CipherSpec::simon32_64();
    let input = DiffState::new(0x0001, 0x0000);
    for output in [
        DiffState::new(0x0011, 0x0004),
        DiffState::new(0x0019, 0x0006),
        DiffState::new(0x0411, 0x0104),
        DiffState::new(0x0410, 0x0104),
    ] {
        let p = exact_two_round(&s, input, output);
        assert!(p > 0.0, "{output}");
        let e = empirical_dp(&s, 2, input, output, 1 << 20, 17).unwrap();
        assert!(e.consistent_with(p, 3.0), "{output}: {} vs {p}", e.probability);
    }
    // one round is a single transition
    let e = empirical_dp(&s, 1, input, DiffState::new(0x0004, 0x0001), 1 << 16, 5).unwrap();
    assert!(e.consistent_with(0.25, 3.0));
}

#[test]
fn most_likely_three_round_simon() {
    let s = CipherSpec::simon32_64();
    let r = most_likely_output(&s, 3, DiffState::new(0, 0x40), 1 << 22, 12, 99).unwrap();
    assert_eq!(r.output, DiffState::new(0x0440, 0x0100));
    let p = r.estimate.probability;
    assert!(p >= (-4.5f64).exp2() && p <= (-3.5f64).exp2(), "{p}");
    assert_eq!(r.trail_counts.get(&4), Some(&1));
}

proptest! {
    #[test]
    fn rotation_covariance(alpha in 0u64..1 << 16, beta in 0u64..1 << 16, i in 0i64..16) {
        for id in [CipherId::Simon32_64, CipherId::Simeck32_64] {
            let s = id.spec();
            prop_assert_eq!(
                round_dp(&s, alpha, beta).unwrap(),
                round_dp(&s, s.rotl(alpha, i), s.rotl(beta, i)).unwrap()
            );
        }
    }

    #[test]
    fn search_counts_are_rotation_invariant(dl in 0u64..1 << 16, bit in 0u32..16, i in 0i64..16) {
        let s = CipherSpec::simeck32_64();
        let out = DiffState::new(dl & (1 << bit), 1 << bit);
        let a = search_characteristics(&s, 2, Constraint::Output(out), 6).unwrap();
        let b = search_characteristics(&s, 2, Constraint::Output(out.rotate(i, 16)), 6).unwrap();
        prop_assert_eq!(a.counts, b.counts);
    }
}
