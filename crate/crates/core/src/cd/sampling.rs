//! Monte Carlo estimates of round-reduced differential behaviour.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::search::{trail_aggregate, trails_between};
use crate::cipher::CipherSpec;
use crate::diff::DiffState;
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// Trials handled by one SplitMix64 stream.
const BATCH: u64 = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub hits: u64,
    pub trials: u64,
    pub probability: f64,
    /// Binomial standard error of `probability`.
    pub std_error: f64,
}

impl Estimate {
    pub fn new(hits: u64, trials: u64) -> Self {
        let p = hits as f64 / trials as f64;
        Estimate {
            hits,
            trials,
            probability: p,
            std_error: (p * (1.0 - p) / trials as f64).sqrt(),
        }
    }

    /// Whether `p` lies within `k` standard errors, allowing for the
    /// zero-variance case with a one-hit slack.
    pub fn consistent_with(&self, p: f64, k: f64) -> bool {
        let sigma = (p * (1.0 - p) / self.trials as f64).sqrt();
        (self.probability - p).abs() <= k * sigma + 1.0 / self.trials as f64
    }
}

/// Runs `trials` encryptions of random pairs with input difference `alpha`
/// under random master keys and hands each output difference to `sink`.
fn sample_batches<T: Send>(
    spec: &CipherSpec,
    rounds: usize,
    alpha: DiffState,
    trials: u64,
    seed: u64,
    init: impl Fn() -> T + Sync,
    sink: impl Fn(&mut T, DiffState) + Sync,
) -> Result<Vec<T>> {
    if rounds > spec.total_rounds {
        return Err(Error::Range(format!(
            "{rounds} rounds requested for {}",
            spec.name()
        )));
    }
    let batches = trials.div_ceil(BATCH);
    (0..batches)
        .into_par_iter()
        .map(|j| {
            let mut rng = SplitMix64::stream(seed, j);
            let mut acc = init();
            let n = BATCH.min(trials - j * BATCH);
            let mask = spec.mask();
            let mut key = vec![0u64; spec.m];
            for _ in 0..n {
                key.iter_mut().for_each(|k| *k = rng.next_word(mask));
                let rk = spec.expand_key(&key, rounds)?;
                let p = (rng.next_word(mask), rng.next_word(mask));
                let c = spec.encrypt_with(p, rk.as_slice());
                let c2 = spec.encrypt_with(alpha.apply(p), rk.as_slice());
                sink(&mut acc, DiffState::of(c, c2));
            }
            Ok(acc)
        })
        .collect()
}

/// Fraction of random pairs with difference `alpha` that reach `beta`.
pub fn empirical_dp(
    spec: &CipherSpec,
    rounds: usize,
    alpha: DiffState,
    beta: DiffState,
    trials: u64,
    seed: u64,
) -> Result<Estimate> {
    if trials == 0 {
        return Err(Error::Range("at least one trial".into()));
    }
    let hits: u64 = sample_batches(
        spec,
        rounds,
        alpha,
        trials,
        seed,
        || 0u64,
        |h, d| *h += (d == beta) as u64,
    )?
    .into_iter()
    .sum();
    Ok(Estimate::new(hits, trials))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LikelyOutput {
    pub cipher: String,
    pub rounds: usize,
    pub input: DiffState,
    pub output: DiffState,
    pub estimate: Estimate,
    pub weight_cap: u32,
    /// Characteristics from `input` to `output` per weight, up to the cap.
    pub trail_counts: std::collections::BTreeMap<u32, u64>,
    /// `Σ 2^-weight` over those characteristics.
    pub trail_aggregate: f64,
    /// Other outputs statistically tied with the winner, in rank order.
    pub runners_up: Vec<(DiffState, u64)>,
}

/// The most frequent output difference `rounds` rounds after `alpha`.
///
/// Outputs whose sampled counts are within four binomial standard errors of
/// the top count are treated as tied. Ties are ranked by trail aggregate
/// (descending), then lexicographically on `(ΔL, ΔR)`.
pub fn most_likely_output(
    spec: &CipherSpec,
    rounds: usize,
    alpha: DiffState,
    trials: u64,
    weight_cap: u32,
    seed: u64,
) -> Result<LikelyOutput> {
    if trials == 0 {
        return Err(Error::Range("at least one trial".into()));
    }
    let parts = sample_batches(
        spec,
        rounds,
        alpha,
        trials,
        seed,
        HashMap::<DiffState, u64>::new,
        |h, d| *h.entry(d).or_default() += 1,
    )?;
    let mut hist: HashMap<DiffState, u64> = HashMap::new();
    for part in parts {
        for (d, c) in part {
            *hist.entry(d).or_default() += c;
        }
    }
    let top = *hist.values().max().expect("at least one trial");
    let slack = 4.0 * (top as f64 * (1.0 - top as f64 / trials as f64)).sqrt();
    let floor = (top as f64 - slack).max(1.0);
    let mut tied: Vec<(DiffState, u64, f64, std::collections::BTreeMap<u32, u64>)> = hist
        .iter()
        .filter(|(_, &c)| c as f64 >= floor)
        .map(|(&d, &c)| {
            let counts = trails_between(spec, rounds, alpha, d, weight_cap)?;
            Ok((d, c, trail_aggregate(&counts), counts))
        })
        .collect::<Result<_>>()?;
    tied.sort_by(|x, y| y.2.total_cmp(&x.2).then(x.0.cmp(&y.0)));
    let (output, hits, aggregate, counts) = tied.remove(0);
    Ok(LikelyOutput {
        cipher: spec.name().to_string(),
        rounds,
        input: alpha,
        output,
        estimate: Estimate::new(hits, trials),
        weight_cap,
        trail_counts: counts,
        trail_aggregate: aggregate,
        runners_up: tied.into_iter().map(|(d, c, _, _)| (d, c)).collect(),
    })
}
